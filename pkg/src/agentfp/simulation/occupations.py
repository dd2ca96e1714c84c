"""Synthetic taxonomy with planted communities and community-aligned agents."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from agentfp.occupation.taxonomy import AgentProfile, Taxonomy


@dataclass
class PlantedWorld:
    taxonomy: Taxonomy
    partition: dict  # occupation code -> community id
    labels: dict  # community id -> label
    agents: list  # AgentProfile
    agent_home: dict  # agent id -> community id

    @property
    def communities(self) -> list:
        return sorted(self.labels, key=int)


def planted_world(n_communities: int = 12, occupations_per: int = 8, tasks_per: int = 4,
                  dwas_per_task: tuple = (3, 6), pool_size: int = 40, shared_pool: int = 30,
                  p_shared: float = 0.15, agents_per: int = 5, agent_dwas: tuple = (8, 15),
                  seed: int = 0) -> PlantedWorld:
    """Occupations draw most task DWAs from their community's pool, the rest from a shared pool.

    Agents draw their DWAs the same way from their home community's pool.
    """
    rng = np.random.default_rng(seed)
    pools = [[f"D{c:02d}.{k:03d}" for k in range(pool_size)] for c in range(n_communities)]
    shared = [f"DS.{k:03d}" for k in range(shared_pool)]

    def draw(pool, count):
        out = set()
        for _ in range(count):
            src = shared if rng.random() < p_shared else pool
            out.add(src[rng.integers(len(src))])
        return out

    tasks, links, partition = {}, {}, {}
    titles = {}
    for c in range(n_communities):
        for j in range(occupations_per):
            code = f"{c:02d}-{j:04d}.00"
            partition[code] = str(c)
            titles[code] = f"Occupation {c}.{j}"
            tasks[code] = []
            for t in range(tasks_per):
                tid = f"T{c:02d}{j:03d}{t:02d}"
                tasks[code].append(tid)
                links[tid] = draw(pools[c], int(rng.integers(dwas_per_task[0], dwas_per_task[1] + 1)))
    taxonomy = Taxonomy.from_mapping(tasks, links, titles)

    agents, home = [], {}
    for c in range(n_communities):
        for j in range(agents_per):
            aid = f"agent-{c:02d}-{j:02d}"
            agents.append(AgentProfile(aid, draw(pools[c], int(rng.integers(agent_dwas[0], agent_dwas[1] + 1)))))
            home[aid] = str(c)
    labels = {str(c): f"Community {c}" for c in range(n_communities)}
    return PlantedWorld(taxonomy, partition, labels, agents, home)


def planted_affinity(world: PlantedWorld, community: str, on: float = 1.0, off: float = 0.05) -> dict:
    return {a.agent_id: (on if world.agent_home[a.agent_id] == community else off) for a in world.agents}
