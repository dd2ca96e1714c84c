"""Occupation / task / DWA taxonomy (O*NET-shaped CSV input)."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from agentfp.errors import DanglingReference, DuplicateCode, EmptyProfile, UnknownOccupation


@dataclass(frozen=True)
class Occupation:
    code: str
    title: str = ""
    exposure: float | None = None


@dataclass(frozen=True)
class AgentProfile:
    agent_id: str
    dwa_set: frozenset

    def __post_init__(self):
        object.__setattr__(self, "dwa_set", frozenset(self.dwa_set))


@dataclass
class Taxonomy:
    occupations: dict  # code -> Occupation
    task_owner: dict  # task_id -> occupation code
    task_dwas: dict = field(default_factory=dict)  # task_id -> frozenset of DWA ids

    def __post_init__(self):
        for task, occ in self.task_owner.items():
            if occ not in self.occupations:
                raise DanglingReference(f"task {task!r} names unknown occupation {occ!r}")
        for task in self.task_dwas:
            if task not in self.task_owner:
                raise DanglingReference(f"DWA link names unknown task {task!r}")
        self.task_dwas = {t: frozenset(d) for t, d in self.task_dwas.items()}
        self._tasks_of = {code: [] for code in self.occupations}
        for task, occ in self.task_owner.items():
            self._tasks_of[occ].append(task)

    @property
    def dwas(self) -> frozenset:
        return frozenset().union(*self.task_dwas.values()) if self.task_dwas else frozenset()

    def counts(self) -> tuple[int, int, int]:
        return len(self.occupations), len(self.task_owner), len(self.dwas)

    def tasks_of(self, code: str) -> list:
        if code not in self.occupations:
            raise UnknownOccupation(code)
        return list(self._tasks_of[code])

    @classmethod
    def from_mapping(cls, tasks: dict, links: dict, titles: dict | None = None,
                     exposure: dict | None = None) -> "Taxonomy":
        """``tasks``: occupation -> task ids; ``links``: task -> DWA ids."""
        titles, exposure = titles or {}, exposure or {}
        occs = {c: Occupation(c, titles.get(c, ""), exposure.get(c)) for c in tasks}
        owner = {}
        for code, ts in tasks.items():
            for t in ts:
                if t in owner:
                    raise DuplicateCode(f"task {t!r} belongs to both {owner[t]!r} and {code!r}")
                owner[t] = code
        return cls(occs, owner, {t: frozenset(d) for t, d in links.items()})


def dwa_profile(taxonomy: Taxonomy, code: str) -> frozenset:
    """Union of the DWAs linked to an occupation's tasks."""
    out = set()
    for task in taxonomy.tasks_of(code):
        out |= taxonomy.task_dwas.get(task, frozenset())
    return frozenset(out)


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        yield from csv.DictReader(fh)


def load_taxonomy(occupations_csv, tasks_csv, dwa_links_csv) -> Taxonomy:
    occs = {}
    for row in _rows(occupations_csv):
        code = row["code"].strip()
        if code in occs:
            raise DuplicateCode(f"occupation code {code!r} appears twice")
        exp = (row.get("exposure") or "").strip()
        occs[code] = Occupation(code, (row.get("title") or "").strip(), float(exp) if exp else None)

    owner = {}
    for row in _rows(tasks_csv):
        task, occ = row["task_id"].strip(), row["occupation_code"].strip()
        if task in owner:
            raise DuplicateCode(f"task id {task!r} appears twice")
        if occ not in occs:
            raise DanglingReference(f"task {task!r} names unknown occupation {occ!r}")
        owner[task] = occ

    links: dict = {}
    for row in _rows(dwa_links_csv):
        task, dwa = row["task_id"].strip(), row["dwa_id"].strip()
        if task not in owner:
            raise DanglingReference(f"DWA link names unknown task {task!r}")
        links.setdefault(task, set()).add(dwa)
    return Taxonomy(occs, owner, links)


def load_onet_dir(directory) -> Taxonomy:
    d = Path(directory)
    return load_taxonomy(d / "occupations.csv", d / "tasks.csv", d / "dwa_links.csv")


def load_agent_profiles(path, known_dwas=None) -> list[AgentProfile]:
    """Read ``agent_id,dwa_id`` pairs; agents keep first-appearance order.

    With ``known_dwas`` given, a DWA outside it raises ``DanglingReference``.
    """
    sets: dict = {}
    for row in _rows(path):
        agent, dwa = row["agent_id"].strip(), row["dwa_id"].strip()
        if known_dwas is not None and dwa not in known_dwas:
            raise DanglingReference(f"agent {agent!r} references unknown DWA {dwa!r}")
        sets.setdefault(agent, set()).add(dwa)
    profiles = [AgentProfile(a, d) for a, d in sets.items()]
    for p in profiles:
        if not p.dwa_set:
            raise EmptyProfile(p.agent_id)
    return profiles


def write_taxonomy(taxonomy: Taxonomy, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "occupations.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["code", "title", "exposure"])
        for o in taxonomy.occupations.values():
            w.writerow([o.code, o.title, "" if o.exposure is None else repr(o.exposure)])
    with open(d / "tasks.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["task_id", "occupation_code"])
        for t, o in taxonomy.task_owner.items():
            w.writerow([t, o])
    with open(d / "dwa_links.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["task_id", "dwa_id"])
        for t, dwas in taxonomy.task_dwas.items():
            for dwa in sorted(dwas):
                w.writerow([t, dwa])


def write_agent_profiles(profiles, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["agent_id", "dwa_id"])
        for p in profiles:
            for dwa in sorted(p.dwa_set):
                w.writerow([p.agent_id, dwa])
