"""Agent-to-community affinity, comparative-advantage scores and rank aggregation."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from agentfp.errors import DegenerateMatrix, DegenerateNetwork, EmptyProfile, EmptyRanks, ValidationError
from agentfp.occupation.network import OccupationNetwork, sorensen_matrix
from agentfp.occupation.taxonomy import AgentProfile
from agentfp.validation import check_probability

CLAMP_EPS = 1e-9


def agent_similarities(network: OccupationNetwork, dwa_set) -> np.ndarray:
    """Virtual edge weights between an agent and every occupation node."""
    return sorensen_matrix([frozenset(dwa_set)], list(network.profiles))[0]


def probe_agent(network: OccupationNetwork, agent) -> np.ndarray:
    """Modularity gain of attaching the agent to each community (vs. keeping it alone).

    The agent joins the graph as an extra node with edges A_ia; then
    m' = m + s_a and community strengths are taken on the augmented graph:

        ΔQ_k = (1/m') (Σ_{i∈C_k} A_ia − s_a s'_{C_k} / 2m')

    The network and its partition are left untouched.
    """
    if network.partition is None:
        raise ValidationError("network has no community partition installed")
    dwas = agent.dwa_set if isinstance(agent, AgentProfile) else frozenset(agent)
    if not dwas:
        raise EmptyProfile(getattr(agent, "agent_id", "agent"))
    a = agent_similarities(network, dwas)
    s_a = a.sum()
    m_aug = network.m + s_a
    if m_aug <= 0:
        raise DegenerateNetwork("augmented graph has no edge weight")
    K = network.K
    links = np.bincount(network.partition, weights=a, minlength=K)
    strength = np.bincount(network.partition, weights=network.strengths + a, minlength=K)
    return (links - s_a * strength / (2 * m_aug)) / m_aug


def probe_agents(network: OccupationNetwork, agents) -> np.ndarray:
    return np.stack([probe_agent(network, a) for a in agents])


@dataclass
class CorrelationMatrix:
    """Log comparative-advantage scores, agents x communities."""

    R: np.ndarray
    Q_raw: np.ndarray
    agents: list
    communities: list
    provenance: str = ""
    clamped: int = 0
    _row: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._row = {a: i for i, a in enumerate(self.agents)}

    def __contains__(self, agent):
        return agent in self._row

    def row(self, agent) -> np.ndarray:
        return self.R[self._row[agent]]


def rca(Q: np.ndarray) -> np.ndarray:
    """Double-ratio comparative advantage of a positive matrix.

    Ratios are formed in extended precision and rounded once, so a uniform
    matrix gives exactly 1 everywhere.
    """
    Q = np.asarray(Q, dtype=np.longdouble)
    row = Q.sum(axis=1, keepdims=True)
    col = Q.sum(axis=0, keepdims=True)
    total = Q.sum()
    if total <= 0 or np.any(row <= 0) or np.any(col <= 0):
        raise DegenerateMatrix("a row, column or the grand total is not positive")
    return ((Q / row) / (col / total)).astype(np.float64)


def rca_scores(Q_raw, agents=None, communities=None, eps: float = CLAMP_EPS, provenance: str = "") -> CorrelationMatrix:
    """Clamp affinities at ``eps``, then R = ln RCA."""
    Q_raw = np.asarray(Q_raw, dtype=np.float64)
    if Q_raw.ndim != 2 or Q_raw.shape[0] < 1 or Q_raw.shape[1] < 2:
        raise ValidationError(f"need >= 1 agent and >= 2 communities, got shape {Q_raw.shape}")
    if not eps > 0:
        raise ValidationError("eps must be positive")
    low = Q_raw < eps
    if low.any():
        warnings.warn(f"clamped {int(low.sum())} non-positive or tiny affinities to {eps:g}", stacklevel=2)
    Q = np.where(low, eps, Q_raw)
    R = np.log(rca(Q))
    agents = list(agents) if agents is not None else [str(i) for i in range(Q.shape[0])]
    communities = list(communities) if communities is not None else [str(k) for k in range(Q.shape[1])]
    return CorrelationMatrix(R, Q_raw, agents, communities, provenance, int(low.sum()))


def correlate(network: OccupationNetwork, agents, eps: float = CLAMP_EPS) -> CorrelationMatrix:
    Q = probe_agents(network, agents)
    return rca_scores(Q, [a.agent_id for a in agents], list(network.community_labels), eps, network.digest)


@dataclass(frozen=True)
class UsageRanks:
    """Agents ordered by usage, most used first."""

    ranked_agents: tuple
    frequencies: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "ranked_agents", tuple(self.ranked_agents))
        if not self.ranked_agents:
            raise EmptyRanks("rank list is empty")
        if len(set(self.ranked_agents)) != len(self.ranked_agents):
            raise ValidationError("rank list contains duplicate agents")
        if self.frequencies is not None:
            object.__setattr__(self, "frequencies", tuple(self.frequencies))
            if len(self.frequencies) != len(self.ranked_agents):
                raise ValidationError("frequencies must align with ranked agents")

    def __iter__(self):
        return iter(self.ranked_agents)

    def __len__(self):
        return len(self.ranked_agents)

    @classmethod
    def from_frequencies(cls, frequencies: dict) -> "UsageRanks":
        """Rank by descending frequency, ties by agent id."""
        items = sorted(frequencies.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls(tuple(a for a, _ in items), tuple(f for _, f in items))


def ewma_weights(n: int, alpha: float) -> np.ndarray:
    return alpha * (1 - alpha) ** np.arange(n)


def infer_occupation(cm: CorrelationMatrix, ranked_agents, alpha: float = 0.5):
    """Aggregate ranked agents' score rows with decaying weights α(1−α)^(i−1).

    Agents missing from ``cm`` (for instance "unmonitored") are skipped with a
    warning but keep their rank position, so later agents are not promoted.
    Returns ``(scores, ranking)``; the ranking orders community indices by
    descending score, ties going to the lower index.
    """
    check_probability(alpha, "alpha")
    ranked_agents = list(ranked_agents)
    if not ranked_agents:
        raise EmptyRanks("rank list is empty")
    w = ewma_weights(len(ranked_agents), alpha)
    scores = np.zeros(cm.R.shape[1])
    unknown = []
    for weight, agent in zip(w, ranked_agents):
        if agent in cm:
            scores += weight * cm.row(agent)
        else:
            unknown.append(agent)
    if len(unknown) == len(ranked_agents):
        raise EmptyRanks("no ranked agent is present in the correlation matrix")
    if unknown:
        warnings.warn(f"skipped {len(unknown)} unknown agents: {unknown[:3]}", stacklevel=2)
    return scores, rank_communities(scores)


def score_rank_matrix(cm: CorrelationMatrix, ranks, alpha: float = 0.5) -> np.ndarray:
    """Vectorised ``infer_occupation`` scores for equal-length rank lists (users x n).

    Unknown agents contribute nothing but keep their position, as above.
    """
    check_probability(alpha, "alpha")
    ranks = np.asarray(ranks, dtype=object)
    if ranks.ndim != 2 or ranks.shape[1] == 0:
        raise EmptyRanks("need a non-empty (users, n) array of agent ids")
    idx = np.array([[cm._row.get(a, -1) for a in row] for row in ranks], dtype=np.int64)
    known = idx >= 0
    if not known.any(axis=1).all():
        raise EmptyRanks("a rank list has no agent present in the correlation matrix")
    w = ewma_weights(ranks.shape[1], alpha) * known
    return np.einsum("un,unk->uk", w, cm.R[np.where(known, idx, 0)])


def rank_communities(scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores)
    return np.lexsort((np.arange(len(scores)), -scores))


def topk_hit(ranking, true_community, K: int) -> bool:
    if K < 1:
        raise ValueError("K must be >= 1")
    return true_community in list(ranking[:K])


def write_rmatrix(cm: CorrelationMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["agent_id"] + list(cm.communities))
        for agent, row in zip(cm.agents, cm.R):
            w.writerow([agent] + [repr(float(v)) for v in row])


def read_rmatrix(path) -> CorrelationMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) < 3:
        raise ValidationError(f"{path}: expected a header with agent_id and >= 2 communities")
    communities = rows[0][1:]
    agents = [r[0] for r in rows[1:]]
    R = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=np.float64)
    if R.shape != (len(agents), len(communities)):
        raise ValidationError(f"{path}: ragged matrix")
    return CorrelationMatrix(R, np.full_like(R, np.nan), agents, communities, "file:" + str(path))
