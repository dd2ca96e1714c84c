"""Virtual users with a planted community and noisy usage ranks."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from agentfp.errors import InsufficientAgents, ValidationError
from agentfp.occupation.profiling import CorrelationMatrix, UsageRanks


@dataclass(frozen=True)
class VirtualUserSpec:
    true_community: str
    affinity: dict  # agent id -> selection weight
    n: int = 5
    seed: int | tuple = 0

    def __post_init__(self):
        w = np.array(list(self.affinity.values()), dtype=np.float64)
        if len(w) == 0 or np.any(w < 0) or not np.any(w > 0):
            raise ValidationError("affinity weights must be non-negative and not all zero")
        if self.n < 1:
            raise ValidationError("n must be >= 1")


def gen_user(spec: VirtualUserSpec) -> tuple[UsageRanks, str]:
    """Draw ``n`` distinct agents, one at a time with probability proportional to weight.

    The drawn agents are then ordered by weight (heaviest first) with random
    tie-breaking.  Zero-weight agents are never selected.
    """
    agents = list(spec.affinity)
    w = np.array([spec.affinity[a] for a in agents], dtype=np.float64)
    support = int((w > 0).sum())
    if spec.n > support:
        raise InsufficientAgents(f"asked for {spec.n} agents but only {support} have positive weight")
    rng = np.random.default_rng(spec.seed)
    remaining = w.copy()
    picked = []
    for _ in range(spec.n):
        k = int(rng.choice(len(agents), p=remaining / remaining.sum()))
        picked.append(k)
        remaining[k] = 0.0
    noise = rng.random(len(picked))
    order = sorted(range(len(picked)), key=lambda j: (-w[picked[j]], noise[j]))
    ranked = tuple(agents[picked[j]] for j in order)
    return UsageRanks(ranked, tuple(float(w[picked[j]]) for j in order)), spec.true_community


def perturb_ranks(ranks, p: float, seed=0) -> UsageRanks:
    """Visit positions in order; with probability ``p`` swap with a uniformly chosen other position."""
    if not 0 <= p <= 1:
        raise ValidationError(f"p must lie in [0, 1], got {p}")
    items = list(ranks.ranked_agents if isinstance(ranks, UsageRanks) else ranks)
    n = len(items)
    rng = np.random.default_rng(seed)
    if n >= 2:
        for i in range(n):
            if rng.random() < p:
                k = int(rng.integers(n - 1))
                j = k + (k >= i)
                items[i], items[j] = items[j], items[i]
    return UsageRanks(tuple(items))


def perturb_rank_matrix(M: np.ndarray, p: float, rng: np.random.Generator) -> np.ndarray:
    """Row-wise ``perturb_ranks`` for an (users, n) array, drawing from one generator.

    Same swap model, different random stream: results match ``perturb_ranks``
    in distribution, not draw for draw.
    """
    M = np.array(M, copy=True)
    users, n = M.shape
    if n < 2 or p == 0:
        return M
    rows = np.arange(users)
    for i in range(n):
        swap = rng.random(users) < p
        k = rng.integers(n - 1, size=users)
        j = k + (k >= i)
        r = rows[swap]
        a, b = M[r, i].copy(), M[r, j[swap]].copy()
        M[r, i], M[r, j[swap]] = b, a
    return M


def affinity_from_rmatrix(cm: CorrelationMatrix, community: int, sharpness: float = 2.0) -> dict:
    """Selection weights RCA^sharpness = exp(sharpness * R) for one community column."""
    col = cm.R[:, community]
    return dict(zip(cm.agents, np.exp(sharpness * (col - col.max()))))


def gen_users_from_rmatrix(cm: CorrelationMatrix, count: int, seed: int = 0, n: int = 5,
                           sharpness: float = 2.0) -> list[tuple[str, UsageRanks, str]]:
    """``count`` users with uniformly drawn true communities (labels from ``cm``)."""
    rng = np.random.default_rng(seed)
    users = []
    for u in range(count):
        c = int(rng.integers(len(cm.communities)))
        spec = VirtualUserSpec(cm.communities[c], affinity_from_rmatrix(cm, c, sharpness), n, (seed, u))
        ranks, truth = gen_user(spec)
        users.append((f"user-{u:06d}", ranks, truth))
    return users


def write_users(users, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "true_community", "ranked_agents"])
        for uid, ranks, truth in users:
            w.writerow([uid, "" if truth is None else truth, ";".join(ranks.ranked_agents)])


def read_users(path) -> list[tuple[str, UsageRanks, str | None]]:
    """Read ``user_id,true_community,ranked_agents`` (agents joined by ';')."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            agents = tuple(a for a in row["ranked_agents"].split(";") if a)
            truth = (row.get("true_community") or "").strip() or None
            out.append((row["user_id"], UsageRanks(agents), truth))
    return out
