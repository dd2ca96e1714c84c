from agentfp.simulation.occupations import PlantedWorld, planted_affinity, planted_world
from agentfp.simulation.traffic import (
    BEHAVIOR_LABELS,
    BehaviorArchetype,
    Phase,
    SizeDist,
    gen_trace,
    gen_traffic,
    library_margins,
    load_archetypes,
    signature,
)
from agentfp.simulation.users import (
    VirtualUserSpec,
    affinity_from_rmatrix,
    gen_user,
    gen_users_from_rmatrix,
    perturb_rank_matrix,
    perturb_ranks,
    read_users,
    write_users,
)

__all__ = [
    "BEHAVIOR_LABELS",
    "BehaviorArchetype",
    "Phase",
    "PlantedWorld",
    "SizeDist",
    "VirtualUserSpec",
    "affinity_from_rmatrix",
    "gen_trace",
    "gen_traffic",
    "gen_user",
    "gen_users_from_rmatrix",
    "library_margins",
    "load_archetypes",
    "perturb_rank_matrix",
    "perturb_ranks",
    "planted_affinity",
    "planted_world",
    "read_users",
    "signature",
    "write_users",
]
