from agentfp.occupation.estimator import OccupationProfiler
from agentfp.occupation.network import (
    OccupationNetwork,
    build_network,
    detect_communities,
    load_network,
    louvain,
    modularity,
    read_partition,
    save_network,
    set_partition,
    sorensen,
    sorensen_matrix,
    write_partition,
)
from agentfp.occupation.profiling import (
    CLAMP_EPS,
    CorrelationMatrix,
    UsageRanks,
    agent_similarities,
    correlate,
    ewma_weights,
    infer_occupation,
    probe_agent,
    probe_agents,
    rank_communities,
    rca,
    rca_scores,
    read_rmatrix,
    score_rank_matrix,
    topk_hit,
    write_rmatrix,
)
from agentfp.occupation.taxonomy import (
    AgentProfile,
    Occupation,
    Taxonomy,
    dwa_profile,
    load_agent_profiles,
    load_onet_dir,
    load_taxonomy,
    write_agent_profiles,
    write_taxonomy,
)

__all__ = [
    "CLAMP_EPS",
    "AgentProfile",
    "CorrelationMatrix",
    "Occupation",
    "OccupationNetwork",
    "OccupationProfiler",
    "Taxonomy",
    "UsageRanks",
    "agent_similarities",
    "build_network",
    "correlate",
    "detect_communities",
    "dwa_profile",
    "ewma_weights",
    "infer_occupation",
    "load_agent_profiles",
    "load_network",
    "load_onet_dir",
    "load_taxonomy",
    "louvain",
    "modularity",
    "probe_agent",
    "probe_agents",
    "rank_communities",
    "rca",
    "rca_scores",
    "read_partition",
    "read_rmatrix",
    "score_rank_matrix",
    "save_network",
    "set_partition",
    "sorensen",
    "sorensen_matrix",
    "topk_hit",
    "write_agent_profiles",
    "write_partition",
    "write_rmatrix",
    "write_taxonomy",
]
