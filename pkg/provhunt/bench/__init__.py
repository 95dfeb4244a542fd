from .scenario import (
    ScenarioSpec, Scenario, generate, write_scenario, query_graph, CAMPAIGNS,
    ORIGIN_MS
)
from .naive import NaiveStore, ppg_edge_multiset, naive_edge_multiset
from .core import (
    bench_memory, bench_linear, bench_sampling, bench_hunt, campaign_pois,
    union_graph, write_frame, SAMPLING_KS
)
from .suites import available, run_suite, train_benign_model

__all__ = [
    "ScenarioSpec", "Scenario", "generate", "write_scenario", "query_graph",
    "CAMPAIGNS", "ORIGIN_MS", "NaiveStore", "ppg_edge_multiset",
    "naive_edge_multiset", "bench_memory", "bench_linear", "bench_sampling",
    "bench_hunt", "campaign_pois", "union_graph", "write_frame",
    "SAMPLING_KS", "available", "run_suite", "train_benign_model"
]
