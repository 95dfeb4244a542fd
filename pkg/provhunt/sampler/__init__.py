from .rules import rule_allows, RULE_SETS, ANY_RULE
from .core import (
    SamplingConfig, ThreatGraph, SampledEdge, Candidate, candidates, sample,
    build_attr_graph
)
from .metrics import coverage_noise, coverage_noise_summary

__all__ = [
    "rule_allows", "RULE_SETS", "ANY_RULE", "SamplingConfig", "ThreatGraph",
    "SampledEdge", "Candidate", "candidates", "sample", "build_attr_graph",
    "coverage_noise", "coverage_noise_summary"
]
