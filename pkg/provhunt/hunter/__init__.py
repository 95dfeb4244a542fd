from .core import (
    HuntVerdict, HuntReport, score_graphs, hunt, hunt_exhaustive, evaluate,
    threshold_sweep, labels_from_entities, save_report
)

__all__ = [
    "HuntVerdict", "HuntReport", "score_graphs", "hunt", "hunt_exhaustive",
    "evaluate", "threshold_sweep", "labels_from_entities", "save_report"
]
