"""Simulator for a measurement-driven quantum engine of Ising-coupled qubits.

The cycle is thermal preparation, a weak sigma_x measurement, unitary
feedback and a reset priced at the Landauer bound. The optimiser finds the
feedback angles that maximise extracted work.
"""

from .engine import CycleMetrics, DetectorSpec, MeasurementBranch, SystemSpec, cycle_metrics, measure
from .optimizer import SearchConfig, StationaryPoint, grid_search, hybrid_search, optimal_feedback

__all__ = [
    "CycleMetrics",
    "DetectorSpec",
    "MeasurementBranch",
    "SearchConfig",
    "StationaryPoint",
    "SystemSpec",
    "cycle_metrics",
    "grid_search",
    "hybrid_search",
    "measure",
    "optimal_feedback",
]

__version__ = "0.1.0"
