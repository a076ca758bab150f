"""Exceptions that terminate a simulation run.

Each carries a short ``kind`` string used in fault records and summaries.
"""
from __future__ import annotations


class SimulationFault(RuntimeError):
    kind = "fault"

    def __init__(self, message: str, axis: str | None = None):
        self.axis = axis
        super().__init__(message)


class SingularityFault(SimulationFault):
    kind = "singularity"


class ObserverDivergence(SimulationFault):
    kind = "observer_divergence"


class AllocationInfeasible(SimulationFault):
    kind = "allocation_infeasible"

    def __init__(self, message: str, channel: str):
        self.channel = channel
        super().__init__(message)


class AllocationSingular(SimulationFault):
    kind = "allocation_singular"
