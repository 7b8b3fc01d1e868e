"""Latency-minimising task offloading for collaborative multi-UAV edge computing."""
from .channel import ChannelState, compute_channel
from .cost import DecisionSet, objective
from .errors import InfeasibleError, InfeasibleRateError
from .orchestrator import BcdOptions, SolveReport, solve
from .scenario import NetworkScenario, generate_random, load, save

__all__ = [
    "BcdOptions", "ChannelState", "DecisionSet", "InfeasibleError", "InfeasibleRateError",
    "NetworkScenario", "SolveReport", "compute_channel", "generate_random", "load",
    "objective", "save", "solve",
]
__version__ = "0.1.0"
