"""
Discrete-time simulation and analysis of robotic message ferrying.
"""
__version__ = "1.0.0"

from .analytics import closed_form_delay, lambda_hat_max, lambda_max, simulate_delay
from .capacity import ScheduleProgram, decompose, in_capacity_region, in_inner_bound, synthesize_schedule
from .config import ExperimentConfig, load_config
from .engine import Allocation, Metrics, SimState, run, step
from .model import FlowSpec, NetworkSpec, Point, RateModel
from .scheduler import Scheduler
from .scheduler.brute_force import BruteForceScheduler
from .scheduler.cbmf import CBMFScheduler
from .scheduler.static import StaticScheduler

__all__ = [
    "Allocation",
    "BruteForceScheduler",
    "CBMFScheduler",
    "ExperimentConfig",
    "FlowSpec",
    "Metrics",
    "NetworkSpec",
    "Point",
    "RateModel",
    "ScheduleProgram",
    "Scheduler",
    "SimState",
    "StaticScheduler",
    "closed_form_delay",
    "decompose",
    "in_capacity_region",
    "in_inner_bound",
    "lambda_hat_max",
    "lambda_max",
    "load_config",
    "run",
    "simulate_delay",
    "step",
    "synthesize_schedule",
]
