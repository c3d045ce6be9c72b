from tentcocycle.configuration import Configuration, DrivingConfig, RunConfig
from tentcocycle.cone_metric import ConeParams
from tentcocycle.driving import DrivingStream, make_driving
from tentcocycle.interval_maps import PairedTentParams, PiecewiseLinearMap, make_paired_tent
from tentcocycle.orchestrator import PipelineOrchestrator
from tentcocycle.step_functions import StepFunction

__all__ = [
    "Configuration",
    "ConeParams",
    "DrivingConfig",
    "DrivingStream",
    "PairedTentParams",
    "PiecewiseLinearMap",
    "PipelineOrchestrator",
    "RunConfig",
    "StepFunction",
    "make_driving",
    "make_paired_tent",
]
