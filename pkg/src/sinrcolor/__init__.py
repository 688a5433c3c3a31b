"""Packet-level SINR simulator for distributed node-coloring protocols."""
from .comms import CommParams
from .deployment import DeploymentSpec, Strategy, Topology, build_topology, generate
from .harness import ExperimentSpec, Scenario, calibrate_lb, run_experiment
from .kernel import KernelConfig, Mode, Simulator
from .metrics import ConflictTracker, RunMetrics
from .mobility import MobilitySpec, RandomDirection
from .sinr import SinrParams, broadcast_range, sinr_feasible, transmission_range

__version__ = "0.1.0"
