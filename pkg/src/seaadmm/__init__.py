"""SEA-ADMM: multicast beamforming via a two-level ADMM on the dual SDP
plus successive elimination of the second eigendirection."""
from .netsim import ConfigError, GeometryConfig, LargeScaleParams, generate_network
from .oracle import Certificate, Verdict, certify
from .problem import Kind, SdpProblem, build_mmf, build_qos, sum_power_variant
from .sea import SeaConfig, SolveReport, run_sea
from .solver import SolverConfig, solve_dual

__all__ = [
    "Certificate", "ConfigError", "GeometryConfig", "Kind", "LargeScaleParams",
    "SdpProblem", "SeaConfig", "SolveReport", "SolverConfig", "Verdict",
    "build_mmf", "build_qos", "certify", "generate_network", "run_sea",
    "solve_dual", "sum_power_variant",
]
