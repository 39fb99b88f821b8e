from .model import (
    KINDS, RESONANCE_THRESHOLD, C6Result, Channel, ResonanceError, SpeciesC6,
    build_channels, c6_second_order, dressed_c6, pair_factor, perturbative_radius,
)
from .oracle import OracleError, OracleFit, oracle_c6
from .scan import (
    C6Scan, ZeroCrossing, evaluate_point, find_zeros, scan_c6, scan_function,
    write_scan_csv, zeros_to_json,
)

__all__ = [
    "KINDS", "RESONANCE_THRESHOLD", "C6Result", "Channel", "ResonanceError", "SpeciesC6",
    "build_channels", "c6_second_order", "dressed_c6", "pair_factor", "perturbative_radius",
    "OracleError", "OracleFit", "oracle_c6",
    "C6Scan", "ZeroCrossing", "evaluate_point", "find_zeros", "scan_c6", "scan_function",
    "write_scan_csv", "zeros_to_json",
]
