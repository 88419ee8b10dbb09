"""Combinatorial modulus, discrete UWS cuts and conformal-dimension estimates for planar point clouds."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .exponent import ExponentEstimate, ExponentTable, build_table, estimate_QN
from .geometry import PointCloud, ResourceLimitError, ShapeSpec, gen_shape, read_cloud, write_cloud
from .modulus import (ApproxGraph, CutSet, ModulusNotConverged, ModulusResult, PathFamily, annulus_family,
                      build_level_graph, is_admissible, lower_bound_from_disjoint_paths, min_vertex_cut,
                      modulus_bruteforce, modulus_p, upper_bound_certificate)
from .nets import (SeparatedNet, discrete_path_search, doubling_estimate, extract_net,
                   linear_connectivity_probe, uniformly_disconnected_probe, uniformly_perfect_probe)
from .tangent import Window, rescaled_window, window_component_count
from .uws import CutReport, UWSQuery, UWSReport, uws_cut, uws_sweep, verify_cut

__all__ = [
    "BACKEND", "ApproxGraph", "CutReport", "CutSet", "ExponentEstimate", "ExponentTable",
    "ModulusNotConverged", "ModulusResult", "PathFamily", "PointCloud", "ResourceLimitError",
    "SeparatedNet", "ShapeSpec", "UWSQuery", "UWSReport", "Window", "annulus_family", "build_level_graph",
    "build_table", "discrete_path_search", "doubling_estimate", "estimate_QN", "extract_net", "gen_shape",
    "is_admissible", "linear_connectivity_probe", "lower_bound_from_disjoint_paths", "min_vertex_cut",
    "modulus_bruteforce", "modulus_p", "read_cloud", "rescaled_window", "uniformly_disconnected_probe",
    "uniformly_perfect_probe", "upper_bound_certificate", "uws_cut", "uws_sweep", "verify_cut",
    "window_component_count", "write_cloud",
]
