"""Homotopy reconstruction of curves from noisy samples via epsilon-path Rips complexes."""
from .geometry import (
    FiniteMetricSpace,
    PointCloud,
    ShapeDescriptor,
    delta_parameter,
    euclidean_metric,
    make_point_cloud,
    make_shape,
    perturb,
    sample_shape,
)
from .pathmetric import DisconnectedGraph, build_epsilon_graph, path_metric

from .complex import FlagComplex, barycentric_subdivision, rips_complex
from .homology import betti_numbers, connected_components
from .experiments import ExperimentConfig, Report, run_reconstruction

__version__ = "0.1.0"
