"""Kolmogorov-Arnold networks over restricted edge-function dictionaries."""

from ._backend import available_backends, get_backend
from .approximation import FitReport, TargetSpec, approximate_pipeline, fit_shallow_mlp, sup_error_on_grid
from .dyadic import Dyadic
from .edges import (
    A0,
    Affine,
    Composite,
    EdgeFunction,
    Named,
    Polynomial,
    Spline,
    SplineSpace,
    affine_in_space,
    eval_edge,
    register_table,
    spline_basis,
)
from .errors import (
    ConditioningError,
    DecodeError,
    EvaluationError,
    FitError,
    FormatVersionError,
    GadgetSizeError,
    KanError,
    RegistryError,
    StructureError,
    UnknownEdgeKindError,
)
from .graph import (
    KanNetwork,
    Layer,
    MlpNetwork,
    MlpUnit,
    affine_closed_form,
    collect_affine_dictionary,
    depth_equalize,
    eval_kan,
    eval_trace,
    parallel_compose,
    serial_compose,
)
from .serialize import decode_network, encode_network, load_network, save_network
from .synthesis import (
    GadgetReport,
    dyadic_affine_gadget,
    dyadic_mlp_gadget,
    fd_quadratic_gadget,
    mlp_to_kan_shallow,
    mlp_to_kan_two_hidden,
    multiply_gadget,
    polynomial_gadget,
    square_gadget,
)

__version__ = "0.1.0"
