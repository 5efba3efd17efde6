"""Deep, narrow ReLU networks that compute piecewise-affine functions exactly."""

from .affine import (
    AffineFunctional,
    AffineMap,
    MaxAffineFn,
    compose_affine,
    cube_bounds,
    dedup_pieces,
    eval_max_affine,
)
from .convex import ConvexCompileOptions, OutputMode, PositivityShift, compile_convex
from .dc import DCFn, DcCompileOptions, compile_dc, max_gadget
from .decompose import convexity_check, crease_set, decompose
from .deepen import ShallowNet, deepen
from .errors import (
    BudgetError,
    ClampingError,
    DimensionError,
    NarrowNetError,
    ParseError,
    ValidationError,
)
from .fit import ConvexTarget, fit_max_affine
from .interp import SimplicialInterpolant, TargetFn, build_interpolant, eval_interpolant
from .net import Activation, Layer, NetMetrics, ReluNet, deserialize, eval_batch, eval_net, serialize

__all__ = [
    "Activation",
    "AffineFunctional",
    "AffineMap",
    "BudgetError",
    "ClampingError",
    "ConvexCompileOptions",
    "ConvexTarget",
    "DCFn",
    "DcCompileOptions",
    "DimensionError",
    "Layer",
    "MaxAffineFn",
    "NarrowNetError",
    "NetMetrics",
    "OutputMode",
    "ParseError",
    "PositivityShift",
    "ReluNet",
    "ShallowNet",
    "SimplicialInterpolant",
    "TargetFn",
    "ValidationError",
    "build_interpolant",
    "compile_convex",
    "compile_dc",
    "compose_affine",
    "convexity_check",
    "crease_set",
    "cube_bounds",
    "decompose",
    "dedup_pieces",
    "deepen",
    "deserialize",
    "eval_batch",
    "eval_interpolant",
    "eval_max_affine",
    "eval_net",
    "fit_max_affine",
    "max_gadget",
    "serialize",
]
