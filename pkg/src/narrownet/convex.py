"""Exact width-(d+1) compilation of max-affine functions.

Each piece g_a is absorbed by one hidden block via the conjugated ReLU
``S_a o ReLU o S_a^-1`` with the shear ``S_a(x, y) = (x, g_a(x) + y)``. On the
cube the first d coordinates are nonnegative, so the ReLU only acts on the
carried value, replacing it by ``max(carried, g_a(x))``. Consecutive shears
``S_a^-1 o S_{a-1}`` are fused into a single affine layer.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .affine import DEFAULT_TOL, AffineMap, MaxAffineFn, compose_affine, max_affine_cube_min
from .errors import ClampingError
from .net import TAG_EMBEDDING, TAG_READOUT, Activation, Layer, ReluNet

log = logging.getLogger(__name__)


class OutputMode(str, Enum):
    RELU = "relu"
    LINEAR = "linear"


class PositivityShift(str, Enum):
    AUTO = "auto"
    NONE = "none"


@dataclass(frozen=True)
class ConvexCompileOptions:
    output_mode: OutputMode = OutputMode.RELU
    positivity_shift: PositivityShift = PositivityShift.AUTO
    tol: float = DEFAULT_TOL


def fingerprint(*fns: MaxAffineFn) -> str:
    h = hashlib.sha256()
    for f in fns:
        h.update(np.ascontiguousarray(f.slopes).tobytes())
        h.update(np.ascontiguousarray(f.offsets).tobytes())
        h.update(b"|")
    return h.hexdigest()[:16]


def shear(piece_slope: np.ndarray, piece_offset: float) -> AffineMap:
    """``(x, y) -> (x, <a, x> + b + y)``."""
    d = piece_slope.shape[0]
    w = np.eye(d + 1)
    w[d, :d] = piece_slope
    bias = np.zeros(d + 1)
    bias[d] = piece_offset
    return AffineMap(w, bias)


def shear_inverse(piece_slope: np.ndarray, piece_offset: float) -> AffineMap:
    """Closed-form inverse ``(x, y) -> (x, y - <a, x> - b)``."""
    return shear(-piece_slope, -piece_offset)


def cube_min_lower_bound(f: MaxAffineFn) -> float:
    """Cheap certificate: f >= max_a (min of g_a on the cube)."""
    lo, _ = f.piece_bounds()
    return float(lo.max())


def compile_convex(f: MaxAffineFn, opts: ConvexCompileOptions | None = None) -> ReluNet:
    """Compile ``f`` into a net of hidden width d+1 with ``f.n_pieces`` hidden blocks.

    The running maximum starts from the zero function, so the net computes
    ``max(0, f)`` internally; with ``positivity_shift=AUTO`` every piece is
    raised by ``C = max(0, -min_a lo_a)`` and C is removed in the readout.
    """
    opts = opts or ConvexCompileOptions()
    mode = OutputMode(opts.output_mode)
    d, n = f.dim, f.n_pieces

    clamped = False
    if cube_min_lower_bound(f) >= 0.0:
        fmin = None
    else:
        fmin = max_affine_cube_min(f)
    if fmin is not None and fmin < -opts.tol:
        if PositivityShift(opts.positivity_shift) is PositivityShift.NONE:
            raise ClampingError(
                f"target reaches {fmin:.6g} < 0 on the cube; without a positivity shift the "
                "hidden ReLUs clamp the running maximum at 0 (use positivity_shift=auto)"
            )
        if mode is OutputMode.RELU:
            clamped = True
            log.warning("target minimum %.6g < 0: ReLU readout outputs max(0, f)", fmin)

    shift = 0.0
    if PositivityShift(opts.positivity_shift) is PositivityShift.AUTO:
        lo, _ = f.piece_bounds()
        shift = max(0.0, -float(lo.min()))
    slopes, offsets = f.slopes, f.offsets + shift

    embed = AffineMap(np.vstack([np.eye(d), np.zeros((1, d))]), np.zeros(d + 1))
    layers = [Layer(embed, Activation.RELU)]
    layers.append(Layer(shear_inverse(slopes[0], offsets[0]), Activation.RELU))
    for a in range(1, n):
        fused = compose_affine(
            shear_inverse(slopes[a], offsets[a]), shear(slopes[a - 1], offsets[a - 1])
        )
        layers.append(Layer(fused, Activation.RELU))
    pick_last = AffineMap(np.eye(1, d + 1, d), [-shift])
    readout = compose_affine(pick_last, shear(slopes[-1], offsets[-1]))
    act = Activation.RELU if mode is OutputMode.RELU else Activation.LINEAR
    layers.append(Layer(readout, act))

    provenance = {
        "compiler": "compile_convex",
        "source_hash": fingerprint(f),
        "pieces": str(n),
        "shift": repr(shift),
        "output_mode": mode.value,
        "clamped": "true" if clamped else "false",
        TAG_EMBEDDING: "true",
        TAG_READOUT: "true",
    }
    return ReluNet(d, tuple(layers), provenance)


def running_max_channel(trace: list[np.ndarray], f: MaxAffineFn, shift: float, k: int, xs):
    """Recover ``max(0, g_1+C, ..., g_k+C)`` from the trace after block ``k``.

    Layer ``k`` of the trace (0 is the embedding) holds ``S_k^-1`` applied to the
    graph point, so the carried value is its last coordinate plus ``g_k + C``.
    """
    xs = np.asarray(xs, dtype=np.float64)
    return trace[k][:, -1] + xs @ f.slopes[k - 1] + f.offsets[k - 1] + shift
