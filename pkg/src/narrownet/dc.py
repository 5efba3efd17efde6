"""Exact width-(d+3) compilation of differences of max-affine functions.

Hidden-layer channel layout (0-based): ``0..d-1`` carry x, ``d`` and ``d+1``
form the max-gadget pair (u, v), ``d+2`` is memory. Each piece takes two
blocks: the first emits ``(x, p(x) - r, r, m)``, the second ``(x, u + v, 0, m)``
so that after both the u channel holds ``max(p(x), r)`` whenever ``r >= 0``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from .affine import DEFAULT_TOL, AffineMap, MaxAffineFn, vertices_of_cube
from .convex import OutputMode, fingerprint
from .errors import ClampingError, DimensionError, ParseError, ValidationError
from .net import TAG_READOUT, Activation, Layer, ReluNet

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DCFn:
    """``g - h`` for two max-affine functions on the same cube."""

    g: MaxAffineFn
    h: MaxAffineFn

    def __post_init__(self):
        if self.g.dim != self.h.dim:
            raise DimensionError(f"g has dimension {self.g.dim} but h has {self.h.dim}")

    @property
    def dim(self) -> int:
        return self.g.dim

    def __call__(self, x) -> float:
        return self.g(x) - self.h(x)

    def evaluate(self, xs) -> np.ndarray:
        return self.g.evaluate(xs) - self.h.evaluate(xs)


@dataclass(frozen=True)
class DcCompileOptions:
    output_mode: OutputMode = OutputMode.RELU
    tol: float = DEFAULT_TOL
    sample_count: int = 4096
    seed: int = 0


def max_gadget() -> ReluNet:
    """Two-layer width-2 net computing ``max(x, y)`` for ``y >= 0``."""
    first = AffineMap([[1.0, -1.0], [0.0, 1.0]], [0.0, 0.0])
    second = AffineMap([[1.0, 1.0]], [0.0])
    return ReluNet(2, (Layer(first), Layer(second)), {"compiler": "max_gadget"})


def positivity_shift(f: MaxAffineFn) -> float:
    """Smallest C >= 0 making every piece of ``f`` nonnegative on the cube."""
    lo, _ = f.piece_bounds()
    return max(0.0, -float(lo.min()))


def _sample_points(d: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    pts = [rng.random((count, d))]
    if d <= 10:
        pts.append(vertices_of_cube(d))
    return np.vstack(pts)


def certify_nonnegative(f: DCFn, tol: float, count: int, seed: int) -> bool | None:
    """True if ``g - h >= 0`` is certified by piece bounds, False if a sampled
    point is negative beyond ``tol``, None when neither is known."""
    glo, _ = f.g.piece_bounds()
    _, hhi = f.h.piece_bounds()
    if glo.max() - hhi.max() >= 0.0:
        return True
    vals = f.evaluate(_sample_points(f.dim, count, seed))
    if vals.min() < -tol:
        return False
    return None


def _piece_block(
    d: int, slope: np.ndarray, offset: float, first_in_net: bool, phase_start: bool
) -> AffineMap:
    """First block of a gadget pair; see the module docstring for the layout."""
    w = np.zeros((d + 3, d if first_in_net else d + 3))
    b = np.zeros(d + 3)
    w[:d, :d] = np.eye(d)
    w[d, :d] = slope
    b[d] = offset
    if first_in_net:
        return AffineMap(w, b)
    if phase_start:
        # running value restarts at 0; the finished max moves into memory
        w[d + 2, d] = 1.0
    else:
        w[d, d] = -1.0
        w[d + 1, d] = 1.0
        w[d + 2, d + 2] = 1.0
    return AffineMap(w, b)


def _sum_block(d: int) -> AffineMap:
    w = np.zeros((d + 3, d + 3))
    w[:d, :d] = np.eye(d)
    w[d, d] = 1.0
    w[d, d + 1] = 1.0
    w[d + 2, d + 2] = 1.0
    return AffineMap(w, np.zeros(d + 3))


def compile_dc(f: DCFn, opts: DcCompileOptions | None = None) -> ReluNet:
    """Compile ``g - h`` into a net of hidden width d+3 with 2(M+N) hidden blocks.

    Pieces are raised by ``T_g`` and ``T_h`` so every gadget input is
    nonnegative on the cube; the readout removes ``T_g - T_h``.
    """
    opts = opts or DcCompileOptions()
    mode = OutputMode(opts.output_mode)
    d = f.dim
    if mode is OutputMode.RELU:
        verdict = certify_nonnegative(f, opts.tol, opts.sample_count, opts.seed)
        if verdict is False:
            raise ClampingError(
                "g - h is negative at a sampled cube point; a ReLU readout would clamp it "
                "(use output_mode=linear)"
            )
        if verdict is None:
            log.info("nonnegativity of g - h not certified; sampled minimum was >= 0")

    t_g = positivity_shift(f.g)
    t_h = positivity_shift(f.h)
    layers: list[Layer] = []
    for phase, (fn, shift) in enumerate(((f.g, t_g), (f.h, t_h))):
        for k in range(fn.n_pieces):
            block = _piece_block(
                d,
                fn.slopes[k],
                fn.offsets[k] + shift,
                first_in_net=not layers,
                phase_start=(phase == 1 and k == 0),
            )
            layers.append(Layer(block))
            layers.append(Layer(_sum_block(d)))

    w = np.zeros((1, d + 3))
    w[0, d + 2] = 1.0
    w[0, d] = -1.0
    readout = AffineMap(w, [t_h - t_g])
    act = Activation.RELU if mode is OutputMode.RELU else Activation.LINEAR
    layers.append(Layer(readout, act))

    provenance = {
        "compiler": "compile_dc",
        "source_hash": fingerprint(f.g, f.h),
        "g_pieces": str(f.g.n_pieces),
        "h_pieces": str(f.h.n_pieces),
        "shift_g": repr(t_g),
        "shift_h": repr(t_h),
        "output_mode": mode.value,
        TAG_READOUT: "true",
    }
    return ReluNet(d, tuple(layers), provenance)


# --- DC file format ----------------------------------------------------------


def _pieces_to_list(f: MaxAffineFn) -> list[dict[str, Any]]:
    return [{"a": a.tolist(), "b": float(b)} for a, b in zip(f.slopes, f.offsets)]


def _pieces_from_list(raw: Any, name: str, d: int) -> MaxAffineFn:
    if not isinstance(raw, list) or not raw:
        raise ParseError(name, "expected a nonempty list of pieces")
    slopes, offsets = [], []
    for i, piece in enumerate(raw):
        where = f"{name}[{i}]"
        if not isinstance(piece, dict) or "a" not in piece or "b" not in piece:
            raise ParseError(where, "expected an object with fields 'a' and 'b'")
        a = piece["a"]
        if not isinstance(a, list) or len(a) != d:
            raise ParseError(where + ".a", f"expected {d} numbers")
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in a):
            raise ParseError(where + ".a", "non-numeric entry")
        bv = piece["b"]
        if isinstance(bv, bool) or not isinstance(bv, (int, float)):
            raise ParseError(where + ".b", "expected a number")
        slopes.append([float(v) for v in a])
        offsets.append(float(bv))
    try:
        return MaxAffineFn(np.array(slopes, dtype=np.float64), np.array(offsets))
    except ValidationError as exc:
        raise ParseError(name, str(exc)) from None


def dc_to_dict(f: DCFn) -> dict[str, Any]:
    return {
        "format_version": 1,
        "dim": f.dim,
        "g": _pieces_to_list(f.g),
        "h": _pieces_to_list(f.h),
    }


def dc_from_dict(doc: Any) -> DCFn:
    """Parse a DC document; a missing or empty ``h`` means the zero function."""
    if not isinstance(doc, dict):
        raise ParseError("<root>", "expected an object")
    d = doc.get("dim")
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise ParseError("dim", f"expected a positive integer, got {d!r}")
    g = _pieces_from_list(doc.get("g"), "g", d)
    raw_h = doc.get("h")
    h = MaxAffineFn.zero(d) if not raw_h else _pieces_from_list(raw_h, "h", d)
    return DCFn(g, h)


def dump_dc(f: DCFn) -> str:
    return json.dumps(dc_to_dict(f), indent=1) + "\n"


def load_dc(text: str) -> DCFn:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("<document>", f"invalid JSON: {exc}") from None
    return dc_from_dict(doc)
