"""End-to-end constructions: target in, verified net out."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .convex import ConvexCompileOptions, OutputMode, compile_convex
from .dc import DCFn, DcCompileOptions, compile_dc
from .decompose import Decomposition, decompose_detailed
from .deepen import ShallowNet, deepen
from .errors import ValidationError
from .fit import fit_max_affine, max_affine_error_bound
from .interp import SimplicialInterpolant, build_interpolant
from .net import ReluNet, eval_batch
from .targets import Target
from .verify import BoundCheck, Scan, VerifyReport, verify

EXACT_TOL = 1e-9


@dataclass
class CompileResult:
    net: ReluNet
    report: VerifyReport
    extras: dict = field(default_factory=dict)


def default_scan(d: int) -> Scan:
    """A grid with about 10^4 points, endpoints included."""
    return Scan("grid", int(round(10000 ** (1.0 / d))) + 1)


def _finish(net, target_eval, scan, checks, error_bound, info, extras=None) -> CompileResult:
    report = verify(net, target_eval, scan, checks, error_bound)
    report.info.update(info)
    return CompileResult(net, report, extras or {})


def _width(net: ReluNet, want: int) -> BoundCheck:
    return BoundCheck("hidden_width", want, net.hidden_width, "==")


def convex_exact(f: DCFn, scan: Scan, output_mode=OutputMode.RELU) -> CompileResult:
    if not (f.h.n_pieces == 1 and not f.h.slopes.any()):
        raise ValidationError("convex mode needs a DC file whose h part is constant")
    g = f.g.shifted(-float(f.h.offsets[0]))
    net = compile_convex(g, ConvexCompileOptions(output_mode=output_mode))
    d = f.dim
    checks = [_width(net, d + 1), BoundCheck("hidden_blocks", g.n_pieces, net.hidden_blocks, "==")]
    return _finish(net, g.evaluate, scan, checks, EXACT_TOL, {"pieces": g.n_pieces})


def convex_fit(target: Target, k: int, scan: Scan, output_mode=OutputMode.RELU) -> CompileResult:
    ct = target.as_convex_target()
    fit = fit_max_affine(ct, k)
    net = compile_convex(fit, ConvexCompileOptions(output_mode=output_mode))
    d = target.dim
    pts = scan.points(d)
    expected = fit.evaluate(pts)
    clamped = net.provenance.get("clamped") == "true"
    if clamped:
        # tangent planes can dip below 0; the ReLU readout returns max(0, fit)
        expected = np.maximum(expected, 0.0)
    compile_gap = float(np.max(np.abs(eval_batch(net, pts)[:, 0] - expected)))
    bound = max_affine_error_bound(ct.lipschitz, d, k)
    checks = [
        _width(net, d + 1),
        BoundCheck("hidden_blocks", k, net.hidden_blocks, "<="),
        BoundCheck("net_vs_fit", EXACT_TOL, compile_gap, "<="),
    ]
    info = {
        "k": k, "pieces": fit.n_pieces, "lipschitz": ct.lipschitz, "error_bound": bound,
        "clamped": clamped,
    }
    return _finish(net, target.evaluate, scan, checks, bound, info, {"fit": fit})


def dc_exact(f: DCFn, scan: Scan, output_mode=OutputMode.RELU) -> CompileResult:
    net = compile_dc(f, DcCompileOptions(output_mode=output_mode))
    d = f.dim
    m, n = f.h.n_pieces, f.g.n_pieces
    checks = [_width(net, d + 3), BoundCheck("hidden_blocks", 2 * (m + n), net.hidden_blocks, "==")]
    return _finish(net, f.evaluate, scan, checks, EXACT_TOL, {"g_pieces": n, "h_pieces": m})


def interpolant_to_net(
    p: SimplicialInterpolant, output_mode=OutputMode.RELU
) -> tuple[ReluNet, Decomposition]:
    dec = decompose_detailed(p)
    return compile_dc(dec.dc, DcCompileOptions(output_mode=output_mode)), dec


def continuous(
    target: Target,
    eps: float | None,
    scan: Scan,
    output_mode=OutputMode.RELU,
    budget: int | None = None,
) -> CompileResult:
    """Interpolate on the Kuhn grid, split into g - h, compile at width d+3.

    A vertex-file target is used as the interpolant itself and checked exactly.
    """
    d = target.dim
    if isinstance(target.source, SimplicialInterpolant):
        p = target.source
        bound = EXACT_TOL if eps is None else eps
        oracle = p.evaluate
    else:
        if eps is None:
            raise ValidationError("continuous mode needs --eps")
        p = build_interpolant(target.as_target_fn(), eps, budget)
        bound = eps
        oracle = target.evaluate
    net, dec = interpolant_to_net(p, output_mode)
    m, n = dec.n_h, dec.n_g
    pts = scan.points(d)
    dc_gap = float(np.max(np.abs(dec.dc.evaluate(pts) - p.evaluate(pts))))
    checks = [
        _width(net, d + 3),
        BoundCheck("hidden_blocks", 2 * (m + n), net.hidden_blocks, "=="),
        BoundCheck("dc_reconstruction", EXACT_TOL, dc_gap, "<="),
    ]
    info = {
        "resolution": p.resolution,
        "simplices": math.factorial(d) * p.resolution**d,
        "g_pieces": n,
        "h_pieces": m,
        "hinge_weight": dec.lam,
        "hinge_weight_closed_form": dec.lam0,
    }
    if target.lipschitz is not None and eps is not None:
        info["lipschitz"] = target.lipschitz
        info["grid_bound"] = target.lipschitz * math.sqrt(d) / p.resolution
        # the literal depth formula 2 d! / w(eps)^d with w(eps) = L * eps
        info["simplex_depth_formula"] = 2 * math.factorial(d) / (target.lipschitz * eps) ** d
    return _finish(net, oracle, scan, checks, bound, info, {"interpolant": p, "decomposition": dec})


def deepen_shallow(s: ShallowNet, scan: Scan) -> CompileResult:
    net = deepen(s)
    d, n = s.dim, s.width
    checks = [
        _width(net, d + 2),
        BoundCheck("relu_depth", n + 2, net.relu_depth, "==") if s.output_relu
        else BoundCheck("relu_depth", n + 1, net.relu_depth, "=="),
        BoundCheck("layers", n + 2, len(net.layers), "=="),
    ]
    return _finish(net, s.evaluate, scan, checks, EXACT_TOL, {"shallow_width": n})

