"""Command-line interface: ``narrownet compile|eval|verify|rate``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or input error,
3 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from . import pipelines
from .convex import OutputMode, compile_convex
from .errors import BudgetError, NarrowNetError
from .fit import fit_max_affine, max_affine_error_bound
from .interp import build_interpolant
from .net import deserialize, eval_batch, serialize
from .targets import resolve
from .verify import BoundCheck, Scan, verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3

log = logging.getLogger("narrownet")


class UsageError(Exception):
    pass


def _params(items: list[str] | None) -> dict[str, str]:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects key=value, got {item!r}")
        out[key] = value
    return out


def _scan(args, d: int) -> Scan:
    if args.scan is None:
        scan = pipelines.default_scan(d)
        return Scan(scan.kind, scan.count, args.seed)
    try:
        return Scan.parse(args.scan, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _target(args):
    return resolve(args.target, args.dim, _params(args.param), args.lipschitz)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _report_exit(report) -> int:
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_compile(args) -> int:
    target = _target(args)
    scan = _scan(args, target.dim)
    mode = OutputMode(args.output_mode)
    if args.mode == "convex":
        if target.kind == "dc-file":
            result = pipelines.convex_exact(target.source, scan, mode)
        else:
            if not target.convex:
                raise UsageError(f"target {target.name!r} is not convex; convex mode needs one")
            if args.k is None:
                raise UsageError("convex mode on a function target needs --k")
            result = pipelines.convex_fit(target, args.k, scan, mode)
    elif args.mode == "dc" and target.kind == "dc-file":
        result = pipelines.dc_exact(target.source, scan, mode)
    elif args.mode in ("dc", "continuous"):
        if target.kind in ("dc-file", "shallow-file"):
            raise UsageError(f"{args.mode} mode cannot interpolate a {target.kind} target")
        if args.eps is None:
            raise UsageError(f"{args.mode} mode on a function target needs --eps")
        result = pipelines.continuous(target, args.eps, scan, mode, args.budget_vertices)
    elif args.mode == "deepen":
        if target.kind != "shallow-file":
            raise UsageError("deepen mode needs a shallow-file:<path> target")
        result = pipelines.deepen_shallow(target.source, scan)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown mode {args.mode}")

    if args.out:
        Path(args.out).write_text(serialize(result.net))
    _write(args.report, result.report.to_json())
    return _report_exit(result.report)


def _read_points(path: str, d: int) -> np.ndarray:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return np.empty((0, d))
    body = rows[1:]  # header row
    pts = np.empty((len(body), d))
    for i, row in enumerate(body, start=2):
        if len(row) != d:
            raise UsageError(f"row {i}: expected {d} columns, got {len(row)}")
        try:
            pts[i - 2] = [float(v) for v in row]
        except ValueError:
            raise UsageError(f"row {i}: non-numeric value in {row}") from None
    return pts


def cmd_eval(args) -> int:
    net = deserialize(Path(args.net).read_text())
    pts = _read_points(args.points, net.input_dim)
    out = eval_batch(net, pts)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"y{i}" for i in range(net.output_dim)])
    for row in out:
        writer.writerow([repr(float(v)) for v in row])
    _write(args.out, buf.getvalue())
    return EXIT_OK


def cmd_verify(args) -> int:
    net = deserialize(Path(args.net).read_text())
    target = _target(args)
    if target.dim != net.input_dim:
        raise UsageError(f"net takes {net.input_dim} inputs but target has dimension {target.dim}")
    checks = []
    if args.width is not None:
        checks.append(BoundCheck("hidden_width", args.width, net.hidden_width, "=="))
    if args.blocks is not None:
        checks.append(BoundCheck("hidden_blocks", args.blocks, net.hidden_blocks, "=="))
    report = verify(net, target.evaluate, _scan(args, target.dim), checks, args.tol)
    report.info["target"] = target.name
    _write(args.report, report.to_json())
    return _report_exit(report)


def cmd_rate(args) -> int:
    target = _target(args)
    d = target.dim
    scan = _scan(args, d)
    pts = scan.points(d)
    want = target.evaluate(pts)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    ok = True
    if args.k_list:
        ct = target.as_convex_target()
        writer.writerow(["k", "depth", "width", "sup_error", "paper_bound"])
        for k in args.k_list:
            net = compile_convex(fit_max_affine(ct, k))
            err = float(np.max(np.abs(eval_batch(net, pts)[:, 0] - want)))
            bound = max_affine_error_bound(ct.lipschitz, d, k)
            ok &= err <= bound
            writer.writerow([k, net.hidden_blocks, net.hidden_width, repr(err), repr(bound)])
    elif args.eps_list:
        writer.writerow(["eps", "depth", "width", "sup_error", "paper_bound"])
        for eps in args.eps_list:
            p = build_interpolant(target.as_target_fn(), eps, args.budget_vertices)
            net, _ = pipelines.interpolant_to_net(p)
            err = float(np.max(np.abs(eval_batch(net, pts)[:, 0] - want)))
            ok &= err <= eps
            writer.writerow([repr(eps), net.hidden_blocks, net.hidden_width, repr(err), repr(eps)])
    else:
        raise UsageError("rate needs --k-list or --eps-list")
    _write(args.out, buf.getvalue())
    return EXIT_OK if ok else EXIT_FAIL


def _numbers(kind):
    def parse(text: str):
        try:
            return [kind(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")

    return parse


def _add_target(p: argparse.ArgumentParser) -> None:
    p.add_argument("--target", required=True,
                   help="builtin name, or vertex-file:/dc-file:/shallow-file:<path>")
    p.add_argument("--dim", type=int)
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="builtin parameter, e.g. a=1,2 for the affine target")
    p.add_argument("--lipschitz", type=float, help="asserted Lipschitz constant")
    p.add_argument("--scan", help="grid:<n> or random:<count>[,seed=<s>]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget-vertices", type=int, dest="budget_vertices")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="narrownet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="build a net for a target and report its checks")
    _add_target(p)
    p.add_argument("--mode", required=True, choices=["convex", "dc", "continuous", "deepen"])
    p.add_argument("--eps", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--out", help="where to write the net file")
    p.add_argument("--report", help="where to write the JSON report (default stdout)")
    p.add_argument("--output-mode", choices=["relu", "linear"], default="relu")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("eval", help="evaluate a net on CSV points")
    p.add_argument("net")
    p.add_argument("--points", required=True, help="CSV file with a header row, or -")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="measure sup |net - target| and check bounds")
    p.add_argument("net")
    _add_target(p)
    p.add_argument("--tol", type=float, help="required bound on the sup error")
    p.add_argument("--width", type=int, help="required hidden width")
    p.add_argument("--blocks", type=int, help="required hidden block count")
    p.add_argument("--report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("rate", help="tabulate error against k or eps")
    _add_target(p)
    p.add_argument("--k-list", type=_numbers(int), dest="k_list")
    p.add_argument("--eps-list", type=_numbers(float), dest="eps_list")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BudgetError as exc:
        print(f"error: resource budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, NarrowNetError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
