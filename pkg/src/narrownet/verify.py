"""Dense scans of |net - target| and the report written next to compiled nets."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .net import NetMetrics, ReluNet, eval_batch


@dataclass(frozen=True)
class Scan:
    kind: str  # "grid" or "random"
    count: int
    seed: int = 0

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> Scan:
        kind, _, rest = text.partition(":")
        if kind not in ("grid", "random") or not rest:
            raise ValueError(f"scan must be 'grid:<n>' or 'random:<count>', got {text!r}")
        parts = rest.split(",")
        count = int(parts[0])
        if count < 1:
            raise ValueError("scan size must be positive")
        if len(parts) > 1:
            seed = int(parts[1].removeprefix("seed="))
        return cls(kind, count, seed)

    def points(self, d: int) -> np.ndarray:
        if self.kind == "grid":
            axis = np.linspace(0.0, 1.0, self.count)
            grids = np.meshgrid(*([axis] * d), indexing="ij")
            return np.stack([g.ravel() for g in grids], axis=1)
        return np.random.default_rng(self.seed).random((self.count, d))

    def describe(self) -> dict:
        out = {"kind": self.kind, "count": self.count}
        if self.kind == "random":
            out["seed"] = self.seed
        return out


@dataclass(frozen=True)
class BoundCheck:
    name: str
    claimed: float
    measured: float
    relation: str  # "<=", "==" or ">="

    @property
    def passed(self) -> bool:
        if self.relation == "<=":
            return self.measured <= self.claimed
        if self.relation == ">=":
            return self.measured >= self.claimed
        return self.measured == self.claimed

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "claimed": self.claimed,
            "measured": self.measured,
            "relation": self.relation,
            "pass": self.passed,
        }


@dataclass
class VerifyReport:
    metrics: NetMetrics
    sup_error: float
    scan: Scan
    checks: list[BoundCheck] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "metrics": self.metrics.as_dict(),
            "sup_error": self.sup_error,
            "scan": self.scan.describe(),
            "checks": [c.as_dict() for c in self.checks],
            "pass": self.passed,
            "info": dict(sorted(self.info.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=1, sort_keys=False) + "\n"


def sup_error(net: ReluNet, target: Callable[[np.ndarray], np.ndarray], pts: np.ndarray) -> float:
    got = eval_batch(net, pts)[:, 0]
    want = np.asarray(target(pts), dtype=np.float64).reshape(-1)
    return float(np.max(np.abs(got - want)))


def verify(
    net: ReluNet,
    target: Callable[[np.ndarray], np.ndarray],
    scan: Scan,
    checks: list[BoundCheck] | None = None,
    error_bound: float | None = None,
) -> VerifyReport:
    err = sup_error(net, target, scan.points(net.input_dim))
    checks = list(checks or [])
    if error_bound is not None:
        checks.append(BoundCheck("sup_error", error_bound, err, "<="))
    return VerifyReport(net.metrics(), err, scan, checks)
