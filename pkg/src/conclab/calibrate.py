"""Empirical admissible constants and bound-domination checks."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

from .errors import NoUsablePoints
from .montecarlo import TailCurve


@dataclass
class CalibrationResult:
    c_star: float
    per_point_c: list[tuple[float, float]]
    binding_t: float
    safety_factor: float = 1.0
    factor: float = 2.0
    metadata: dict = field(default_factory=dict)

    @property
    def c_safe(self) -> float:
        return self.c_star * self.safety_factor

    def to_json(self) -> str:
        d = asdict(self)
        d["c_safe"] = self.c_safe
        return json.dumps(d, indent=2, sort_keys=True)


def admissible_c(ci_high: float, rate: float, n_samples: int, factor: float = 2.0) -> float | None:
    """Largest ``c`` with ``factor * exp(-c * rate) >= ci_high``, or None if unusable."""
    floored = max(ci_high, 1.0 / (10.0 * n_samples))
    if rate <= 0 or floored >= factor:
        return None
    return -math.log(floored / factor) / rate


def calibrate_c(curve: TailCurve, rate: Callable[[float], float], *,
                factor: float = 2.0, safety_factor: float = 1.0) -> CalibrationResult:
    """Smallest per-point admissible constant over the curve.

    At each grid point the admissible constant is ``-ln(ci_high/factor) /
    rate(t)``, with ``ci_high`` floored at ``1/(10 n)`` so that an empty
    cell cannot produce an infinite constant. Points with ``rate(t) <= 0``
    or ``ci_high >= factor`` carry no information and are skipped.

    Raises
    ------
    NoUsablePoints
        When every point is skipped.
    """
    per_point = []
    for p in curve.points:
        c = admissible_c(p.ci_high, rate(p.t), p.n_samples, factor)
        if c is not None:
            per_point.append((p.t, c))
    if not per_point:
        raise NoUsablePoints(f"no usable grid points in curve {curve.statistic_id!r}")
    binding_t, c_star = min(per_point, key=lambda tc: tc[1])
    return CalibrationResult(
        c_star=c_star, per_point_c=per_point, binding_t=binding_t,
        safety_factor=safety_factor, factor=factor,
        metadata={"statistic_id": curve.statistic_id, "dist": curve.dist,
                  "matrix_fingerprint": curve.matrix_fingerprint},
    )


@dataclass(frozen=True)
class Verdict:
    t: float
    bound: float
    ci_low: float
    ci_high: float
    ok: bool


def check_domination(curve: TailCurve, bound: Callable[[float], float],
                     mode: str = "holds") -> list[Verdict]:
    """Compare a bound against the curve point by point.

    ``holds``: ``ok`` means ``bound(t) >= ci_high`` (bound confirmed).
    ``refutes``: ``ok`` means ``bound(t) < ci_low`` (bound violated with
    high confidence).
    """
    if mode not in ("holds", "refutes"):
        raise ValueError("mode must be 'holds' or 'refutes'")
    out = []
    for p in curve.points:
        b = float(bound(p.t))
        ok = b >= p.ci_high if mode == "holds" else b < p.ci_low
        out.append(Verdict(p.t, b, p.ci_low, p.ci_high, ok))
    return out
