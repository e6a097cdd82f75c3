"""Closed-form right-hand sides of the concentration inequalities.

Each bound has the shape ``factor * exp(-exponent)``. The absolute constant
(``c`` or ``C``) is always an explicit argument, since none of them is pinned
analytically; :mod:`conclab.calibrate` estimates admissible values from data.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import linalg
from .errors import DimensionMismatch, ZeroMatrix

DEFAULT_c = 1.0 / 8.0
DEFAULT_C = 2.0
DEFAULT_C3 = 1.0
TWO_SIDED = 2.0


class Tail(NamedTuple):
    """A tail bound ``raw = factor * exp(-exponent)``; ``prob`` clamps it to 1."""

    raw: float
    prob: float
    exponent: float


def _tail(exponent: float, factor: float = TWO_SIDED) -> Tail:
    raw = factor * math.exp(-exponent)
    return Tail(raw=raw, prob=min(raw, 1.0), exponent=exponent)


class BoundKind(str, enum.Enum):
    HANSON_WRIGHT = "hanson_wright"
    CONCENTRATION = "concentration"
    SQUARED_CONCENTRATION = "squared_concentration"
    SMALL_BALL = "small_ball"
    SMALL_BALL_IMPROVED = "small_ball_improved"
    SUBSPACE_DISTANCE = "subspace_distance"
    PRODUCT_NORM = "product_norm"


FORMULAS = {
    BoundKind.HANSON_WRIGHT:
        "P(|X'AX - E X'AX| > t) <= 2 exp(-c min(t^2/(K^4 |A|_HS^2), t/(K^2 |A|)))",
    BoundKind.CONCENTRATION:
        "P(| |AX|_2 - |A|_HS | > t) <= 2 exp(-c t^2/(K^4 |A|^2))",
    BoundKind.SQUARED_CONCENTRATION:
        "P(| |AX|_2^2 - |A|_HS^2 | > eps |A|_HS^2) <= 2 exp(-c min(eps, eps^2) r(A)/K^4)",
    BoundKind.SMALL_BALL:
        "P(|AX - y|_2 < |A|_HS/2) <= 2 exp(-c r(A)/K^4)",
    BoundKind.SMALL_BALL_IMPROVED:
        "P(|AX - y|_2 < (|A|_HS + |y|_2)/6) <= 2 exp(-c r(A)/K^4)",
    BoundKind.SUBSPACE_DISTANCE:
        "P(|d(X,E) - sqrt(n-d)| > t) <= 2 exp(-c t^2/K^4)",
    BoundKind.PRODUCT_NORM:
        "P(|BG| > C K^2 (s |B|_HS + t sqrt(n) |B|)) <= 2 exp(-s^2 r(B) - t^2 n)",
}


@dataclass(frozen=True)
class BoundForm:
    """An inequality identifier together with its absolute constant."""

    kind: BoundKind
    constant: float

    def __post_init__(self):
        object.__setattr__(self, "kind", BoundKind(self.kind))
        if not (self.constant > 0 and math.isfinite(self.constant)):
            raise ValueError("absolute constant must be positive and finite")

    @property
    def formula(self) -> str:
        return FORMULAS[self.kind]


def _check_K(K: float) -> None:
    if not (K > 0 and math.isfinite(K)):
        raise ValueError(f"K must be positive, got {K!r}")


def _norms(a) -> tuple[float, float]:
    arr = linalg.as_matrix(a)
    top = linalg.op_norm(arr)
    if top == 0.0:
        raise ZeroMatrix("bound is undefined for the zero matrix")
    return linalg.hs_norm(arr), top


def hw_rate(hs: float, op: float, K: float, t: float) -> float:
    """``min(t^2/(K^4 hs^2), t/(K^2 op))``: the Hanson-Wright exponent without ``c``."""
    return min(t * t / (K**4 * hs * hs), t / (K * K * op))


def hw_bound(a, K: float, t: float, c: float = DEFAULT_c, factor: float = TWO_SIDED) -> Tail:
    _check_K(K)
    if t < 0:
        raise ValueError("t must be non-negative")
    hs, op = _norms(a)
    return _tail(c * hw_rate(hs, op, K, t), factor)


def concentration_rate(op: float, K: float, t: float) -> float:
    return t * t / (K**4 * op * op)


def concentration_bound(a, K: float, t: float, c: float = DEFAULT_c,
                        factor: float = TWO_SIDED) -> Tail:
    _check_K(K)
    if t < 0:
        raise ValueError("t must be non-negative")
    op = linalg.op_norm(linalg.as_matrix(a))
    if op == 0.0:
        raise ZeroMatrix("bound is undefined for the zero matrix")
    return _tail(c * concentration_rate(op, K, t), factor)


def squared_concentration_bound(a, K: float, eps: float, c: float = DEFAULT_c,
                                factor: float = TWO_SIDED) -> Tail:
    _check_K(K)
    if eps < 0:
        raise ValueError("eps must be non-negative")
    r = linalg.stable_rank(a)
    return _tail(c * min(eps, eps * eps) * r / K**4, factor)


def small_ball_bound(a, K: float, c: float = DEFAULT_c,
                     factor: float = TWO_SIDED) -> tuple[float, Tail]:
    """Radius ``hs/2`` and the probability bound for ``|AX - y| < radius``."""
    _check_K(K)
    hs, op = _norms(a)
    return 0.5 * hs, _tail(c * (hs / op) ** 2 / K**4, factor)


def improved_small_ball(a, y, K: float, c: float = DEFAULT_c,
                        factor: float = TWO_SIDED) -> tuple[float, Tail]:
    arr = linalg.as_matrix(a)
    yv = np.asarray(y, dtype=float).ravel()
    if yv.shape[0] != arr.shape[0]:
        raise DimensionMismatch(f"y has length {yv.shape[0]}, A has {arr.shape[0]} rows")
    radius, tail = small_ball_bound(arr, K, c, factor)
    return (2.0 * radius + float(np.linalg.norm(yv))) / 6.0, tail


def subspace_bound(K: float, t: float, c: float = DEFAULT_c, factor: float = TWO_SIDED) -> Tail:
    _check_K(K)
    if t < 0:
        raise ValueError("t must be non-negative")
    return _tail(c * t * t / K**4, factor)


def product_norm_bound(b, n: int, K: float, s: float = 1.0, t: float = 1.0,
                       C: float = DEFAULT_C, factor: float = TWO_SIDED) -> tuple[float, Tail]:
    """Threshold ``C K^2 (s |B|_HS + t sqrt(n) |B|)`` and its exceedance bound."""
    _check_K(K)
    if n < 1:
        raise ValueError("n must be a positive integer")
    if s < 1 or t < 1:
        raise ValueError("s and t must be >= 1")
    hs, op = _norms(b)
    threshold = C * K * K * (s * hs + t * math.sqrt(n) * op)
    r = (hs / op) ** 2
    return threshold, _tail(s * s * r + t * t * n, factor)


def chernoff_optimize(t: float, C3: float, hs_sq: float, lambda_max: float) -> tuple[float, float]:
    """Minimise ``exp(-lam t/2 + C3 lam^2 hs_sq)`` over ``0 < lam <= lambda_max``.

    The exponent is a parabola in ``lam`` with vertex ``t / (4 C3 hs_sq)``,
    so the minimiser is that vertex clipped to ``lambda_max``.
    """
    for name, v in (("t", t), ("C3", C3), ("hs_sq", hs_sq), ("lambda_max", lambda_max)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    lam = min(t / (4.0 * C3 * hs_sq), lambda_max)
    return lam, math.exp(-lam * t / 2.0 + C3 * lam * lam * hs_sq)


def rate_function(form: BoundForm, *, K: float, hs: float = 1.0, op: float = 1.0
                  ) -> Callable[[float], float]:
    """Exponent per unit constant as a function of ``t``, for calibration.

    Only the kinds whose exponent is ``c * m(t)`` are supported.
    """
    kind = form.kind
    if kind is BoundKind.HANSON_WRIGHT:
        return lambda t: hw_rate(hs, op, K, t)
    if kind is BoundKind.CONCENTRATION:
        return lambda t: concentration_rate(op, K, t)
    if kind is BoundKind.SUBSPACE_DISTANCE:
        return lambda t: t * t / K**4
    if kind in (BoundKind.SMALL_BALL, BoundKind.SMALL_BALL_IMPROVED):
        r = (hs / op) ** 2
        return lambda t: r / K**4
    raise ValueError(f"no calibratable rate for {kind.value}")


# numeric lemmas used inside the proofs, checked on grids

def sqrt_lemma_violations(z: np.ndarray) -> np.ndarray:
    """Points where ``max(|z-1|, |z-1|^2) <= |z^2-1|`` fails (z >= 0)."""
    d = np.abs(z - 1.0)
    lhs = np.maximum(d, d * d)
    rhs = np.abs(z * z - 1.0)
    return z[lhs > rhs * (1.0 + 1e-15)]


def chi2_exp_lemma_violations(z: np.ndarray) -> np.ndarray:
    """Points where ``(1-z)^{-1/2} <= e^z`` fails (0 <= z <= 1/2)."""
    return z[(1.0 - z) ** -0.5 > np.exp(z) * (1.0 + 1e-15)]
