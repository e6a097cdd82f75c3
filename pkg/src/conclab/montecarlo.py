"""Reproducible sampling of the random statistics and their empirical tails.

A *statistic* is any callable ``stat(stream, count) -> ndarray`` returning
``count`` independent draws. The statistic functions below take their fixed
arguments first, so ``functools.partial(quad_form_stat, A, spec)`` is a
statistic.

Sampling is split into fixed-size chunks; chunk ``i`` always draws from
``SeedStream(root_seed, i)``. Results therefore do not depend on how many
worker threads process the chunks.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import beta as _beta

from . import linalg
from .distributions import DistSpec, SeedStream, sample
from .errors import DimensionMismatch, EmptyInput, NonSquare, Overflow, TooLarge

Statistic = Callable[[SeedStream, int], np.ndarray]

DEFAULT_CHUNK = 1 << 15
DEFAULT_CONF = 0.99
DECOUPLING_MAX_N = 16
MGF_MAX_EXPONENT = 700.0
PRODUCT_NORM_REL_TOL = 1e-6
PRODUCT_NORM_MAX_ITER = 10_000

MODES = ("abs", "upper", "lower")


def matrix_fingerprint(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        arr = np.ascontiguousarray(np.asarray(a, dtype="<f8"))
        h.update(repr(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()[:16]


# ---------------------------------------------------------------- statistics

def _unit_variance(spec: DistSpec) -> None:
    if not spec.unit_variance:
        raise ValueError(f"{spec} must have unit variance for this statistic")


def quad_form_stat(a, spec: DistSpec, stream: SeedStream, count: int = 1) -> np.ndarray:
    """Draws of ``X'AX - trace(A)`` (the centred quadratic form)."""
    arr = linalg.as_matrix(a)
    if arr.shape[0] != arr.shape[1]:
        raise NonSquare(f"quadratic form needs a square matrix, got {arr.shape}")
    _unit_variance(spec)
    x = sample(spec, (count, arr.shape[0]), stream)
    return np.einsum("ki,ki->k", x @ arr.T, x) - np.trace(arr)


def offdiag_chaos_stat(a, spec: DistSpec, stream: SeedStream, count: int = 1) -> np.ndarray:
    """Draws of ``sum_{i != j} a_ij X_i X_j``."""
    arr = linalg.as_matrix(a)
    if arr.shape[0] != arr.shape[1]:
        raise NonSquare(f"chaos needs a square matrix, got {arr.shape}")
    off = arr - np.diag(np.diag(arr))
    x = sample(spec, (count, arr.shape[0]), stream)
    return np.einsum("ki,ki->k", x @ off.T, x)


def norm_stat(a, spec: DistSpec, stream: SeedStream, count: int = 1) -> np.ndarray:
    """Draws of ``|AX|_2 - |A|_HS``."""
    arr = linalg.as_matrix(a)
    _unit_variance(spec)
    x = sample(spec, (count, arr.shape[1]), stream)
    return np.linalg.norm(x @ arr.T, axis=1) - linalg.hs_norm(arr)


def dist_subspace_stat(basis, spec: DistSpec, stream: SeedStream, count: int = 1) -> np.ndarray:
    """Draws of ``d(X, E) - sqrt(n - d)`` where ``E`` is spanned by ``basis`` columns."""
    b = np.asarray(basis, dtype=float)
    _unit_variance(spec)
    proj = linalg.orth_complement_projector(b)
    n, d = b.shape
    x = sample(spec, (count, n), stream)
    return np.linalg.norm(x @ proj, axis=1) - math.sqrt(n - d)


def product_norm_stat(b, n: int, spec: DistSpec, stream: SeedStream, count: int = 1) -> np.ndarray:
    """Draws of ``|B G|`` with ``G`` an ``N x n`` matrix of i.i.d. entries."""
    arr = linalg.as_matrix(b)
    if n < 1:
        raise DimensionMismatch("n must be a positive integer")
    _unit_variance(spec)
    g = sample(spec, (count, arr.shape[1], n), stream)
    return np.array([
        linalg.op_norm(arr @ gk, rel_tol=PRODUCT_NORM_REL_TOL, max_iter=PRODUCT_NORM_MAX_ITER)
        for gk in g
    ])


def small_ball_stat(a, y, spec: DistSpec, stream: SeedStream, count: int = 1) -> np.ndarray:
    """Draws of ``|AX - y|_2``."""
    arr = linalg.as_matrix(a)
    yv = np.asarray(y, dtype=float).ravel()
    if yv.shape[0] != arr.shape[0]:
        raise DimensionMismatch(f"y has length {yv.shape[0]}, A has {arr.shape[0]} rows")
    x = sample(spec, (count, arr.shape[1]), stream)
    return np.linalg.norm(x @ arr.T - yv, axis=1)


def synthetic_tail_stat(inverse_rate: Callable[[np.ndarray], np.ndarray],
                        stream: SeedStream, count: int = 1) -> np.ndarray:
    """Symmetric draws with ``P(|Y| > t) = min(1, 2 exp(-m(t)))`` exactly.

    ``inverse_rate`` is the inverse of the increasing rate ``m``.
    """
    rng = stream.generator()
    u = 1.0 - rng.random(count)  # (0, 1]
    sign = np.where(rng.random(count) < 0.5, -1.0, 1.0)
    return sign * inverse_rate(np.log(2.0 / u))


# ---------------------------------------------------------------- sampling

def draw(stat: Statistic, n_samples: int, root_seed: int, *, workers: int = 1,
         chunk_size: int = DEFAULT_CHUNK) -> tuple[np.ndarray, bool]:
    """Run ``stat`` over deterministic chunks; returns ``(values, complete)``.

    On ``KeyboardInterrupt`` the already finished leading chunks are
    returned with ``complete=False``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    sizes = [min(chunk_size, n_samples - start) for start in range(0, n_samples, chunk_size)]

    def run(i: int) -> np.ndarray:
        return np.asarray(stat(SeedStream(root_seed, i), sizes[i]), dtype=float)

    parts: list[np.ndarray] = []
    complete = True
    if workers <= 1:
        try:
            for i in range(len(sizes)):
                parts.append(run(i))
        except KeyboardInterrupt:
            complete = False
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        futures = [pool.submit(run, i) for i in range(len(sizes))]
        try:
            for fut in futures:
                parts.append(fut.result())
        except KeyboardInterrupt:
            complete = False
            for fut in futures:
                fut.cancel()
        finally:
            pool.shutdown(wait=True, cancel_futures=True)
    if not parts:
        return np.empty(0), False
    return np.concatenate(parts), complete


def clopper_pearson(k: int, n: int, conf_level: float = DEFAULT_CONF) -> tuple[float, float]:
    """Exact two-sided binomial interval for ``k`` successes in ``n`` trials."""
    if not 0 < conf_level < 1:
        raise ValueError("conf_level must lie in (0, 1)")
    if not 0 <= k <= n or n < 1:
        raise ValueError(f"need 0 <= k <= n and n >= 1, got k={k}, n={n}")
    alpha = 1.0 - conf_level
    lo = 0.0 if k == 0 else float(_beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(_beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


@dataclass
class TailPoint:
    t: float
    n_samples: int
    n_exceed: int
    p_hat: float
    ci_low: float
    ci_high: float
    conf_level: float


@dataclass
class TailCurve:
    statistic_id: str
    points: list[TailPoint]
    dist: str = ""
    matrix_fingerprint: str = ""
    mode: str = "abs"
    root_seed: int = 0
    complete: bool = True
    metadata: dict = field(default_factory=dict)

    @property
    def t(self) -> np.ndarray:
        return np.array([p.t for p in self.points])

    @property
    def p_hat(self) -> np.ndarray:
        return np.array([p.p_hat for p in self.points])

    @property
    def ci_low(self) -> np.ndarray:
        return np.array([p.ci_low for p in self.points])

    @property
    def ci_high(self) -> np.ndarray:
        return np.array([p.ci_high for p in self.points])

    def to_csv(self, extra: Optional[dict[str, Sequence[float]]] = None) -> str:
        """CSV with columns ``t,n,k,p_hat,lo,hi`` plus any ``extra`` columns."""
        extra = extra or {}
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["t", "n", "k", "p_hat", "lo", "hi", *extra])
        for i, p in enumerate(self.points):
            w.writerow([repr(float(p.t)), p.n_samples, p.n_exceed, repr(p.p_hat),
                        repr(p.ci_low), repr(p.ci_high),
                        *(repr(float(col[i])) for col in extra.values())])
        return out.getvalue()

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "TailCurve":
        d = dict(d)
        d["points"] = [TailPoint(**p) for p in d["points"]]
        return cls(**d)


def tail_from_values(values: np.ndarray, t_grid: Sequence[float], *, mode: str = "abs",
                     conf_level: float = DEFAULT_CONF, statistic_id: str = "",
                     **curve_fields) -> TailCurve:
    """Count events over the whole grid from one pool of values.

    ``mode`` selects the event: ``abs`` is ``|v| > t``, ``upper`` is
    ``v > t``, ``lower`` is ``v < t``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    grid = np.asarray(t_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("t_grid must be nonempty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("t_grid must be sorted")
    v = np.asarray(values, dtype=float)
    n = v.size
    if n == 0:
        raise EmptyInput("no samples to build a tail curve from")
    key = np.sort(np.abs(v) if mode == "abs" else v)
    if mode == "lower":
        counts = np.searchsorted(key, grid, side="left")
    else:
        counts = n - np.searchsorted(key, grid, side="right")
    points = []
    for t, k in zip(grid, counts):
        lo, hi = clopper_pearson(int(k), n, conf_level)
        points.append(TailPoint(float(t), n, int(k), int(k) / n, lo, hi, conf_level))
    return TailCurve(statistic_id=statistic_id, points=points, mode=mode, **curve_fields)


def empirical_tail(stat: Statistic, t_grid: Sequence[float], n_samples: int,
                   conf_level: float = DEFAULT_CONF, root_seed: int = 0, *,
                   mode: str = "abs", workers: int = 1, chunk_size: int = DEFAULT_CHUNK,
                   statistic_id: str = "", dist: str = "", matrix_fingerprint: str = "",
                   ) -> TailCurve:
    """Empirical tail curve of ``stat`` with Clopper-Pearson intervals."""
    if n_samples < 100:
        raise ValueError("empirical_tail needs at least 100 samples")
    values, complete = draw(stat, n_samples, root_seed, workers=workers, chunk_size=chunk_size)
    curve = tail_from_values(values, t_grid, mode=mode, conf_level=conf_level,
                             statistic_id=statistic_id, dist=dist,
                             matrix_fingerprint=matrix_fingerprint, root_seed=root_seed)
    curve.complete = complete
    return curve


# ---------------------------------------------------------------- proof oracles

@dataclass(frozen=True)
class DecoupledForm:
    mask: np.ndarray
    index_set: np.ndarray
    a_delta: np.ndarray

    @classmethod
    def from_mask(cls, a, mask) -> "DecoupledForm":
        arr = linalg.as_matrix(a)
        delta = np.asarray(mask, dtype=bool)
        if delta.shape != (arr.shape[0],) or arr.shape[0] != arr.shape[1]:
            raise DimensionMismatch("mask length must equal the matrix order")
        a_delta = arr * np.outer(delta, ~delta)
        return cls(mask=delta, index_set=np.flatnonzero(delta), a_delta=a_delta)

    def value(self, x) -> float:
        """``S_delta = sum_{i in L, j not in L} a_ij x_i x_j``."""
        xv = np.asarray(x, dtype=float)
        return float(xv @ self.a_delta @ xv)


def decoupling_enumerate(a, x) -> tuple[float, float]:
    """Return ``(S, 4 * mean_delta S_delta)`` over all ``2**n`` masks.

    ``S`` is the off-diagonal chaos ``sum_{i != j} a_ij x_i x_j``; the
    diagonal of ``a`` is ignored. The two numbers agree exactly in exact
    arithmetic.
    """
    arr = linalg.as_matrix(a)
    n = arr.shape[0]
    if arr.shape[1] != n:
        raise NonSquare("decoupling needs a square matrix")
    if n > DECOUPLING_MAX_N:
        raise TooLarge(f"2**{n} masks is too many; limit n <= {DECOUPLING_MAX_N}")
    xv = np.asarray(x, dtype=float).ravel()
    if xv.shape[0] != n:
        raise DimensionMismatch("x must have one entry per row of a")
    m = arr * np.outer(xv, xv)
    np.fill_diagonal(m, 0.0)
    s = math.fsum(m.ravel())
    masks = ((np.arange(2**n)[:, None] >> np.arange(n)) & 1).astype(float)
    s_delta = np.einsum("ki,ij,kj->k", masks, m, 1.0 - masks)
    return s, 4.0 * math.fsum(s_delta) / 2**n


def empirical_mgf(samples, lam: float) -> float:
    """Sample mean of ``exp(lam * x)``.

    Raises
    ------
    Overflow
        If any exponent ``lam * x`` exceeds 700.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise EmptyInput("empirical_mgf needs samples")
    if lam == 0:
        return 1.0
    z = lam * x
    if float(z.max()) > MGF_MAX_EXPONENT:
        raise Overflow(f"exponent {float(z.max()):.1f} exceeds {MGF_MAX_EXPONENT}")
    return float(np.mean(np.exp(z)))


def chi2_mgf(lam: float) -> float:
    """``E exp(lam g^2) = (1 - 2 lam)^{-1/2}`` for ``lam < 1/2``."""
    if lam >= 0.5:
        return math.inf
    return (1.0 - 2.0 * lam) ** -0.5


def statistic(fn, *args) -> Statistic:
    """Bind the fixed arguments of a statistic function."""
    return functools.partial(fn, *args)
