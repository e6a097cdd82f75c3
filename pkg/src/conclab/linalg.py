"""Deterministic dense linear algebra.

Matrices are plain ``numpy`` arrays of dtype float64 (complex128 for the
complex inputs of the embedding helpers). Every public function validates
its input through :func:`as_matrix`, which rejects NaN/Inf.
"""

from __future__ import annotations

import functools
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO, Union

import numpy as np
from scipy.stats import norm as _normal
from scipy.stats import qmc

from .errors import DimensionTooLarge, NonConvergence, RankDeficient, ZeroMatrix

# min(m, n) at or below which op_norm uses a full LAPACK SVD
DENSE_SVD_CUTOFF = 64
GS_RANK_TOL = 1e-10
HALF_NET_MAX_DIM = 4
HALF_NET_GRID_FACTOR = 10_000


def as_matrix(a, *, dtype=np.float64) -> np.ndarray:
    """Return ``a`` as a finite 2-D array, raising ``ValueError`` otherwise."""
    arr = np.asarray(a, dtype=dtype)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"matrix dimensions must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    return arr


def as_complex_matrix(a) -> np.ndarray:
    return as_matrix(a, dtype=np.complex128)


@dataclass(frozen=True)
class SvdResult:
    singular_values: np.ndarray
    tolerance_used: float

    @property
    def max(self) -> float:
        return float(self.singular_values[0]) if self.singular_values.size else 0.0


def hs_norm(a) -> float:
    """Hilbert-Schmidt (Frobenius) norm, ``sqrt(sum |a_ij|^2)``."""
    arr = np.asarray(a)
    if arr.size == 0:
        return 0.0
    # scale first so huge/tiny entries neither overflow nor underflow
    scale = float(np.max(np.abs(arr)))
    if scale == 0.0 or not math.isfinite(scale):
        return scale if not math.isfinite(scale) else 0.0
    return scale * float(np.sqrt(np.sum(np.abs(arr / scale) ** 2)))


def _power_iteration(a: np.ndarray, rel_tol: float, max_iter: int) -> float:
    m, n = a.shape
    gram_side = n if n <= m else m
    apply = (lambda v: a.T @ (a @ v)) if n <= m else (lambda v: a @ (a.T @ v))

    v = np.full(gram_side, 1.0 / math.sqrt(gram_side))
    w = apply(v)
    if np.linalg.norm(w) <= 1e-14 * hs_norm(a) ** 2:
        # ones vector sits in the null space of the Gram matrix; restart on the
        # heaviest coordinate, still deterministic
        heavy = np.sum(a * a, axis=0 if n <= m else 1)
        v = np.zeros(gram_side)
        v[int(np.argmax(heavy))] = 1.0
        w = apply(v)

    lam_old = float(v @ w)
    for _ in range(max_iter):
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        w = apply(v)
        lam = float(v @ w)
        if lam > 0 and abs(lam - lam_old) <= rel_tol * lam:
            return math.sqrt(lam)
        lam_old = lam
    raise NonConvergence(
        f"power iteration did not reach rel_tol={rel_tol:g} in {max_iter} iterations"
    )


def op_norm(a, rel_tol: float = 1e-12, max_iter: int = 10_000) -> float:
    """Largest singular value of ``a``.

    Small matrices (``min(m, n) <= 64``) go straight to a full SVD. Larger
    ones use power iteration on the Gram matrix, started from the
    normalized all-ones vector, stopping once the Rayleigh quotient moves by
    less than ``rel_tol`` relative.

    Raises
    ------
    NonConvergence
        If ``max_iter`` iterations pass without meeting ``rel_tol``.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    arr = as_matrix(a)
    if not np.any(arr):
        return 0.0
    if min(arr.shape) <= DENSE_SVD_CUTOFF:
        return float(np.linalg.svd(arr, compute_uv=False)[0])
    return _power_iteration(arr, rel_tol, max_iter)


def singular_values(a) -> SvdResult:
    arr = as_matrix(a)
    if min(arr.shape) > 4096:
        raise ValueError("singular_values is limited to min(rows, cols) <= 4096")
    try:
        s = np.linalg.svd(arr, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(str(exc)) from exc
    tol = float(s[0]) * max(arr.shape) * np.finfo(float).eps if s.size else 0.0
    return SvdResult(singular_values=s, tolerance_used=tol)


def stable_rank(a) -> float:
    """``hs_norm(a)**2 / op_norm(a)**2``; lies in ``[1, rank(a)]``."""
    arr = as_matrix(a)
    top = op_norm(arr)
    if top == 0.0:
        raise ZeroMatrix("stable rank of the zero matrix is undefined")
    return (hs_norm(arr) / top) ** 2


def numerical_rank(a, tol: float = GS_RANK_TOL) -> int:
    return _pivoted_gram_schmidt(as_matrix(a), tol).shape[1]


def _pivoted_gram_schmidt(basis: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal columns spanning ``basis`` (modified GS, column pivoting).

    Columns whose residual norm drops below ``tol`` times the largest input
    column norm are treated as dependent and dropped.
    """
    work = basis.astype(np.float64, copy=True)
    n, d = work.shape
    cutoff = tol * float(np.max(np.linalg.norm(work, axis=0), initial=0.0))
    q_cols: list[np.ndarray] = []
    remaining = list(range(d))
    while remaining and len(q_cols) < n:
        norms = np.linalg.norm(work[:, remaining], axis=0)
        k = int(np.argmax(norms))
        if norms[k] <= cutoff or norms[k] == 0.0:
            break
        j = remaining.pop(k)
        q = work[:, j] / norms[k]
        # second pass restores orthogonality lost to cancellation
        for prev in q_cols:
            q = q - (prev @ q) * prev
        q = q / np.linalg.norm(q)
        q_cols.append(q)
        for r in remaining:
            work[:, r] -= (q @ work[:, r]) * q
    if not q_cols:
        return np.zeros((n, 0))
    return np.column_stack(q_cols)


def orth_complement_projector(basis) -> np.ndarray:
    """Orthogonal projector onto the complement of ``span(basis columns)``.

    ``basis`` is ``n x d``; its columns must be linearly independent at
    relative tolerance ``1e-10``. A basis with zero columns (``d = 0``) is
    accepted and yields the identity.

    Raises
    ------
    RankDeficient
        If the numerical rank of ``basis`` is below ``d``.
    """
    arr = np.asarray(basis, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError(f"basis must be an n x d array, got shape {arr.shape}")
    n, d = arr.shape
    if d == 0:
        return np.eye(n)
    arr = as_matrix(arr)
    q = _pivoted_gram_schmidt(arr, GS_RANK_TOL)
    if q.shape[1] < d:
        raise RankDeficient(f"basis has numerical rank {q.shape[1]} < {d}")
    p = np.eye(n) - q @ q.T
    return 0.5 * (p + p.T)


def _sphere_grid(n: int, count: int) -> np.ndarray:
    if n == 2:
        theta = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if n == 3:
        # Fibonacci lattice
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        r = np.sqrt(1.0 - z * z)
        phi = np.pi * (3.0 - math.sqrt(5.0)) * np.arange(count)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    # unscrambled Halton points pushed through the normal quantile; skip the origin
    u = qmc.Halton(d=n, scramble=False).random(count + 1)[1:]
    g = _normal.ppf(u)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def half_net(n: int) -> np.ndarray:
    """A 1/2-separated, 1/2-covering set of unit vectors in ``R^n``.

    Built greedily over a deterministic grid of ``10_000 * 5**n`` sphere
    points: walk the grid in order and keep every point at distance at
    least 1/2 from all points kept so far. Rows of the result are the net.

    Raises
    ------
    DimensionTooLarge
        For ``n > 4``.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if n > HALF_NET_MAX_DIM:
        raise DimensionTooLarge(f"half_net supports n <= {HALF_NET_MAX_DIM}, got {n}")
    return _half_net_cached(n).copy()


@functools.lru_cache(maxsize=None)
def _half_net_cached(n: int) -> np.ndarray:
    if n == 1:
        return np.array([[-1.0], [1.0]])
    pts = _sphere_grid(n, HALF_NET_GRID_FACTOR * 5**n)
    # |x - y| < 1/2  <=>  <x, y> > 1 - 1/8
    dot_cut = 1.0 - 0.125
    net = []
    alive = pts
    while alive.shape[0]:
        head = alive[0]
        net.append(head)
        alive = alive[alive @ head <= dot_cut]
    return np.array(net)


def complexify_stack(a) -> np.ndarray:
    """Real ``2m x n`` embedding ``[Re A; Im A]`` for real input vectors."""
    arr = as_complex_matrix(a)
    return np.vstack([arr.real, arr.imag])


def complexify_block(a) -> np.ndarray:
    """Real ``2m x 2n`` embedding ``[[Re A, -Im A], [Im A, Re A]]``."""
    arr = as_complex_matrix(a)
    re, im = arr.real, arr.imag
    return np.block([[re, -im], [im, re]])


def format_matrix(a) -> str:
    arr = as_matrix(a)
    out = io.StringIO()
    out.write(f"{arr.shape[0]} {arr.shape[1]}\n")
    for row in arr:
        out.write(" ".join(repr(float(x)) for x in row))
        out.write("\n")
    return out.getvalue()


def parse_matrix(text: str) -> np.ndarray:
    """Parse the ``m n`` header + rows text format; rejects NaN/Inf."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix text")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"bad header line {lines[0]!r}; expected 'm n'")
    m, n = int(header[0]), int(header[1])
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be positive")
    rows = lines[1:]
    if len(rows) != m:
        raise ValueError(f"expected {m} rows, found {len(rows)}")
    data = []
    for i, ln in enumerate(rows):
        vals = [float(tok) for tok in ln.split()]
        if len(vals) != n:
            raise ValueError(f"row {i} has {len(vals)} entries, expected {n}")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"row {i} contains NaN or Inf")
        data.append(vals)
    return np.array(data, dtype=np.float64)


def read_matrix(src: Union[str, Path, TextIO]) -> np.ndarray:
    if hasattr(src, "read"):
        return parse_matrix(src.read())
    return parse_matrix(Path(src).read_text())


def write_matrix(a, dst: Union[str, Path, TextIO]) -> None:
    text = format_matrix(a)
    if hasattr(dst, "write"):
        dst.write(text)
    else:
        Path(dst).write_text(text)
