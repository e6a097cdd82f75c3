"""Reference computations that share no code path with the library."""

import itertools
import math

import numpy as np
from scipy import integrate, stats


def jacobi_eigvals(s, sweeps=60, tol=1e-15):
    """Eigenvalues of a symmetric matrix by cyclic two-sided Jacobi rotations."""
    a = np.array(s, dtype=float)
    n = a.shape[0]
    for _ in range(sweeps):
        off = math.sqrt(np.sum(a * a) - np.sum(np.diag(a) ** 2))
        if off <= tol * np.linalg.norm(a):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= 1e-18 * abs(a[q, q] - a[p, p]):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = sn
                rot[q, p] = -sn
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))[::-1]


def jacobi_singular_values(a):
    a = np.asarray(a, dtype=float)
    gram = a.T @ a if a.shape[1] <= a.shape[0] else a @ a.T
    return np.sqrt(np.clip(jacobi_eigvals(gram), 0.0, None))


def brute_quadratic_mean(a):
    """Mean of x'Ax over all sign vectors x in {-1, 1}^n."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    vals = [np.array(x) @ a @ np.array(x) for x in itertools.product((-1.0, 1.0), repeat=n)]
    return math.fsum(vals) / len(vals)


def brute_decoupling(a, x):
    """(S, 4 * average of S_delta) by explicit loops over masks and indices."""
    n = len(x)
    s = math.fsum(a[i][j] * x[i] * x[j] for i in range(n) for j in range(n) if i != j)
    total = []
    for mask in itertools.product((0, 1), repeat=n):
        total.append(math.fsum(
            a[i][j] * x[i] * x[j] for i in range(n) for j in range(n)
            if mask[i] == 1 and mask[j] == 0))
    return s, 4.0 * math.fsum(total) / 2**n


def gaussian_abs_moment(p):
    return 2 ** (p / 2) * math.gamma((p + 1) / 2) / math.sqrt(math.pi)


def centered_chi2_abs_moment(p):
    """E|g^2 - 1|^p by quadrature against the chi-square(1) density."""
    f = lambda x: abs(x - 1.0) ** p * stats.chi2.pdf(x, 1)
    left, _ = integrate.quad(f, 0.0, 1.0, limit=200)
    right, _ = integrate.quad(f, 1.0, np.inf, limit=200)
    return left + right


def grid_min_chernoff(t, c3, hs_sq, lam_max, points=20001):
    lam = np.linspace(lam_max / points, lam_max, points)
    with np.errstate(over="ignore"):
        return float(np.min(np.exp(-lam * t / 2 + c3 * lam**2 * hs_sq)))


def seeded(seed, shape):
    """Standard normal array drawn from the library's stream for ``seed``."""
    from conclab.distributions import SeedStream

    return SeedStream(seed).generator().standard_normal(shape)
