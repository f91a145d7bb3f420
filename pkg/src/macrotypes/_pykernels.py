"""Pure numpy implementations of the hot kernels.

Signatures match the compiled ``_ckernels`` module exactly; see
``macrotypes._kernels`` for the import-time selection.
"""
import numpy as np


def quadform_gauss(w, X, inv):
    """``sum_ij w_i w_j exp(-inv * ||X_i - X_j||^2)``."""
    w = np.asarray(w, dtype=float)
    X = np.asarray(X, dtype=float)
    total = 0.0
    # row blocks bound the temporary to ~4M entries
    block = max(1, 4_000_000 // max(len(w), 1))
    for s in range(0, len(w), block):
        diff = X[s:s + block, None, :] - X[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", diff, diff)
        total += float(w[s:s + block] @ np.exp(-inv * r2) @ w)
    return total


def quadform_gauss_1d(w, x, inv):
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    total = 0.0
    block = max(1, 4_000_000 // max(len(w), 1))
    for s in range(0, len(w), block):
        r2 = (x[s:s + block, None] - x[None, :]) ** 2
        total += float(w[s:s + block] @ np.exp(-inv * r2) @ w)
    return total


def poisson_binomial(p):
    """pmf of the number of successes; ``p[k]`` is molecule k's success probability."""
    p = np.asarray(p, dtype=float)
    pmf = np.zeros(len(p) + 1)
    pmf[0] = 1.0
    for n, pk in enumerate(p, start=1):
        pmf[1:n + 1] = pmf[1:n + 1] * (1.0 - pk) + pmf[0:n] * pk
        pmf[0] *= 1.0 - pk
    return pmf


def sym_power_2(a, N):
    """Restriction of ``a^{(x)N}`` to the symmetric subspace for a 2x2 matrix ``a``.

    Rows and columns are indexed by the count of the first letter.
    """
    a = np.asarray(a, dtype=complex)
    out = np.ones((1, 1), dtype=complex)
    for n in range(1, N + 1):
        i = np.arange(n + 1)
        s0 = np.sqrt(i / n)  # weight for removing letter 0
        s1 = np.sqrt((n - i) / n)
        new = (
            _shift(out, 1, 1) * a[0, 0] * np.outer(s0, s0)
            + _shift(out, 1, 0) * a[0, 1] * np.outer(s0, s1)
            + _shift(out, 0, 1) * a[1, 0] * np.outer(s1, s0)
            + _shift(out, 0, 0) * a[1, 1] * np.outer(s1, s1)
        )
        out = new
    return out


def _shift(m, di, dj):
    n = m.shape[0]
    out = np.zeros((n + 1, n + 1), dtype=m.dtype)
    out[di:di + n, dj:dj + n] = m
    return out
