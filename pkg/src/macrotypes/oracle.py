"""Brute-force reference on the full ``d**N`` Hilbert space.

Nothing here uses symmetry. Type-diagonal operators are kept as a weight per
string in the observable eigenbasis, and basis changes act molecule by
molecule. Meant for cross-checking the symmetric engine at small ``N``.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .combinatorics import log_type_class_size, type_index
from .errors import ResourceCapError, ValidationError

#: Default limit on the Hilbert-space dimension ``d**N``.
DIM_CAP = 2**14
#: Absolute limit, reachable with ``allow_large=True``.
HARD_DIM_CAP = 2**20


def check_dim(N: int, d: int, allow_large: bool = False) -> int:
    dim = d**N
    cap = HARD_DIM_CAP if allow_large else DIM_CAP
    if dim > cap:
        raise ResourceCapError(f"d**N = {dim} exceeds the dense cap {cap}")
    return dim


def _infer_N(dim: int, d: int) -> int:
    N = int(round(np.log(dim) / np.log(d))) if d > 1 else 0
    if d**N != dim:
        raise ValidationError(f"dimension {dim} is not a power of {d}")
    return N


def string_counts(N: int, d: int) -> np.ndarray:
    """``(d**N, d)`` letter counts for every string, first molecule most significant."""
    digits = np.indices((d,) * N).reshape(N, -1).T
    return np.stack([(digits == j).sum(axis=1) for j in range(d)], axis=1)


# ----------------------------------------------------------- local operators
def apply_local(x: np.ndarray, op: np.ndarray, N: int, axes=None) -> np.ndarray:
    """Apply ``op`` to each molecule in ``axes`` (default all).

    ``x`` is a vector or a matrix whose rows index the ``d**N`` strings.
    """
    d = op.shape[0]
    x = np.asarray(x, dtype=complex)
    extra = x.shape[1:]
    t = x.reshape((d,) * N + extra)
    for ax in range(N) if axes is None else axes:
        t = np.moveaxis(np.tensordot(op, t, axes=([1], [ax])), 0, ax)
    return t.reshape(x.shape)


def conjugate_local(rho: np.ndarray, op: np.ndarray, N: int) -> np.ndarray:
    """``op^{(x)N} rho op^{(x)N, dagger}``."""
    left = apply_local(rho, op, N)
    return apply_local(left.conj().T, op, N).conj().T


def local_power(op: np.ndarray, N: int, allow_large: bool = False) -> np.ndarray:
    """``op^{(x)N}`` as a dense matrix."""
    check_dim(N, op.shape[0], allow_large)
    out = np.ones((1, 1), dtype=complex)
    for _ in range(N):
        out = np.kron(out, op)
    return out


# ------------------------------------------------------------------ states
def product_vector(psi, N: int, allow_large: bool = False) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    check_dim(N, len(psi), allow_large)
    out = np.ones(1, dtype=complex)
    for _ in range(N):
        out = np.kron(out, psi)
    return out


def product_density(nus, allow_large: bool = False) -> np.ndarray:
    """``nu_1 (x) nu_2 (x) ...`` for a list of single-molecule densities."""
    nus = [np.asarray(n, dtype=complex) for n in nus]
    check_dim(len(nus), len(nus[0]), allow_large)
    out = np.ones((1, 1), dtype=complex)
    for n in nus:
        out = np.kron(out, n)
    return out


def as_density(x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return np.outer(x, x.conj()) if x.ndim == 1 else x


def symmetric_to_dense(state, allow_large: bool = False) -> np.ndarray:
    """Lab-frame vector (pure) or density matrix (mixed) of a symmetric-engine state."""
    N, d, basis = state.N, state.d, state.basis
    check_dim(N, d, allow_large)
    counts = string_counts(N, d)
    idx = type_index(counts, N)
    inv_sqrt = np.exp(-0.5 * log_type_class_size(counts))
    if hasattr(state, "amplitudes"):
        return apply_local(state.amplitudes()[idx] * inv_sqrt, basis.u, N)
    E = np.zeros((len(counts), state.matrix.shape[0]))
    E[np.arange(len(counts)), idx] = inv_sqrt  # isometry: type basis -> strings
    return conjugate_local(E @ state.matrix @ E.T, basis.u, N)


# --------------------------------------------------- type-diagonal operators
def _string_weights(basis, N: int, fn) -> np.ndarray:
    counts = string_counts(N, basis.d)
    return np.asarray(fn(counts), dtype=float)


def _diag_operator(basis, N: int, diag: np.ndarray, allow_large: bool) -> np.ndarray:
    U = local_power(basis.u, N, allow_large)
    return (U * diag) @ U.conj().T


def dense_type_projector(N: int, basis, L, allow_large: bool = False) -> np.ndarray:
    """Projector onto the strings of type ``L`` (counts), in the lab frame."""
    check_dim(N, basis.d, allow_large)
    L = np.asarray(getattr(L, "counts", L))
    diag = _string_weights(basis, N, lambda c: np.all(c == L, axis=1))
    return _diag_operator(basis, N, diag, allow_large)


def povm_weights(kernel, ell, basis, N: int) -> np.ndarray:
    """``q(ell | X)`` for every string ``X``, read from the string's type."""
    return _string_weights(basis, N, lambda c: kernel.weights(c / N, ell))


def dense_coarse_povm(kernel, ell, basis, N: int, allow_large: bool = False) -> np.ndarray:
    """``sum_L sqrt(q_L(ell)) Q_L`` as a dense lab-frame matrix."""
    check_dim(N, basis.d, allow_large)
    return _diag_operator(basis, N, np.sqrt(povm_weights(kernel, ell, basis, N)), allow_large)


def type_weight_operator(weights, basis, N: int, allow_large: bool = False) -> np.ndarray:
    """Dense ``sum_L w_L Q_L`` for weights listed per canonical type."""
    check_dim(N, basis.d, allow_large)
    diag = _string_weights(basis, N, lambda c: np.asarray(weights)[type_index(c, N)])
    return _diag_operator(basis, N, diag, allow_large)


def _apply_diag(rho: np.ndarray, basis, N: int, diag: np.ndarray) -> np.ndarray:
    """``D rho D`` with ``D`` diagonal in ``basis``."""
    r = conjugate_local(rho, basis.u.conj().T, N)
    r = diag[:, None] * r * diag[None, :]
    return conjugate_local(r, basis.u, N)


# ------------------------------------------------------------ measurements
def outcome_density(state, kernel, ell, basis, N: int) -> float:
    rho = as_density(state)
    check_dim(N, basis.d)
    r = conjugate_local(rho, basis.u.conj().T, N)
    return float(np.diag(r).real @ povm_weights(kernel, ell, basis, N))


def conditional_post(state, kernel, ell, basis, N: int) -> np.ndarray:
    rho = as_density(state)
    out = _apply_diag(rho, basis, N, np.sqrt(povm_weights(kernel, ell, basis, N)))
    p = np.trace(out).real
    if not p > 0:
        raise ValidationError("zero-probability outcome")
    return out / p


def averaged_post(state, kernel, basis, N: int) -> np.ndarray:
    """``sum_{X,X'} G(X, X') |X><X| rho |X'><X'|`` with ``G`` read from the string types."""
    rho = as_density(state)
    counts = string_counts(N, basis.d)
    G = kernel.decoherence_matrix(counts / N)
    r = conjugate_local(rho, basis.u.conj().T, N)
    return conjugate_local(r * G, basis.u, N)


def bin_weights(kernel, basis, N: int, edges, coordinate: int = 0) -> np.ndarray:
    """Per-string probability of landing in each bin of one outcome coordinate."""
    counts = string_counts(N, basis.d)
    return kernel.bin_weights(counts / N, edges, coordinate)


def dense_history_probability(state, events, allow_large: bool = False) -> float:
    """``Tr(sqrt(E_n) ... sqrt(E_1) rho sqrt(E_1) ... sqrt(E_n))``.

    Each event is ``(basis, kernel, (lo, hi), coordinate)``; ``coordinate``
    may be omitted (defaults to 0). ``lo``/``hi`` may be infinite.
    """
    rho = as_density(state)
    if not events:
        return float(np.trace(rho).real)
    d = events[0][0].d
    N = _infer_N(len(rho), d)
    check_dim(N, d, allow_large)
    for ev in events:
        basis, kernel, (lo, hi) = ev[:3]
        coord = ev[3] if len(ev) > 3 else 0
        w = bin_weights(kernel, basis, N, [lo, hi], coord)[:, 1]
        rho = _apply_diag(rho, basis, N, np.sqrt(w))
    return float(np.trace(rho).real)


def dense_fidelity(a, b, method: str = "sqrtm") -> float:
    """Uhlmann fidelity of two dense states; ``method`` is ``sqrtm`` or ``eigh``."""
    a, b = as_density(a), as_density(b)
    if method == "sqrtm":
        sa = scipy.linalg.sqrtm(a)
        m = scipy.linalg.sqrtm(sa @ b @ sa)
        return float(np.clip(np.trace(m).real ** 2, 0.0, 1.0))
    if method == "eigh":
        vals, vecs = np.linalg.eigh(a)
        if vals.min() < -1e-8:
            raise ValidationError("first argument is not positive semidefinite")
        # eigenvalues below the rounding floor are zero; their square roots would not be
        floor = len(vals) * np.finfo(float).eps * max(vals.max(), 1e-300)
        sa = (vecs * np.sqrt(np.where(vals > floor, vals, 0.0))) @ vecs.conj().T
        m = sa @ b @ sa
        ev = np.linalg.eigvalsh((m + m.conj().T) / 2)
        floor = len(ev) * np.finfo(float).eps * max(ev.max(), 1e-300)
        return float(np.clip(np.sqrt(np.where(ev > floor, ev, 0.0)).sum() ** 2, 0.0, 1.0))
    raise ValidationError(f"unknown fidelity method {method!r}")


fidelity = dense_fidelity


def reduce_to_first(rho: np.ndarray, N: int, d: int) -> np.ndarray:
    """Partial trace over molecules 2..N."""
    t = as_density(rho).reshape(d, d ** (N - 1), d, d ** (N - 1))
    return np.einsum("iaja->ij", t)


def symmetrize(rho: np.ndarray, N: int, d: int) -> np.ndarray:
    """Average of ``rho`` over all molecule permutations (``N!`` terms)."""
    import itertools

    rho = as_density(rho)
    check_dim(N, d)
    t = rho.reshape((d,) * (2 * N))
    acc = np.zeros_like(t)
    perms = list(itertools.permutations(range(N)))
    for p in perms:
        acc += t.transpose(list(p) + [N + i for i in p])
    return acc.reshape(rho.shape) / len(perms)
