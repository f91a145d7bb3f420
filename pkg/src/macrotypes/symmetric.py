"""Permutation-symmetric engine.

States of ``N`` identical ``d``-level molecules that are invariant under
permutations live in the span of the type states

    |L> = |T[L]|^{-1/2} sum_{X in T[L]} |X>,

one per type ``L`` of ``N`` over ``d`` letters, written in the eigenbasis of
an :class:`ObservableBasis`. Every operation here costs a polynomial in
``N`` for fixed ``d``.

Pure states keep amplitudes as (log-magnitude, phase) pairs so that product
states remain exact at ``N ~ 1e5`` where multinomial factors underflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .combinatorics import log_type_class_size, type_index, type_table
from .errors import BasisMismatchError, ResourceCapError, ValidationError, ZeroProbabilityError
from .smoothing import SmoothingKernel

#: Largest type-basis dimension for which dense ``T x T`` densities are built.
DENSITY_DIM_CAP = 4096
#: Multinomial standard deviations kept by the pure-state fidelity fast path.
TAIL_SIGMAS = 8.0

_TWO_PI = 2 * math.pi


# --------------------------------------------------------------------- bases
@dataclass(frozen=True, eq=False)
class ObservableBasis:
    """Eigenbasis ``u`` (columns ``|x_j>``) and eigenvalues ``alpha`` of a single-molecule observable."""

    u: np.ndarray
    alpha: np.ndarray = None
    label: str = ""

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValidationError("basis matrix must be square")
        if np.abs(u.conj().T @ u - np.eye(len(u))).max() > 1e-12:
            raise ValidationError("basis matrix is not unitary")
        alpha = np.zeros(len(u)) if self.alpha is None else np.asarray(self.alpha, dtype=float)
        if alpha.shape != (len(u),):
            raise ValidationError("need one eigenvalue per basis vector")
        u.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "alpha", alpha)

    @property
    def d(self) -> int:
        return len(self.u)

    def observable(self) -> np.ndarray:
        return self.u @ np.diag(self.alpha) @ self.u.conj().T

    def same_as(self, other: "ObservableBasis", atol: float = 1e-12) -> bool:
        return self.d == other.d and np.abs(self.u - other.u).max() <= atol

    @classmethod
    def from_observable(cls, a: np.ndarray, label: str = "") -> "ObservableBasis":
        """Eigenbasis of a Hermitian matrix, eigenvalues in descending order."""
        a = np.asarray(a, dtype=complex)
        if np.abs(a - a.conj().T).max() > 1e-10:
            raise ValidationError("observable must be Hermitian")
        vals, vecs = np.linalg.eigh(a)
        order = np.argsort(-vals, kind="stable")
        vecs = vecs[:, order]
        # orthonormalize again so the unitarity check at 1e-12 holds
        q, r = np.linalg.qr(vecs)
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        return cls(q, vals[order], label)

    def to_record(self) -> dict:
        return {"label": self.label, "alpha": self.alpha.tolist(),
                "u_re": self.u.real.tolist(), "u_im": self.u.imag.tolist()}

    @classmethod
    def from_record(cls, rec: dict) -> "ObservableBasis":
        u = np.asarray(rec["u_re"]) + 1j * np.asarray(rec["u_im"])
        return cls(u, np.asarray(rec["alpha"]), rec.get("label", ""))


def computational_basis(d: int, alpha=None) -> ObservableBasis:
    return ObservableBasis(np.eye(d), alpha, "computational")


_SPIN = {
    "z": np.eye(2),
    "x": np.array([[1, 1], [1, -1]]) / math.sqrt(2),
    "y": np.array([[1, 1], [1j, -1j]]) / math.sqrt(2),
}


def spin_basis(axis: str) -> ObservableBasis:
    """Spin-1/2 magnetization basis; ``|x_1>`` carries +1/2, ``|x_2>`` carries -1/2."""
    if axis not in _SPIN:
        raise ValidationError(f"unknown spin axis {axis!r}")
    return ObservableBasis(_SPIN[axis], np.array([0.5, -0.5]), f"spin-{axis}")


def check_molecule_state(nu, atol: float = 1e-10) -> np.ndarray:
    """Validate a single-molecule density matrix (Hermitian, PSD, unit trace)."""
    nu = np.asarray(nu, dtype=complex)
    if nu.ndim != 2 or nu.shape[0] != nu.shape[1]:
        raise ValidationError("density matrix must be square")
    if np.abs(nu - nu.conj().T).max() > atol:
        raise ValidationError("density matrix not Hermitian")
    if abs(np.trace(nu).real - 1) > atol:
        raise ValidationError("density matrix trace differs from 1")
    if np.linalg.eigvalsh((nu + nu.conj().T) / 2).min() < -atol:
        raise ValidationError("density matrix not positive semidefinite")
    return nu


# --------------------------------------------------------------------- states
@dataclass(frozen=True, eq=False)
class SymmetricPureState:
    """Pure symmetric state of ``N`` molecules in the type basis of ``basis``."""

    N: int
    basis: ObservableBasis
    logmag: np.ndarray
    phase: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        T = math.comb(self.N + self.d - 1, self.d - 1)
        if self.logmag.shape != (T,) or self.phase.shape != (T,):
            raise ValidationError(f"expected {T} type amplitudes")
        if self.check:
            norm = np.exp(2 * self.logmag).sum()
            if abs(norm - 1) > 1e-10:
                raise ValidationError(f"state norm {norm} differs from 1")

    @property
    def d(self) -> int:
        return self.basis.d

    @property
    def types(self) -> np.ndarray:
        return type_table(self.N, self.d)

    def amplitudes(self) -> np.ndarray:
        return np.exp(self.logmag + 1j * self.phase)

    def probabilities(self) -> np.ndarray:
        """Type-measurement distribution ``|c_L|^2``."""
        return np.exp(2 * self.logmag)

    def to_density(self) -> "SymmetricDensity":
        c = self.amplitudes()
        return SymmetricDensity(self.N, self.basis, np.outer(c, c.conj()))

    @classmethod
    def from_amplitudes(cls, N: int, basis: ObservableBasis, amps, normalize: bool = False):
        amps = np.asarray(amps, dtype=complex)
        if normalize:
            nrm = np.linalg.norm(amps)
            if nrm == 0:
                raise ZeroProbabilityError("cannot normalize the zero vector")
            amps = amps / nrm
        with np.errstate(divide="ignore"):
            logmag = np.log(np.abs(amps))
        return cls(N, basis, logmag, np.angle(amps))

    def to_record(self) -> dict:
        """JSON-ready record: ``N``, ``d``, basis and the amplitude table."""
        return {
            "N": self.N,
            "d": self.d,
            "basis": self.basis.to_record(),
            "types": self.types.tolist(),
            "logmag": [None if not np.isfinite(x) else float(x) for x in self.logmag],
            "phase": self.phase.tolist(),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "SymmetricPureState":
        logmag = np.array([-np.inf if x is None else x for x in rec["logmag"]], dtype=float)
        return cls(rec["N"], ObservableBasis.from_record(rec["basis"]), logmag,
                   np.asarray(rec["phase"], dtype=float))


@dataclass(frozen=True, eq=False)
class SymmetricDensity:
    """Density matrix on the symmetric subspace, indexed by types of ``basis``."""

    N: int
    basis: ObservableBasis
    matrix: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        T = math.comb(self.N + self.d - 1, self.d - 1)
        if T > DENSITY_DIM_CAP:
            raise ResourceCapError(f"type dimension {T} exceeds density cap {DENSITY_DIM_CAP}")
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (T, T):
            raise ValidationError(f"expected a {T}x{T} matrix")
        object.__setattr__(self, "matrix", m)
        if self.check:
            if np.abs(m - m.conj().T).max() > 1e-10:
                raise ValidationError("density not Hermitian")
            if abs(np.trace(m).real - 1) > 1e-10:
                raise ValidationError(f"density trace {np.trace(m).real} differs from 1")
            if T <= 1024 and np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -1e-8:
                raise ValidationError("density not positive semidefinite")

    @property
    def d(self) -> int:
        return self.basis.d

    @property
    def types(self) -> np.ndarray:
        return type_table(self.N, self.d)

    def probabilities(self) -> np.ndarray:
        return np.clip(np.diag(self.matrix).real, 0.0, None)


def _same_frame(a, b):
    if a.N != b.N or a.d != b.d:
        raise BasisMismatchError("states have different N or d")
    if not a.basis.same_as(b.basis):
        raise BasisMismatchError("states are written in different bases")


def _check_basis(state, basis):
    if basis is not None and not state.basis.same_as(basis):
        raise BasisMismatchError("state is not expressed in the measurement basis; rotate it first")


# ----------------------------------------------------------------- creation
def product_state(beta, N: int, basis: ObservableBasis) -> SymmetricPureState:
    """``(sum_j beta_j |x_j>)^{(x)N}`` in the type basis.

    Phases of ``beta_j^{L_j}`` use the principal argument of ``beta_j`` times
    the integer count, reduced modulo ``2 pi``.
    """
    beta = np.asarray(beta, dtype=complex)
    if beta.shape != (basis.d,):
        raise ValidationError("need one amplitude per basis vector")
    if abs(np.vdot(beta, beta).real - 1) > 1e-10:
        raise ValidationError("beta is not normalized")
    L = type_table(N, basis.d)
    with np.errstate(divide="ignore", invalid="ignore"):
        logb = np.log(np.abs(beta))
        terms = np.where(L > 0, L * logb, 0.0)
    logmag = terms.sum(axis=1) + 0.5 * log_type_class_size(L)
    phase = np.mod((L * np.angle(beta)).sum(axis=1), _TWO_PI)
    # rounding can leave the norm 1e-15 away from one; renormalize in log space
    shift = 0.5 * np.log(np.exp(2 * (logmag - logmag.max())).sum()) + logmag.max()
    return SymmetricPureState(N, basis, logmag - shift, phase)


def product_state_from_vector(psi, N: int, basis: ObservableBasis) -> SymmetricPureState:
    """Product of ``N`` copies of the lab-frame vector ``psi``."""
    beta = basis.u.conj().T @ np.asarray(psi, dtype=complex)
    return product_state(beta, N, basis)


def macro_eigenvalue(L, basis: ObservableBasis) -> float:
    """Eigenvalue ``sum_j L_j alpha_j`` of the macroscopic observable on type ``L`` (counts)."""
    counts = np.asarray(getattr(L, "counts", L), dtype=float)
    if counts.shape[-1] != basis.d:
        raise ValidationError("type and basis dimensions differ")
    return counts @ basis.alpha


# ------------------------------------------------------------- measurement
def _kernel_weights(state, k: SmoothingKernel, ell) -> np.ndarray:
    return k.weights(state.types / state.N, ell)


def outcome_density(state, k: SmoothingKernel, ell, basis: ObservableBasis | None = None):
    """Density ``Tr(E_l rho)`` of outcome ``ell``; probability mass for discrete kernels."""
    _check_basis(state, basis)
    q = _kernel_weights(state, k, ell)
    return q @ state.probabilities()


def conditional_post_state(state: SymmetricPureState, k: SmoothingKernel, ell) -> SymmetricPureState:
    """Ideal (single-Kraus) update of a pure state on outcome ``ell``."""
    q = _kernel_weights(state, k, ell)
    with np.errstate(divide="ignore"):
        logq = 0.5 * np.log(q)
    logmag = state.logmag + logq
    top = np.max(logmag)
    if not np.isfinite(top):
        raise ZeroProbabilityError(f"outcome {ell!r} has zero probability")
    norm = 0.5 * np.log(np.exp(2 * (logmag - top)).sum()) + top
    return SymmetricPureState(state.N, state.basis, logmag - norm, state.phase)


def conditional_post_density(state, k: SmoothingKernel, ell, basis: ObservableBasis | None = None):
    """``Q_l rho Q_l^dagger / P(l)`` with ``Q_l = sum_L sqrt(q_L(l)) Q_L``."""
    _check_basis(state, basis)
    if isinstance(state, SymmetricPureState):
        return conditional_post_state(state, k, ell).to_density()
    q = _kernel_weights(state, k, ell)
    p = q @ state.probabilities()
    if not p > 0:
        raise ZeroProbabilityError(f"outcome {ell!r} has zero probability")
    s = np.sqrt(q)
    return SymmetricDensity(state.N, state.basis, s[:, None] * state.matrix * s[None, :] / p)


def decoherence_matrix(state, k: SmoothingKernel) -> np.ndarray:
    x = state.types / state.N
    return k.decoherence_matrix(x)


def averaged_post_density(state, k: SmoothingKernel) -> SymmetricDensity:
    """Outcome-averaged state: matrix elements multiplied by ``G(L, L')``."""
    rho = state.to_density().matrix if isinstance(state, SymmetricPureState) else state.matrix
    return SymmetricDensity(state.N, state.basis, rho * decoherence_matrix(state, k))


def _typical_window(state: SymmetricPureState, nsig: float) -> np.ndarray:
    """Mask of types within ``nsig`` standard deviations of the mean, per coordinate."""
    p = state.probabilities()
    x = state.types / state.N
    mean = p @ x
    var = p @ (x - mean) ** 2
    sd = np.sqrt(np.maximum(var, 0.0))
    tol = nsig * sd + 0.5 / state.N
    return np.all(np.abs(x - mean) <= tol, axis=1)


def averaged_fidelity(state: SymmetricPureState, k: SmoothingKernel, truncate: float | None = TAIL_SIGMAS) -> float:
    """``<Psi| rho' |Psi> = sum_{L,L'} |c_L|^2 |c_L'|^2 G(L, L')`` for a pure state.

    Types further than ``truncate`` multinomial standard deviations from the
    mean are dropped (``None`` keeps all of them).
    """
    p = state.probabilities()
    x = state.types / state.N
    if truncate is not None:
        keep = _typical_window(state, truncate)
        p, x = p[keep], x[keep]
    if k.kind == "exact":
        return float(np.sum(p**2))
    if k.kind == "gaussian":
        y = k.project(x)
        inv = 1.0 / (8 * k.sigma**2)
        if state.d == 2 and k.coords == "full":
            return _kernels.quadform_gauss_1d(p, y[:, 0], 2 * inv)
        if y.shape[1] == 1:
            return _kernels.quadform_gauss_1d(p, y[:, 0], inv)
        return _kernels.quadform_gauss(p, np.ascontiguousarray(y), inv)
    G = k.decoherence_matrix(x)
    return float(p @ G @ p)


def fidelity(A, B) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(A) B sqrt(A)))^2`` between symmetric states."""
    _same_frame(A, B)
    pa, pb = isinstance(A, SymmetricPureState), isinstance(B, SymmetricPureState)
    if pa and pb:
        return float(abs(np.vdot(A.amplitudes(), B.amplitudes())) ** 2)
    if pa or pb:
        phi, rho = (A, B) if pa else (B, A)
        c = phi.amplitudes()
        return float(np.clip(np.vdot(c, rho.matrix @ c).real, 0.0, 1.0))
    return matrix_fidelity(A.matrix, B.matrix)


def _psd_sqrt(m: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    if vals.min() < -tol:
        raise ValidationError(f"matrix has eigenvalue {vals.min():.3g} below -{tol}")
    return (vecs * np.sqrt(_floor(vals))) @ vecs.conj().T


def _floor(vals: np.ndarray) -> np.ndarray:
    # rounding noise on zero eigenvalues; sqrt would blow it up to ~1e-8
    eps = len(vals) * np.finfo(float).eps * max(vals.max(), 1e-300)
    return np.where(vals > eps, vals, 0.0)


def matrix_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    sa = _psd_sqrt(a)
    m = sa @ b @ sa
    vals = np.linalg.eigvalsh((m + m.conj().T) / 2)
    return float(np.clip(np.sqrt(_floor(vals)).sum() ** 2, 0.0, 1.0))


# -------------------------------------------------------- single molecule
def _removal_maps(N: int, d: int):
    """For each letter j: mask of types with ``L_j > 0`` and index of ``L - e_j`` among types of ``N - 1``."""
    L = type_table(N, d)
    maps = []
    for j in range(d):
        mask = L[:, j] > 0
        Lm = L.copy()
        Lm[:, j] -= 1
        idx = np.where(mask, type_index(np.where(mask[:, None], Lm, 0), N - 1), 0)
        maps.append((mask, idx))
    return maps


def reduce_single_molecule(state) -> np.ndarray:
    """One-molecule reduced state, in the frame of ``state.basis`` (entries ``<x_i|rho_1|x_j>``)."""
    N, d = state.N, state.d
    if N < 1:
        raise ValidationError("need at least one molecule")
    L = type_table(N, d)
    maps = _removal_maps(N, d)
    T1 = math.comb(N - 1 + d - 1, d - 1)
    # express each letter-removal as a (T1 x T) partial isometry with sqrt(L_j / N) weights
    pure = isinstance(state, SymmetricPureState)
    vec = state.amplitudes() if pure else None
    rho1 = np.zeros((d, d), dtype=complex)
    cols = []
    for j, (mask, idx) in enumerate(maps):
        w = np.sqrt(L[:, j] / N)
        cols.append((mask, idx, w))
    for i in range(d):
        mi, ii, wi = cols[i]
        for j in range(d):
            mj, ij, wj = cols[j]
            if pure:
                ai = np.zeros(T1, dtype=complex)
                aj = np.zeros(T1, dtype=complex)
                ai[ii[mi]] = (wi * vec)[mi]
                aj[ij[mj]] = (wj * vec)[mj]
                rho1[i, j] = np.vdot(aj, ai)
            else:
                Ri = np.zeros((T1, len(L)))
                Rj = np.zeros((T1, len(L)))
                Ri[ii[mi], np.nonzero(mi)[0]] = wi[mi]
                Rj[ij[mj], np.nonzero(mj)[0]] = wj[mj]
                rho1[i, j] = np.trace(Ri @ state.matrix @ Rj.T)
    return rho1


# ------------------------------------------------------- collective unitaries
_SYM_CACHE: dict = {}
_SYM_CACHE_BYTES = 256 * 2**20


def sym_power(a, N: int) -> np.ndarray:
    """Uncached restriction of ``a^{(x)N}`` to the symmetric subspace, any square ``a``.

    Built one molecule at a time from the ``N - 1`` fold operator using
    ``|L> = sum_j sqrt(L_j/N) |x_j> (x) |L - e_j>``.
    """
    a = np.asarray(a, dtype=complex)
    d = a.shape[0]
    if d == 1:
        return np.array([[a[0, 0] ** N]], dtype=complex)
    if d == 2:
        return _kernels.sym_power_2(a, N)
    out = np.ones((1, 1), dtype=complex)
    for n in range(1, N + 1):
        L = type_table(n, d)
        maps = _removal_maps(n, d)
        new = np.zeros((len(L), len(L)), dtype=complex)
        for j, (mj, ij) in enumerate(maps):
            sj = np.sqrt(L[:, j] / n) * mj
            for k, (mk, ik) in enumerate(maps):
                if a[j, k] == 0:
                    continue
                sk = np.sqrt(L[:, k] / n) * mk
                new += a[j, k] * np.outer(sj, sk) * out[np.ix_(ij, ik)]
        out = new
    return out


def induced_operator(a, N: int) -> np.ndarray:
    """Cached :func:`sym_power`; the result is read-only."""
    a = np.asarray(a, dtype=complex)
    key = (a.tobytes(), a.shape, N)
    hit = _SYM_CACHE.get(key)
    if hit is not None:
        return hit
    out = sym_power(a, N)
    out.setflags(write=False)
    if out.nbytes <= _SYM_CACHE_BYTES // 4:
        while _SYM_CACHE and sum(v.nbytes for v in _SYM_CACHE.values()) + out.nbytes > _SYM_CACHE_BYTES:
            _SYM_CACHE.pop(next(iter(_SYM_CACHE)))
        _SYM_CACHE[key] = out
    return out


def induced_unitary(w, N: int) -> np.ndarray:
    """``w^{(x)N}`` on the symmetric subspace in the canonical type basis."""
    w = np.asarray(w, dtype=complex)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or np.abs(w.conj().T @ w - np.eye(len(w))).max() > 1e-10:
        raise ValidationError("w must be a unitary matrix")
    return induced_operator(w, N)


def rotate_basis(state, frm: ObservableBasis, to: ObservableBasis):
    """Re-express ``state`` (written in ``frm``) in the type basis of ``to``."""
    if frm.d != to.d:
        raise BasisMismatchError("bases have different dimension")
    _check_basis(state, frm)
    if frm.same_as(to):
        return state
    V = induced_unitary(to.u.conj().T @ frm.u, state.N)
    if isinstance(state, SymmetricPureState):
        return SymmetricPureState.from_amplitudes(state.N, to, V @ state.amplitudes(), normalize=True)
    m = V @ state.matrix @ V.conj().T
    return SymmetricDensity(state.N, to, (m + m.conj().T) / 2)
