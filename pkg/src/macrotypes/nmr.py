"""Coil readout of an NMR-like spin ensemble.

The coil couples to the transverse magnetization, so the readout is a
smoothed type measurement in the spin-x basis. A field reading ``r`` relates
to the outcome in type units ``ell`` (fraction of molecules along +x) by

    r = N gamma_t (ell - 1/2),

and densities pick up the Jacobian ``1 / (N gamma_t)``. Widths ``lam``
(coherent spread of the field mode) and ``sigma_mix`` (thermal mixing of
field modes) are given in type units.

A pure coil (``sigma_mix = 0``) realizes the ideal update with a Gaussian
kernel of width ``lam``. A thermal coil averages width-``lam`` Kraus
updates over a Gaussian of width ``sigma_mix``:

    rho_{|ell} ~ sum_{L,L'} rho_{LL'} exp(-(L-L')^2 / 8 lam^2) N(ell - (L+L')/2; 0, lam^2 + sigma_mix^2).

The q-integral is done in closed form; a Gauss-Hermite version is kept for
cross-checking.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg

from .combinatorics import multinomial_table, type_table
from .errors import ValidationError, ZeroProbabilityError
from .smoothing import SmoothingKernel, gaussian_kernel
from .symmetric import (SymmetricDensity, SymmetricPureState, averaged_fidelity, check_molecule_state,
                        conditional_post_density, induced_unitary, spin_basis)

GH_NODES = 64


@dataclass(frozen=True)
class CoilModel:
    gamma_t: float
    lam: float
    sigma_mix: float
    N: int

    def __post_init__(self):
        if not self.gamma_t > 0:
            raise ValidationError("coupling gamma*t must be positive")
        if not self.lam > 0:
            raise ValidationError("coherent width lam must be positive")
        if self.sigma_mix < 0:
            raise ValidationError("sigma_mix must be non-negative")
        if self.N < 1:
            raise ValidationError("N must be positive")

    @property
    def basis(self):
        return spin_basis("x")

    @property
    def nominal_width(self) -> float:
        """``lam + sigma_mix``, the loose additive width."""
        return self.lam + self.sigma_mix

    @property
    def outcome_width(self) -> float:
        """Standard deviation of each POVM element in type units."""
        return math.hypot(self.lam, self.sigma_mix)

    @property
    def jacobian(self) -> float:
        return self.N * self.gamma_t

    def to_type(self, r):
        return np.asarray(r, dtype=float) / self.jacobian + 0.5

    def to_field(self, ell):
        return self.jacobian * (np.asarray(ell, dtype=float) - 0.5)

    def f(self, L):
        """Field shift ``f(L) = gamma_t N (2L - 1) / 2`` for normalized ``L``."""
        return self.gamma_t * self.N * (2 * np.asarray(L, dtype=float) - 1) / 2


@dataclass(frozen=True)
class ThermalSpec:
    h: np.ndarray
    beta_T: float


def thermal_molecule_state(spec: ThermalSpec) -> np.ndarray:
    """``exp(-beta_T h) / z``."""
    h = np.asarray(spec.h, dtype=complex)
    if np.abs(h - h.conj().T).max() > 1e-10:
        raise ValidationError("h must be Hermitian")
    if math.isinf(spec.beta_T):
        vals, vecs = np.linalg.eigh(h)
        g = vecs[:, np.isclose(vals, vals[0])]
        return g @ g.conj().T / g.shape[1]
    vals, vecs = np.linalg.eigh(h)
    e = np.exp(-spec.beta_T * (vals - vals.min()))  # shifted for overflow safety
    return check_molecule_state((vecs * (e / e.sum())) @ vecs.conj().T)


def apply_collective_pulse(state, w):
    """``w^{(x)N}`` applied to a symmetric state, or ``w nu w^dagger`` for a molecule state ``nu``.

    For a molecule state this is the image of ``nu^{(x)N}``: a collective pulse
    maps ``nu^{(x)N}`` to ``(w nu w^dagger)^{(x)N}``.
    """
    w = np.asarray(w, dtype=complex)
    if np.abs(w.conj().T @ w - np.eye(len(w))).max() > 1e-10:
        raise ValidationError("pulse must be unitary")
    if isinstance(state, (SymmetricPureState, SymmetricDensity)):
        u = state.basis.u
        V = induced_unitary(u.conj().T @ w @ u, state.N)
        if isinstance(state, SymmetricPureState):
            return SymmetricPureState.from_amplitudes(state.N, state.basis, V @ state.amplitudes(), normalize=True)
        m = V @ state.matrix @ V.conj().T
        return SymmetricDensity(state.N, state.basis, (m + m.conj().T) / 2)
    nu = check_molecule_state(state)
    return w @ nu @ w.conj().T


def ideal_coil_kernel(coil: CoilModel) -> SmoothingKernel:
    """Kernel of a pure coil: 1D Gaussian of width ``lam`` on the +x fraction."""
    if coil.sigma_mix != 0:
        raise ValidationError("ideal kernel needs a pure coil (sigma_mix = 0)")
    return gaussian_kernel(coil.lam, "simplex")


def _check_frame(coil: CoilModel, state):
    if state.N != coil.N:
        raise ValidationError("state and coil disagree on N")
    if not state.basis.same_as(coil.basis):
        from .errors import BasisMismatchError

        raise BasisMismatchError("state must be written in the coil (spin-x) basis")


def _x(state) -> np.ndarray:
    return type_table(state.N, 2)[:, 0] / state.N


def _gauss(z, var):
    return np.exp(-z * z / (2 * var)) / math.sqrt(2 * math.pi * var)


def thermal_update_matrix(coil: CoilModel, x: np.ndarray, ell: float) -> np.ndarray:
    """Elementwise multiplier ``K(L, L')`` of the unnormalized update in type units."""
    dx = x[:, None] - x[None, :]
    mid = (x[:, None] + x[None, :]) / 2
    return np.exp(-dx * dx / (8 * coil.lam**2)) * _gauss(ell - mid, coil.lam**2 + coil.sigma_mix**2)


def thermal_update_matrix_gh(coil: CoilModel, x: np.ndarray, ell: float, nodes: int = GH_NODES) -> np.ndarray:
    """Same multiplier by Gauss-Hermite quadrature over the field-mode offset ``q``."""
    if coil.sigma_mix == 0:
        return thermal_update_matrix(coil, x, ell)
    t, w = np.polynomial.hermite.hermgauss(nodes)
    out = np.zeros((len(x), len(x)))
    lam2 = coil.lam**2
    for tk, wk in zip(t, w):
        q = math.sqrt(2) * coil.sigma_mix * tk
        s = np.sqrt(_gauss(ell - q - x, lam2))
        out += wk / math.sqrt(math.pi) * np.outer(s, s)
    return out


def thermal_outcome_density(coil: CoilModel, state, r, units: str = "field"):
    """``Tr(E_r rho)``; ``state`` may be symmetric (spin-x frame) or a molecule state ``nu`` for ``nu^{(x)N}``."""
    ell = coil.to_type(r) if units == "field" else np.asarray(r, dtype=float)
    var = coil.lam**2 + coil.sigma_mix**2
    if isinstance(state, (SymmetricPureState, SymmetricDensity)):
        _check_frame(coil, state)
        p, x = state.probabilities(), _x(state)
    else:
        nu = check_molecule_state(state)
        R = np.clip(np.real(np.diag(coil.basis.u.conj().T @ nu @ coil.basis.u)), 0, None)
        p, x = multinomial_table(coil.N, R / R.sum()), type_table(coil.N, 2)[:, 0] / coil.N
    dens = _gauss(np.asarray(ell)[..., None] - x, var) @ p
    return dens / coil.jacobian if units == "field" else dens


def thermal_coil_update(coil: CoilModel, state, r, units: str = "field", method: str = "closed") -> SymmetricDensity:
    """Post-measurement state of the sample after field reading ``r``."""
    _check_frame(coil, state)
    ell = float(coil.to_type(r)) if units == "field" else float(r)
    if coil.sigma_mix == 0:
        return conditional_post_density(state, ideal_coil_kernel(coil), ell)
    x = _x(state)
    K = thermal_update_matrix(coil, x, ell) if method == "closed" else thermal_update_matrix_gh(coil, x, ell)
    rho = state.to_density().matrix if isinstance(state, SymmetricPureState) else state.matrix
    m = rho * K
    tr = np.trace(m).real
    if not tr > 0:
        raise ZeroProbabilityError(f"reading {r!r} has zero density")
    return SymmetricDensity(state.N, state.basis, m / tr)


def averaged_post_fidelity(coil: CoilModel, state: SymmetricPureState, truncate: float | None = 8.0) -> float:
    """``F(rho, int P(r) rho_{|r} dr)``; only the Kraus width ``lam`` enters."""
    _check_frame(coil, state)
    return averaged_fidelity(state, gaussian_kernel(coil.lam, "simplex"), truncate)


def conditional_post_fidelity(coil: CoilModel, state: SymmetricPureState, r, units: str = "field") -> float:
    """``<Psi| rho_{|r} |Psi>`` for a pure symmetric state, without building the density."""
    _check_frame(coil, state)
    ell = float(coil.to_type(r)) if units == "field" else float(r)
    p, x = state.probabilities(), _x(state)
    keep = p > 1e-300
    p, x = p[keep], x[keep]
    K = thermal_update_matrix(coil, x, ell)
    norm = p @ _gauss(ell - x, coil.lam**2 + coil.sigma_mix**2)
    if not norm > 0:
        raise ZeroProbabilityError(f"reading {r!r} has zero density")
    return float(p @ K @ p / norm)


def sample_readings(coil: CoilModel, state, n: int, rng: np.random.Generator, units: str = "field") -> np.ndarray:
    """Draw ``n`` independent readings (fresh sample each time)."""
    if isinstance(state, (SymmetricPureState, SymmetricDensity)):
        _check_frame(coil, state)
        p, x = state.probabilities(), _x(state)
    else:
        nu = check_molecule_state(state)
        R = np.clip(np.real(np.diag(coil.basis.u.conj().T @ nu @ coil.basis.u)), 0, None)
        p, x = multinomial_table(coil.N, R / R.sum()), type_table(coil.N, 2)[:, 0] / coil.N
    idx = rng.choice(len(p), size=n, p=p / p.sum())
    ell = x[idx] + coil.sigma_mix * rng.standard_normal(n) + coil.lam * rng.standard_normal(n)
    return coil.to_field(ell) if units == "field" else ell


def back_to_back_width(state: SymmetricPureState, kernel: SmoothingKernel, ell) -> tuple[float, float]:
    """Spread of an exact type measurement before and after an ideal coarse one with outcome ``ell``.

    Returns the standard deviations of the first-letter fraction.
    """
    x = _x(state)
    p = state.probabilities()
    q = np.ravel(kernel.weights(type_table(state.N, 2) / state.N, ell))
    post = p * q
    if not post.sum() > 0:
        raise ZeroProbabilityError("outcome has zero density")
    post /= post.sum()

    def sd(w):
        m = w @ x
        return math.sqrt(max(w @ (x - m) ** 2, 0.0))

    return sd(p), sd(post)


def rotation(axis: str, angle: float) -> np.ndarray:
    """Single-spin rotation ``exp(-i angle sigma_axis / 2)``."""
    paulis = {"x": np.array([[0, 1], [1, 0]]), "y": np.array([[0, -1j], [1j, 0]]), "z": np.diag([1, -1])}
    return scipy.linalg.expm(-0.5j * angle * paulis[axis])


# ------------------------------------------------------------------ sweeps
@dataclass
class CoilPoint:
    N: int
    lam: float
    sigma_mix: float
    total_width: float
    F_post: float
    outcome_var: float


NMR_COLUMNS = ["N", "lambda", "sigma_mix", "total_width", "F_post", "outcome_var"]


def coil_sweep(N: int, total_width: float, fractions, gamma_t: float = 1.0) -> list[CoilPoint]:
    """Split ``total_width`` into ``lam = f w`` and ``sigma_mix = w - lam`` for each fraction ``f``.

    The sample is the balanced product state in the coil basis (the z-up
    state read out along x).
    """
    from .symmetric import product_state

    st = product_state(np.array([1, 1]) / math.sqrt(2), N, spin_basis("x"))
    p, x = st.probabilities(), _x(st)
    mean = p @ x
    mvar = p @ (x - mean) ** 2
    out = []
    for f in fractions:
        lam = f * total_width
        coil = CoilModel(gamma_t, lam, total_width - lam, N)
        F = averaged_post_fidelity(coil, st)
        out.append(CoilPoint(N, lam, coil.sigma_mix, total_width, F, float(mvar + coil.outcome_width**2)))
    return out


def write_csv(points, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(NMR_COLUMNS)
        for p in points:
            d = asdict(p)
            w.writerow([d["N"], d["lam"], d["sigma_mix"], d["total_width"], d["F_post"], d["outcome_var"]])
