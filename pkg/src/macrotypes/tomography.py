"""Bulk tomography with exchangeable priors.

The unknown single-molecule state is represented by a finite grid of
candidates ``nu_i`` with weights ``w_i``, i.e. the exchangeable state
``sum_i w_i nu_i^{(x)N}``. A smoothed type measurement in some basis
reweights the grid by the exact outcome density of each ``nu_i^{(x)N}``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .combinatorics import log_multinomial_pmf, type_table
from .errors import ValidationError, ZeroProbabilityError
from .smoothing import SmoothingKernel, make_kernel
from .symmetric import (ObservableBasis, SymmetricPureState, check_molecule_state, computational_basis,
                        conditional_post_state, product_state, rotate_basis, spin_basis)

_PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])


def bloch_state(r) -> np.ndarray:
    """Qubit density matrix ``(1 + r . sigma) / 2``."""
    r = np.asarray(r, dtype=float)
    if np.linalg.norm(r) > 1 + 1e-12:
        raise ValidationError("Bloch vector longer than 1")
    return 0.5 * (np.eye(2) + np.einsum("i,ijk->jk", r, _PAULI))


def bloch_vector(nu) -> np.ndarray:
    return np.real(np.einsum("ijk,kj->i", _PAULI, np.asarray(nu)))


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` nearly uniform unit vectors (golden-angle spiral)."""
    k = np.arange(n) + 0.5
    zc = 1 - 2 * k / n
    phi = math.pi * (3 - math.sqrt(5)) * k
    rho = np.sqrt(1 - zc**2)
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), zc], axis=1)


def trace_distance(a, b) -> float:
    ev = np.linalg.eigvalsh(np.asarray(a) - np.asarray(b))
    return 0.5 * float(np.abs(ev).sum())


@dataclass(frozen=True, eq=False)
class PriorGrid:
    """Candidate molecule states and their weights."""

    states: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.states) == 0 or len(w) != len(self.states):
            raise ValidationError("need one weight per (at least one) state")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-10:
            raise ValidationError("weights must be non-negative and sum to 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", tuple(np.asarray(s, dtype=complex) for s in self.states))

    @property
    def d(self) -> int:
        return len(self.states[0])

    def __len__(self) -> int:
        return len(self.states)

    def with_weights(self, w) -> "PriorGrid":
        return PriorGrid(self.states, w)

    def mode(self) -> int:
        return int(np.argmax(self.weights))

    def mean_state(self) -> np.ndarray:
        return np.tensordot(self.weights, np.array(self.states), axes=1)

    @classmethod
    def bloch(cls, directions: int = 50, shells=(0.25, 0.5, 0.75, 1.0)) -> "PriorGrid":
        """Qubit grid: Fibonacci directions times radial shells, uniform weights (200 points by default)."""
        dirs = fibonacci_sphere(directions)
        sts = [check_molecule_state(bloch_state(r * n)) for r in shells for n in dirs]
        return cls(tuple(sts), np.full(len(sts), 1 / len(sts)))

    @classmethod
    def single(cls, nu) -> "PriorGrid":
        return cls((check_molecule_state(nu),), np.ones(1))

    def to_record(self) -> dict:
        return {"weights": self.weights.tolist(),
                "states_re": [s.real.tolist() for s in self.states],
                "states_im": [s.imag.tolist() for s in self.states]}


def _letter_probs(prior: PriorGrid, basis: ObservableBasis) -> np.ndarray:
    u = basis.u
    R = np.array([np.einsum("ij,ik,kj->j", u.conj(), s, u).real for s in prior.states])
    R = np.clip(R, 0.0, None)
    return R / R.sum(axis=1, keepdims=True)


def component_type_pmfs(prior: PriorGrid, basis: ObservableBasis, N: int) -> np.ndarray:
    """``m(L, R_i)`` for every grid point (rows) and type (columns)."""
    R = _letter_probs(prior, basis)
    L = type_table(N, prior.d)
    return np.exp(np.stack([log_multinomial_pmf(L, r) for r in R]))


def component_densities(prior: PriorGrid, basis: ObservableBasis, kernel: SmoothingKernel, ell, N: int,
                        pmfs: np.ndarray | None = None) -> np.ndarray:
    """``P(Q_ell | nu_i^{(x)N})`` for every grid point; batched ``ell`` gives shape ``batch + (K,)``."""
    pmfs = component_type_pmfs(prior, basis, N) if pmfs is None else pmfs
    q = kernel.weights(type_table(N, prior.d) / N, ell)
    return q @ pmfs.T


def exchangeable_outcome_density(prior: PriorGrid, basis: ObservableBasis, kernel: SmoothingKernel, ell,
                                 N: int) -> float:
    return float(prior.weights @ component_densities(prior, basis, kernel, ell, N))


def posterior_update(prior: PriorGrid, basis: ObservableBasis, kernel: SmoothingKernel, ell, N: int,
                     pmfs: np.ndarray | None = None) -> PriorGrid:
    """Bayes reweighting ``w_i <- w_i P(ell | nu_i) / P(ell)``."""
    dens = component_densities(prior, basis, kernel, ell, N, pmfs)
    w = prior.weights * dens
    tot = w.sum()
    if not tot > 0:
        raise ZeroProbabilityError(f"outcome {ell!r} has zero density under the prior")
    return prior.with_weights(w / tot)


def posterior_concentration(prior: PriorGrid, nu_ref, radius: float) -> float:
    """Weight of grid points within trace distance ``radius`` of ``nu_ref``."""
    if radius < 0:
        raise ValidationError("radius must be non-negative")
    dist = np.array([trace_distance(s, nu_ref) for s in prior.states])
    return float(prior.weights[dist <= radius + 1e-12].sum())


def posterior_spread(prior: PriorGrid, nu_ref) -> float:
    """Posterior mean trace distance to ``nu_ref``."""
    return float(prior.weights @ np.array([trace_distance(s, nu_ref) for s in prior.states]))


# ---------------------------------------------------------------- sampling
def sample_outcome(kernel: SmoothingKernel, types_norm: np.ndarray, rng: np.random.Generator):
    """Draw ``ell ~ q_L`` for one normalized type ``L``."""
    x = kernel.project(types_norm[None, :])[0]
    if kernel.kind == "gaussian":
        return x + kernel.sigma * rng.standard_normal(x.shape)
    if kernel.kind == "exact":
        return x
    f = kernel.comb_matrix(types_norm[None, :])[0]
    j = rng.choice(len(f), p=f / f.sum())
    g = np.asarray(kernel.grid)
    idx = np.unravel_index(j, (len(g),) * len(x))
    return g[list(idx)]


@dataclass
class TomographyStep:
    round: int
    basis: str
    outcome: list
    concentration_05: float
    concentration_10: float
    mode: int
    spread: float


@dataclass
class TomographyRecord:
    nu_true: np.ndarray
    N: int
    sigma: float
    seed: int
    mode: str
    steps: list = field(default_factory=list)
    posterior: PriorGrid | None = None

    def to_record(self) -> dict:
        return {"N": self.N, "sigma": self.sigma, "seed": self.seed, "mode": self.mode,
                "nu_true_re": self.nu_true.real.tolist(), "nu_true_im": self.nu_true.imag.tolist(),
                "steps": [s.__dict__ for s in self.steps],
                "posterior": None if self.posterior is None else self.posterior.to_record()}

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_record(), fh, indent=1)

    def write_csv(self, path) -> None:
        cols = ["round", "basis", "outcome", "concentration@0.05", "concentration@0.1"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for s in self.steps:
                w.writerow([s.round, s.basis, " ".join(f"{v:.8g}" for v in s.outcome),
                            s.concentration_05, s.concentration_10])


def _as_basis(b) -> ObservableBasis:
    return spin_basis(b) if isinstance(b, str) else b


def _pure_vector(nu, atol: float = 1e-10):
    vals, vecs = np.linalg.eigh(nu)
    if vals[:-1].max(initial=0.0) > atol:
        return None
    return vecs[:, -1]


def simulate_tomography(nu_true, bases=("z", "x", "y"), sigma: float = 0.05, N: int = 1000, seed: int = 0,
                        prior: PriorGrid | None = None, rounds: int = 1, mode: str = "reuse",
                        kernel: SmoothingKernel | None = None) -> TomographyRecord:
    """Measure the sample basis by basis and update the grid posterior.

    ``mode="reuse"`` measures the same ``N`` molecules every time, so later
    outcomes see the disturbance of earlier ideal updates; it needs a pure
    ``nu_true``. ``mode="fresh"`` draws a new ``nu_true^{(x)N}`` for each
    measurement and accepts any state.
    """
    nu_true = check_molecule_state(nu_true)
    d = len(nu_true)
    if prior is None:
        if d != 2:
            raise ValidationError("default prior grid is for qubits")
        prior = PriorGrid.bloch()
    kernel = make_kernel(sigma) if kernel is None else kernel
    rng = np.random.default_rng(seed)
    bases = [_as_basis(b) for b in bases]
    names = [b.label or f"basis{i}" for i, b in enumerate(bases)]
    pmf_cache = {i: component_type_pmfs(prior, b, N) for i, b in enumerate(bases)}
    rec = TomographyRecord(nu_true, N, float(kernel.sigma), seed, mode)
    L = type_table(N, d)
    if mode == "reuse":
        psi = _pure_vector(nu_true)
        if psi is None:
            raise ValidationError("reuse mode needs a pure nu_true; use mode='fresh'")
        state: SymmetricPureState = product_state(psi, N, computational_basis(d))
    elif mode != "fresh":
        raise ValidationError(f"unknown mode {mode!r}")
    for r in range(rounds):
        for i, b in enumerate(bases):
            if mode == "reuse":
                state = rotate_basis(state, state.basis, b)
                p = state.probabilities()
                Lk = L[rng.choice(len(p), p=p / p.sum())]
            else:
                R = np.clip(np.einsum("ij,ik,kj->j", b.u.conj(), nu_true, b.u).real, 0, None)
                Lk = rng.multinomial(N, R / R.sum())
            ell = sample_outcome(kernel, Lk / N, rng)
            if mode == "reuse":
                state = conditional_post_state(state, kernel, ell)
            prior = posterior_update(prior, b, kernel, ell, N, pmf_cache[i])
            rec.steps.append(TomographyStep(r, names[i], np.atleast_1d(ell).tolist(),
                                            posterior_concentration(prior, nu_true, 0.05),
                                            posterior_concentration(prior, nu_true, 0.1),
                                            prior.mode(), posterior_spread(prior, nu_true)))
    rec.posterior = prior
    return rec
