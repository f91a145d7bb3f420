"""Histories of coarse macroscopic measurements and the sum-rule test.

A history is a sequence of (event, bin) pairs. Each event measures one
outcome coordinate of a smoothed type measurement in its own basis and
coarse-grains it into bins; the bin effect is ``E_B = sum_L Phi_B(L) Q_L``
and the update uses ``sqrt(E_B)``.

Fast paths:

* symmetric engine for pure products and exchangeable mixtures of them;
* supermolecules (``xi`` molecules as one letter of ``d**xi``) for block
  preparations with small alphabets, also used for mixed components via a
  purifying ancilla;
* a repetition-code path for blocks of the form ``sum_j g_j |x_j>^{xi}``,
  where only the last event may leave the code basis.

Anything else falls back to the dense oracle when it fits.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels, oracle
from .combinatorics import multinomial_table, type_index, type_table
from .errors import ResourceCapError, ValidationError
from .smoothing import SmoothingKernel, make_kernel
from .symmetric import (DENSITY_DIM_CAP, ObservableBasis, _removal_maps, check_molecule_state,
                        computational_basis, induced_operator, product_state, spin_basis, sym_power)

#: Largest supermolecule alphabet ``d**xi`` handled by the general block engine.
SUPERMOLECULE_CAP = 8


# ------------------------------------------------------------------ events
@dataclass(frozen=True, eq=False)
class HistoryEvent:
    """Binned measurement of outcome coordinate ``coordinate`` in ``basis``.

    ``edges`` are interior bin boundaries; the two outer bins are unbounded,
    so the bins always partition the real line.
    """

    basis: ObservableBasis
    kernel: SmoothingKernel
    edges: tuple[float, ...]
    coordinate: int = 0
    label: str = ""

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        if e.ndim != 1 or np.any(~np.isfinite(e)) or np.any(np.diff(e) <= 0):
            raise ValidationError("bin edges must be finite and strictly increasing")
        if not 0 <= self.coordinate < self.basis.d:
            raise ValidationError("coordinate out of range")
        object.__setattr__(self, "edges", tuple(float(x) for x in e))

    @property
    def nbins(self) -> int:
        return len(self.edges) + 1

    def bin_interval(self, b: int) -> tuple[float, float]:
        e = (-math.inf,) + self.edges + (math.inf,)
        return e[b], e[b + 1]

    def weights(self, types_norm: np.ndarray) -> np.ndarray:
        """``Phi_B(L)`` for every row, shape ``(T, nbins)``."""
        return self.kernel.bin_weights(types_norm, self.edges, self.coordinate)

    def to_config(self) -> dict:
        return {"basis": self.basis.to_record(), "kernel": self.kernel.to_config(),
                "edges": list(self.edges), "coordinate": self.coordinate, "label": self.label}


def default_bins(centre: float, width: float, count: int = 10) -> tuple[float, ...]:
    """``count - 2`` cells of ``width`` centred on ``centre``, plus two overflow bins."""
    if count < 2:
        raise ValidationError("need at least two bins")
    if not width > 0:
        raise ValidationError("bin width must be positive")
    k = np.arange(count - 1)
    return tuple(centre + width * (k - (count - 2) / 2))


def default_width(sigma: float, N: int) -> float:
    """Bin width: ``sigma``, or the largest binomial spread ``1/(2 sqrt(N))`` of an outcome fraction when ``sigma = 0``."""
    return sigma if sigma > 0 else 0.5 / math.sqrt(N)


@dataclass(frozen=True)
class HistoryFamily:
    events: tuple[HistoryEvent, ...]
    label: str = ""

    def __post_init__(self):
        if len(self.events) < 1:
            raise ValidationError("a family needs at least one event")
        d = {e.basis.d for e in self.events}
        if len(d) != 1:
            raise ValidationError("events disagree on molecule dimension")
        object.__setattr__(self, "events", tuple(self.events))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(e.nbins for e in self.events)


# ------------------------------------------------------------- preparations
@dataclass(frozen=True, eq=False)
class Preparation:
    """How the sample was prepared.

    ``kind`` is one of ``pure-product``, ``exchangeable``, ``product-list``
    and ``block-product``. Use the factory functions below.
    """

    kind: str
    N: int
    d: int
    basis: ObservableBasis
    beta: np.ndarray | None = None
    weights: np.ndarray | None = None
    states: tuple = ()
    xi: int = 1
    block_state: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def mean_state(self) -> np.ndarray:
        """Average single-molecule density matrix (lab frame)."""
        if self.kind == "pure-product":
            psi = self.basis.u @ self.beta
            return np.outer(psi, psi.conj())
        if self.kind == "exchangeable":
            return sum(w * s for w, s in zip(self.weights, self.states))
        if self.kind == "product-list":
            return mean_molecule_state(self.states)
        psi = self.block_state.reshape((self.d,) * self.xi)
        acc = np.zeros((self.d, self.d), dtype=complex)
        for ax in range(self.xi):
            t = np.moveaxis(psi, ax, 0).reshape(self.d, -1)
            acc += t @ t.conj().T
        u = self.basis.u
        return u @ (acc / self.xi) @ u.conj().T

    def to_dense(self, allow_large: bool = False) -> np.ndarray:
        """Lab-frame state vector or density matrix on ``d**N`` levels."""
        N, d = self.N, self.d
        oracle.check_dim(N, d, allow_large)
        if self.kind == "pure-product":
            return oracle.product_vector(self.basis.u @ self.beta, N, allow_large)
        if self.kind == "exchangeable":
            return sum(w * oracle.product_density([s] * N, allow_large) for w, s in zip(self.weights, self.states))
        if self.kind == "product-list":
            return oracle.product_density(self.states, allow_large)
        block = oracle.apply_local(self.block_state, self.basis.u, self.xi)
        out = np.ones(1, dtype=complex)
        for _ in range(N // self.xi):
            out = np.kron(out, block)
        return out


def pure_product(beta, N: int, basis: ObservableBasis | None = None) -> Preparation:
    """``(sum_j beta_j |x_j>)^{(x)N}``, amplitudes relative to ``basis``."""
    beta = np.asarray(beta, dtype=complex)
    basis = computational_basis(len(beta)) if basis is None else basis
    if abs(np.vdot(beta, beta).real - 1) > 1e-10:
        raise ValidationError("beta is not normalized")
    return Preparation("pure-product", N, len(beta), basis, beta=beta)


def exchangeable(weights, states, N: int) -> Preparation:
    """``sum_i w_i nu_i^{(x)N}``; ``states`` are lab-frame density matrices (or vectors)."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-10:
        raise ValidationError("mixture weights must be a probability vector")
    sts = tuple(check_molecule_state(s if np.ndim(s) == 2 else np.outer(s, np.conj(s))) for s in states)
    if len(sts) != len(w):
        raise ValidationError("one weight per component")
    d = len(sts[0])
    return Preparation("exchangeable", N, d, computational_basis(d), weights=w, states=sts)


def product_list(states) -> Preparation:
    """``nu_1 (x) nu_2 (x) ... (x) nu_N`` with possibly different factors."""
    sts = tuple(check_molecule_state(s if np.ndim(s) == 2 else np.outer(s, np.conj(s))) for s in states)
    if not sts:
        raise ValidationError("empty product list")
    d = len(sts[0])
    return Preparation("product-list", len(sts), d, computational_basis(d), states=sts)


def block_preparation(xi: int, N: int, block_state, d: int = 2, basis: ObservableBasis | None = None) -> Preparation:
    """``N / xi`` copies of a pure state of ``xi`` molecules (``d**xi`` amplitudes, words in ``basis``)."""
    if xi < 1 or N % xi:
        raise ValidationError(f"block size {xi} does not divide N={N}")
    psi = np.asarray(block_state, dtype=complex).ravel()
    if psi.shape != (d**xi,):
        raise ValidationError(f"block state needs {d**xi} amplitudes")
    if abs(np.vdot(psi, psi).real - 1) > 1e-10:
        raise ValidationError("block state is not normalized")
    basis = computational_basis(d) if basis is None else basis
    if xi == 1:
        return pure_product(psi, N, basis)
    if d**xi > SUPERMOLECULE_CAP and _code_amplitudes(psi, d, xi) is None:
        raise ResourceCapError(f"supermolecule alphabet {d**xi} exceeds cap {SUPERMOLECULE_CAP}")
    return Preparation("block-product", N, d, basis, xi=xi, block_state=psi)


def ghz_block(xi: int, d: int = 2) -> np.ndarray:
    """``(|x_1>^{xi} + |x_2>^{xi}) / sqrt(2)`` as a flat amplitude vector."""
    psi = np.zeros(d**xi, dtype=complex)
    psi[0] = psi[_repeat_index(1, d, xi)] = 1 / math.sqrt(2)
    return psi


def _repeat_index(j: int, d: int, xi: int) -> int:
    return j * sum(d**p for p in range(xi))


def _code_amplitudes(psi: np.ndarray, d: int, xi: int) -> np.ndarray | None:
    """Amplitudes ``g_j`` if ``psi = sum_j g_j |x_j>^{xi}``, else None."""
    idx = [_repeat_index(j, d, xi) for j in range(d)]
    rest = np.delete(psi, idx)
    if np.abs(rest).max(initial=0.0) > 1e-12:
        return None
    return psi[idx]


def mean_molecule_state(states) -> np.ndarray:
    """``(1/N) sum_k nu_k``."""
    sts = [np.asarray(s, dtype=complex) for s in states]
    if not sts:
        raise ValidationError("empty state list")
    if len({s.shape for s in sts}) != 1:
        raise ValidationError("states differ in dimension")
    return check_molecule_state(sum(sts) / len(sts))


# ----------------------------------------------------------------- engines
class _SymEngine:
    """Symmetric states of ``M`` supermolecules with ``D`` letters each.

    ``counts[a, j]`` is the number of molecule letters ``j`` inside
    supermolecule letter ``a``; ``lift`` maps a molecule unitary to the
    supermolecule unitary. Amplitudes are tracked in the frame ``u``.
    """

    def __init__(self, N, M, counts, lift, vec, u):
        self.N, self.M = N, M
        self.counts = np.asarray(counts, dtype=float)
        self.lift = lift
        self.D = self.counts.shape[0]
        self.x = type_table(M, self.D) @ self.counts / N
        self.start = (np.asarray(vec, dtype=complex), np.asarray(u, dtype=complex))

    def _rotate(self, state, basis):
        v, u = state
        w = basis.u.conj().T @ u
        if np.abs(w - np.eye(len(w))).max() > 1e-14:
            v = induced_operator(self.lift(w), self.M) @ v
        return v, basis.u

    def apply(self, state, ev: HistoryEvent, b: int):
        v, u = self._rotate(state, ev.basis)
        return v * np.sqrt(ev.weights(self.x)[:, b]), u

    def final(self, state, ev: HistoryEvent) -> np.ndarray:
        v, _ = self._rotate(state, ev.basis)
        return (np.abs(v) ** 2) @ ev.weights(self.x)


class _RepetitionEngine:
    """Blocks ``sum_j g_j |x_j>^{xi}``; states stay in the code space.

    Non-final events must be measured in the code basis. The final event
    may use any basis: its count distribution comes from the generating
    function ``<psi| Sym^M(B(z)) |psi>`` with the per-block matrix
    ``B(z)_{ij} = (delta_ij + (z - 1) <x_i|y><y|x_j>)^xi`` evaluated at the
    ``N + 1`` roots of unity.
    """

    def __init__(self, N, xi, code_basis: ObservableBasis, g):
        self.N, self.xi, self.M = N, xi, N // xi
        self.cb = code_basis
        d = code_basis.d
        self.x = type_table(self.M, d) / self.M
        self.start = product_state(np.asarray(g), self.M, computational_basis(d)).amplitudes()

    def _check(self, ev):
        if not ev.basis.same_as(self.cb):
            raise ValidationError("repetition-code path only supports code-basis events before the last one")

    def apply(self, state, ev: HistoryEvent, b: int):
        self._check(ev)
        return state * np.sqrt(ev.weights(self.x)[:, b])

    def count_distribution(self, state, basis: ObservableBasis, coordinate: int) -> np.ndarray:
        """Unnormalized ``p(n)``: weight of ``n`` molecules reading letter ``coordinate`` of ``basis``."""
        N = self.N
        a = self.cb.u.conj().T @ basis.u[:, coordinate]
        W = np.outer(a, a.conj())
        eye = np.eye(len(a))
        z = np.exp(2j * np.pi * np.arange(N + 1) / (N + 1))
        g = np.empty(N + 1, dtype=complex)
        for i, zi in enumerate(z):
            B = (eye + (zi - 1) * W) ** self.xi
            g[i] = np.vdot(state, sym_power(B, self.M) @ state)
        p = np.fft.fft(g).real / (N + 1)
        return np.clip(p, 0.0, None)

    def final(self, state, ev: HistoryEvent) -> np.ndarray:
        if ev.basis.same_as(self.cb):
            return (np.abs(state) ** 2) @ ev.weights(self.x)
        p = self.count_distribution(state, ev.basis, ev.coordinate)
        xs = np.zeros((self.N + 1, ev.basis.d))
        xs[:, ev.coordinate] = np.arange(self.N + 1) / self.N
        return p @ ev.weights(xs)


def _word_counts(d: int, xi: int) -> np.ndarray:
    return oracle.string_counts(xi, d)


def _kron_power(w, xi):
    out = np.ones((1, 1), dtype=complex)
    for _ in range(xi):
        out = np.kron(out, w)
    return out


def _engines(prep: Preparation, family: HistoryFamily | None = None):
    """List of ``(weight, engine)`` whose weighted sum reproduces ``prep``."""
    N, d = prep.N, prep.d
    ident = lambda w: w  # noqa: E731
    if prep.kind == "pure-product":
        st = product_state(prep.beta, N, prep.basis)
        return [(1.0, _SymEngine(N, N, np.eye(d), ident, st.amplitudes(), prep.basis.u))]
    if prep.kind == "exchangeable":
        out = []
        for w, nu in zip(prep.weights, prep.states):
            vals, vecs = np.linalg.eigh(nu)
            if vals[:-1].max(initial=0.0) < 1e-12:  # pure component
                beta = vecs[:, -1]
                st = product_state(beta, N, computational_basis(d))
                out.append((w, _SymEngine(N, N, np.eye(d), ident, st.amplitudes(), np.eye(d))))
                continue
            if math.comb(N + d * d - 1, d * d - 1) > DENSITY_DIM_CAP:
                raise ResourceCapError("mixed exchangeable component too large for the ancilla engine")
            phi = vecs * np.sqrt(np.clip(vals, 0, None))  # rows: molecule letter, cols: ancilla
            st = product_state(phi.ravel(), N, computational_basis(d * d))
            counts = np.kron(np.eye(d), np.ones((d, 1)))
            lift = lambda w_: np.kron(w_, np.eye(d))  # noqa: E731
            out.append((w, _SymEngine(N, N, counts, lift, st.amplitudes(), np.eye(d))))
        return out
    if prep.kind == "block-product":
        xi, M = prep.xi, N // prep.xi
        g = _code_amplitudes(prep.block_state, d, xi)
        D = d**xi
        small = D <= SUPERMOLECULE_CAP and math.comb(M + D - 1, D - 1) <= DENSITY_DIM_CAP
        if g is not None and (not small or _code_friendly(family, prep.basis)):
            return [(1.0, _RepetitionEngine(N, xi, prep.basis, g))]
        if not small:
            raise ResourceCapError("block preparation too large for the supermolecule engine")
        st = product_state(prep.block_state, M, computational_basis(D))
        lift = lambda w_: _kron_power(w_, xi)  # noqa: E731
        return [(1.0, _SymEngine(N, M, _word_counts(d, xi), lift, st.amplitudes(), prep.basis.u))]
    raise ValidationError(f"no fast path for {prep.kind!r} preparations")


def _code_friendly(family, basis) -> bool:
    if family is None:
        return True
    return all(e.basis.same_as(basis) for e in family.events[:-1])


# ----------------------------------------------------------- probabilities
def _table(engine, events: Sequence[HistoryEvent]) -> np.ndarray:
    def rec(state, evs):
        if len(evs) == 1:
            return engine.final(state, evs[0])
        return np.stack([rec(engine.apply(state, evs[0], b), evs[1:]) for b in range(evs[0].nbins)])

    return rec(engine.start, list(events))


def _dense_events(events):
    return [(e.basis, e.kernel, e.bin_interval(b), e.coordinate) for e, b in events]


def joint_table(family: HistoryFamily, prep: Preparation, method: str = "auto") -> np.ndarray:
    """``P(b_1, ..., b_n)`` for every bin combination; shape ``family.shape``."""
    if method in ("auto", "fast"):
        try:
            engines = _engines(prep, family)
            return sum(w * _table(eng, family.events) for w, eng in engines)
        except (ValidationError, ResourceCapError):
            if method == "fast":
                raise
    rho = oracle.as_density(prep.to_dense())
    out = np.empty(family.shape)
    for idx in itertools.product(*[range(n) for n in family.shape]):
        out[idx] = oracle.dense_history_probability(rho, _dense_events(zip(family.events, idx)))
    return out


def history_probability(prep: Preparation, H: Sequence[tuple[HistoryEvent, int]], method: str = "auto") -> float:
    """``Tr(sqrt(E_n) ... sqrt(E_1) rho sqrt(E_1) ... sqrt(E_n))`` for one history."""
    if not H:
        return 1.0
    events = [e for e, _ in H]
    bins = [b for _, b in H]
    for e, b in H:
        if not 0 <= b < e.nbins:
            raise ValidationError(f"bin {b} out of range")
    if method in ("auto", "fast"):
        try:
            total = 0.0
            for w, eng in _engines(prep, HistoryFamily(tuple(events))):
                state = eng.start
                for e, b in H[:-1]:
                    state = eng.apply(state, e, b)
                total += w * float(eng.final(state, events[-1])[bins[-1]])
            return total
        except (ValidationError, ResourceCapError):
            if method == "fast":
                raise
    return oracle.dense_history_probability(prep.to_dense(), _dense_events(H))


@dataclass(frozen=True)
class SumRule:
    epsilon: float
    event: int  # index of the event whose marginalization is worst; -1 if none
    table: np.ndarray


def sum_rule_violation(family: HistoryFamily, prep: Preparation, method: str = "auto",
                       detail: bool = False):
    """Largest ``|P(history without event k) - sum_{b_k} P(history)|`` over ``k`` and the other bins."""
    full = joint_table(family, prep, method)
    eps, worst = 0.0, -1
    for k in range(len(family.events) - 1):
        rest = HistoryFamily(family.events[:k] + family.events[k + 1:])
        gap = float(np.abs(joint_table(rest, prep, method) - full.sum(axis=k)).max())
        if gap > eps:
            eps, worst = gap, k
    out = SumRule(eps, worst, full)
    return out if detail else out.epsilon


# -------------------------------------------------------------- commutator
@dataclass(frozen=True)
class CommutatorCheck:
    lhs: np.ndarray  # [A_N, B_N]
    rhs: np.ndarray  # C_N / N
    residual: float  # || N [A_N, B_N] - C_N ||
    norm_ratio: float  # N ||[A_N, B_N]|| / ||C_N||; nan when C_N = 0


def normalized_macro(a: np.ndarray, N: int) -> np.ndarray:
    """``(1/N) sum_k a_(k)`` as a dense matrix."""
    a = np.asarray(a, dtype=complex)
    d = len(a)
    oracle.check_dim(N, d)
    out = np.zeros((d**N, d**N), dtype=complex)
    for k in range(N):
        out += np.kron(np.kron(np.eye(d**k), a), np.eye(d ** (N - k - 1)))
    return out / N


def commutator_relation(a, b, N: int) -> CommutatorCheck:
    a = getattr(a, "observable", lambda: a)()
    b = getattr(b, "observable", lambda: b)()
    A, B = normalized_macro(a, N), normalized_macro(b, N)
    C = normalized_macro(a @ b - b @ a, N)
    lhs = A @ B - B @ A
    nc = np.linalg.norm(C, 2)
    ratio = N * np.linalg.norm(lhs, 2) / nc if nc > 0 else float("nan")
    return CommutatorCheck(lhs, C / N, float(np.linalg.norm(N * lhs - C, 2)), float(ratio))


# -------------------------------------------------------- separable states
def letter_probabilities(states, basis: ObservableBasis) -> np.ndarray:
    """``p_k(j) = <x_j| nu_k |x_j>``; shape ``(N, d)``."""
    u = basis.u
    return np.array([np.clip(np.einsum("ij,ik,kj->j", u.conj(), np.asarray(s), u).real, 0, None)
                     for s in states])


def product_type_pmf(states, basis: ObservableBasis) -> np.ndarray:
    """``P(Q_L | nu_1 (x) ... (x) nu_N)`` over canonical types (Poisson-multinomial)."""
    p = letter_probabilities(states, basis)
    N, d = p.shape
    if d == 2:
        # canonical index equals the count of the first letter
        return _kernels.poisson_binomial(p[:, 0])
    pmf = np.ones(1)
    for n in range(1, N + 1):
        new = np.zeros(math.comb(n + d - 1, d - 1))
        for j, (mask, idx) in enumerate(_removal_maps(n, d)):
            new[mask] += p[n - 1, j] * pmf[idx[mask]]
        pmf = new
    return pmf


def product_type_distribution(states, basis: ObservableBasis, kernel: SmoothingKernel, ell) -> float:
    """Outcome density of the smoothed type measurement on a product list."""
    pmf = product_type_pmf(states, basis)
    N, d = len(states), basis.d
    return float(kernel.weights(type_table(N, d) / N, ell) @ pmf)


def outcome_tv_distance(pmf_a: np.ndarray, pmf_b: np.ndarray, N: int, d: int, kernel: SmoothingKernel,
                        steps_per_sigma: int = 20) -> float:
    """Total variation between the smoothed outcome densities of two type distributions.

    Discrete kernels sum over outcomes. For ``d = 2`` Gaussian kernels the
    integral runs along the line the types lie on (the orthogonal direction
    contributes a common factor).
    """
    diff = np.asarray(pmf_a) - np.asarray(pmf_b)
    x = type_table(N, d) / N
    if kernel.kind == "exact":
        return 0.5 * float(np.abs(diff).sum())
    if kernel.kind == "comb":
        return 0.5 * float(np.abs(diff @ kernel.comb_matrix(x)).sum())
    if d != 2:
        raise ValidationError("Gaussian total variation implemented for d = 2")
    t = x[:, 0] * (math.sqrt(2) if kernel.coords == "full" else 1.0)
    s = kernel.sigma
    live = np.abs(diff) > 0
    lo, hi = t[live].min() - 8 * s, t[live].max() + 8 * s
    h = s / steps_per_sigma
    grid = np.arange(lo, hi + h, h)
    total = 0.0
    for c in range(0, len(grid), 4096):
        g = grid[c:c + 4096]
        dens = np.exp(-((g[:, None] - t[None, live]) ** 2) / (2 * s * s)) @ diff[live]
        total += np.abs(dens).sum()
    return 0.5 * total * h / math.sqrt(2 * math.pi * s * s)


def separable_tv(states, basis: ObservableBasis, kernel: SmoothingKernel) -> float:
    """TV distance between outcome densities of the product list and ``nu_bar^{(x)N}``."""
    N, d = len(states), basis.d
    pmf = product_type_pmf(states, basis)
    R = letter_probabilities([mean_molecule_state(states)], basis)[0]
    return outcome_tv_distance(pmf, multinomial_table(N, R / R.sum()), N, d, kernel)


# ------------------------------------------------------------ sweep helpers
def expected_outcome(prep: Preparation, basis: ObservableBasis, coordinate: int = 0) -> float:
    """Mean of outcome coordinate ``coordinate``: ``<y_c| nu_bar |y_c>``."""
    y = basis.u[:, coordinate]
    return float(np.vdot(y, prep.mean_state() @ y).real)


def zx_family(N: int, sigma: float, count: int = 5, prep: Preparation | None = None,
              centres: tuple[float, float] | None = None, coords: str = "simplex") -> HistoryFamily:
    """Magnetization along z, then along x, each binned into ``count`` cells.

    Bins are centred on the expected outcomes under ``prep`` unless
    ``centres`` is given (default 1/2 for both without either).
    """
    z, x = spin_basis("z"), spin_basis("x")
    if centres is None:
        centres = (0.5, 0.5) if prep is None else (expected_outcome(prep, z), expected_outcome(prep, x))
    k = make_kernel(sigma, coords)
    w = default_width(sigma, N)
    return HistoryFamily((
        HistoryEvent(z, k, default_bins(centres[0], w, count), label="Mz"),
        HistoryEvent(x, k, default_bins(centres[1], w, count), label="Mx"),
    ))


def epsilon_sweep(N: int, sigmas: Sequence[float], xis: Sequence[int] = (1,), count: int = 5) -> list[dict]:
    """``epsilon`` for the z-then-x family on GHZ blocks of each size ``xi``."""
    rows = []
    for xi in xis:
        prep = block_preparation(xi, N, ghz_block(xi), basis=spin_basis("z"))
        for s in sigmas:
            fam = zx_family(N, s, count, prep)
            eps = sum_rule_violation(fam, prep)
            rows.append({"N": N, "xi": xi, "sigma": s, "bins": _bin_spec(fam), "epsilon": eps})
    return rows


def _bin_spec(fam: HistoryFamily) -> str:
    return "|".join(",".join(f"{x:.6g}" for x in e.edges) for e in fam.events)


EPSILON_COLUMNS = ["N", "xi", "sigma", "bins", "epsilon"]


def write_epsilon_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=EPSILON_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in EPSILON_COLUMNS})


def family_from_config(cfg: dict, N: int, prep: Preparation | None = None) -> HistoryFamily:
    """Build a family from ``{"events": [{"basis": "z", "sigma": 0.1, "bins": 5}, ...]}``.

    ``basis`` is a spin axis or a basis record; ``bins`` is a bin count or
    ``{"edges": [...]}``; ``centre`` defaults to the expected outcome under
    ``prep`` (or 1/2).
    """
    events = []
    for ev in cfg.get("events", []):
        b = ev.get("basis", "z")
        basis = spin_basis(b) if isinstance(b, str) else ObservableBasis.from_record(b)
        sigma = float(ev.get("sigma", 0.1))
        kernel = SmoothingKernel.from_config(ev["kernel"]) if "kernel" in ev else make_kernel(sigma, ev.get("coords", "simplex"))
        coord = int(ev.get("coordinate", 0))
        bins = ev.get("bins", 10)
        if isinstance(bins, dict):
            edges = tuple(bins["edges"])
        else:
            centre = ev.get("centre")
            if centre is None:
                centre = expected_outcome(prep, basis, coord) if prep is not None else 1 / basis.d
            edges = default_bins(float(centre), default_width(sigma, N), int(bins))
        events.append(HistoryEvent(basis, kernel, edges, coord, ev.get("label", "")))
    return HistoryFamily(tuple(events), cfg.get("label", ""))
