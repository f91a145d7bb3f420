"""Coarseness versus disturbance: exact fidelities, closed-form bounds, sweeps.

All fidelities here compare ``|Psi_N> = (sum_j beta_j |x_j>)^{(x)N}`` with
its post-measurement state. Exact values come from the symmetric engine; the
closed forms are the textbook-style bounds and asymptotics they are checked
against. Bounds that come out negative are floored at 0 ("vacuous").
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats
from scipy.special import logsumexp, ndtr

from .combinatorics import multinomial_table, type_table
from .errors import ValidationError, ZeroProbabilityError
from .smoothing import SmoothingKernel, make_kernel, outcome_quadrature
from .symmetric import (ObservableBasis, averaged_fidelity, computational_basis,
                        product_state)

#: Constant in the certified-outcome threshold.
THRESHOLD_C = 5 * math.sqrt(2 * math.pi) / 8


def _beta(beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=complex)
    if abs(np.vdot(beta, beta).real - 1) > 1e-10:
        raise ValidationError("beta is not normalized")
    return beta


def _probs(beta) -> np.ndarray:
    return np.abs(_beta(beta)) ** 2


def balanced(d: int = 2) -> np.ndarray:
    return np.full(d, 1 / math.sqrt(d), dtype=complex)


def regime(N: int, sigma: float) -> str:
    """``coarse`` when ``sigma sqrt(N) >= 3``, ``fine`` when ``<= 1/3``, else ``transition``."""
    x = sigma * math.sqrt(N)
    if x >= 3:
        return "coarse"
    if x <= 1 / 3:
        return "fine"
    return "transition"


# ----------------------------------------------------------------- sigma = 0
@dataclass(frozen=True)
class ZeroSigmaFidelity:
    exact: float
    stirling: float  # the max-term line (2 pi N)^{-(d-1)/2} / prod|beta_j|
    collision: float  # Gaussian asymptotic of sum m^2: (4 pi N)^{-(d-1)/2} / prod|beta_j|


def fidelity_zero_sigma(beta, N: int) -> ZeroSigmaFidelity:
    """``sum_L m(L, R)^2`` with its two large-``N`` companions.

    Letters with ``beta_j = 0`` never occur and are dropped from the
    asymptotic forms.
    """
    R = _probs(beta)
    m = multinomial_table(N, R)
    exact = float(np.sum(m**2))
    live = np.abs(_beta(beta))[R > 0]
    k = len(live) - 1
    prod = float(np.prod(live))
    return ZeroSigmaFidelity(exact,
                             (2 * math.pi * N) ** (-k / 2) / prod,
                             (4 * math.pi * N) ** (-k / 2) / prod)


# ------------------------------------------------------------ exact engine
def _kernel(sigma_or_kernel, coords: str = "full") -> SmoothingKernel:
    if isinstance(sigma_or_kernel, SmoothingKernel):
        return sigma_or_kernel
    return make_kernel(float(sigma_or_kernel), coords)


def exact_fidelity(beta, N: int, sigma, coords: str = "full", truncate: float | None = 8.0) -> float:
    """``F(rho_N, rho_N')`` for the product state, via the type-basis double sum."""
    beta = _beta(beta)
    k = _kernel(sigma, coords)
    st = product_state(beta, N, computational_basis(len(beta)))
    return min(1.0, max(0.0, averaged_fidelity(st, k, truncate)))


# ------------------------------------------------------------------ bounds
@dataclass(frozen=True)
class BoundValue:
    value: float
    raw: float
    delta: float
    vacuous: bool


def gaussian_fidelity_lower_bound(N: int, sigma: float, d: int = 2, delta: float | None = None,
                                  detail: bool = False):
    """Lower bound on ``F(rho_N, rho_N')`` for the Gaussian kernel.

    With ``delta``: ``exp(-delta^2 / 2 sigma^2) (1 - exp(-N d delta^2 / 2))^2``.
    Without: the optimized closed form ``1 - (1 + ln(2 y)) / y``,
    ``y = N sigma^2 d``, reached at ``N d delta^2 / 2 = ln(2 y)``. For
    ``2 y <= 1`` there is no such cut-off and the formula is not a bound
    (it even comes out positive near ``y = 0.2``); those points are vacuous.
    """
    if N < 1 or not sigma > 0:
        raise ValidationError("need N >= 1 and sigma > 0")
    if delta is not None:
        raw = math.exp(-delta**2 / (2 * sigma**2)) * (1 - math.exp(-N * d * delta**2 / 2)) ** 2
        out = BoundValue(raw, raw, float(delta), raw <= 0)
    else:
        y = N * sigma**2 * d
        t = math.log(2 * y)
        dopt = math.sqrt(2 * t / (N * d)) if t > 0 else float("nan")
        raw = 1 - (1 + t) / y
        vac = raw <= 0 or t <= 0
        out = BoundValue(0.0 if vac else raw, raw, dopt, vac)
    return out if detail else out.value


def general_fidelity_lower_bound(N: int, sigma: float, c: float, s: float, delta: float) -> float:
    """``{1 - c (delta / 2 sigma)^s} (1 - exp(-N delta^2 / 2))``, floored at 0."""
    if not (c > 0 and s > 0):
        raise ValidationError("c and s must be positive")
    first = 1 - c * (delta / (2 * sigma)) ** s
    val = first * (1 - math.exp(-N * delta**2 / 2))
    return max(0.0, val) if first > 0 else 0.0


#: (c, s) for which the Gaussian decoherence kernel satisfies
#: ``1 - G(L, L') <= c (delta / 2 sigma)^s`` whenever both types lie within
#: l1-distance ``delta`` of ``R``: ``1 - exp(-r^2 / 8 sigma^2) <= (2 delta)^2 / 8 sigma^2``.
GAUSSIAN_LIPSCHITZ = (2.0, 2.0)


def best_general_bound(N: int, sigma: float, c: float, s: float) -> tuple[float, float]:
    """Maximize the general bound over ``delta``; returns ``(bound, delta)``."""
    from scipy.optimize import minimize_scalar

    hi = 2 * sigma * c ** (-1 / s)
    res = minimize_scalar(lambda x: -general_fidelity_lower_bound(N, sigma, c, s, x),
                          bounds=(0.0, hi), method="bounded", options={"xatol": 1e-10})
    return -float(res.fun), float(res.x)


def small_sigma_fidelity_estimate(N: int, sigma: float) -> tuple[float, float]:
    """``(erf(sigma sqrt N), 2 sigma sqrt(N / pi))``: estimate and its small-argument series."""
    x = sigma * math.sqrt(N)
    return math.erf(x), 2 * x / math.sqrt(math.pi)


# ---------------------------------------------------- conditional fidelity
def _log_weights(k: SmoothingKernel, x: np.ndarray, ell) -> np.ndarray:
    if k.kind == "gaussian":
        y = k.project(x)
        e = k._as_outcome(ell, x.shape[1])
        r2 = ((y - e) ** 2).sum(axis=1)
        return -r2 / (2 * k.sigma**2) - 0.5 * y.shape[1] * math.log(2 * math.pi * k.sigma**2)
    with np.errstate(divide="ignore"):
        return np.log(k.weights(x, ell))


@dataclass(frozen=True)
class ConditionalFidelity:
    exact: float
    gaussian: float  # central-limit approximation (d = 2, 1D kernel); nan otherwise
    asymptotic_bound: float  # large-N lower bound; nan when d != 2
    probability: float  # outcome density P(ell)


def conditional_fidelity(beta, N: int, sigma, ell, coords: str = "simplex") -> ConditionalFidelity:
    """``F(rho_N, rho_{N|ell}) = (sum_L sqrt(q_L) m_L)^2 / sum_L q_L m_L``.

    For ``d = 2`` the default 1D kernel reads the fraction of the first
    letter, and ``ell`` is that fraction.
    """
    beta = _beta(beta)
    k = _kernel(sigma, coords)
    st = product_state(beta, N, computational_basis(len(beta)))
    x = st.types / N
    logq = _log_weights(k, x, ell)
    logm = 2 * st.logmag
    log_p = logsumexp(logq + logm)
    if not np.isfinite(log_p):
        raise ZeroProbabilityError(f"outcome {ell!r} has zero density")
    log_a = logsumexp(0.5 * logq + logm)
    exact = float(min(1.0, math.exp(2 * log_a - log_p)))
    gauss = asym = float("nan")
    if len(beta) == 2 and k.kind == "gaussian" and k.outcome_dim(2) == 1:
        mu = float(abs(beta[0]) ** 2)
        l0 = float(np.ravel(ell)[0])
        gauss = conditional_fidelity_gaussian(mu, N, k.sigma, l0)
        asym = conditional_fidelity_asymptotic_bound(mu, N, k.sigma, l0)
    return ConditionalFidelity(exact, gauss, asym, float(math.exp(log_p)))


def conditional_fidelity_gaussian(mu: float, N: int, sigma: float, ell: float) -> float:
    """Closed form when the binomial is replaced by a Gaussian on the whole real line."""
    s2 = mu * (1 - mu) / N
    v1, v2 = sigma**2 + s2, 2 * sigma**2 + s2
    dd = (ell - mu) ** 2
    return math.sqrt(v1 / sigma**2) * 2 * sigma**2 / v2 * math.exp(-dd * s2 / (2 * v1 * v2))


def conditional_fidelity_asymptotic_bound(mu: float, N: int, sigma: float, ell: float) -> float:
    """Large-``N`` lower bound, unclamped (it exceeds 1 for small ``sigma``)."""
    if mu in (0.0, 1.0):
        return float("nan")
    lead = 8 / (5 * math.sqrt(2 * math.pi) * sigma) * math.exp(-((ell - mu) ** 2) / (2 * sigma**2))
    corr = (1 - math.exp(-4 * math.sqrt(N) / (3 * math.sqrt(math.pi) * sigma))
            - math.exp(-math.sqrt(2 * N) * math.sqrt((1 - mu) / mu)))
    return lead * corr


def conditional_fidelity_threshold(N: int, sigma: float) -> float:
    """``Delta* = sigma sqrt(2 ln(1 / (c sigma)))`` with ``c = 5 sqrt(2 pi) / 8``."""
    if not sigma > 1 / math.sqrt(N):
        raise ValidationError("threshold needs sigma > 1/sqrt(N)")
    cs = THRESHOLD_C * sigma
    if cs >= 1:
        raise ValidationError(f"c*sigma = {cs:.4g} >= 1: threshold undefined")
    return sigma * math.sqrt(2 * math.log(1 / cs))


@dataclass(frozen=True)
class BadOutcome:
    bound: float  # exp(-sqrt(8) Delta / (sqrt(5 pi) sigma))
    erf_bound: float  # 1 - erf(Delta / sqrt(2 (sigma^2 + mu(1-mu)/N)))
    exact: float  # P(|ell - mu| > Delta) from the exact outcome density


def bad_outcome_probability(N: int, sigma: float, delta: float, beta=None) -> BadOutcome:
    """Probability that the 1D outcome lands further than ``delta`` from ``mu = |beta_1|^2``.

    The exact tail integrates the Gaussian kernel analytically against the
    binomial type distribution.
    """
    if not sigma > 1 / math.sqrt(N):
        raise ValidationError("needs sigma > 1/sqrt(N)")
    beta = balanced(2) if beta is None else _beta(beta)
    if len(beta) != 2:
        raise ValidationError("bad-outcome probability is defined for d = 2")
    mu = float(abs(beta[0]) ** 2)
    bound = math.exp(-math.sqrt(8) * delta / (math.sqrt(5 * math.pi) * sigma))
    s2 = mu * (1 - mu) / N
    erf_bound = 1 - math.erf(delta / math.sqrt(2 * (sigma**2 + s2)))
    m = multinomial_table(N, [mu, 1 - mu])
    L = type_table(N, 2)[:, 0] / N
    tail = ndtr((mu - delta - L) / sigma) + ndtr((L - mu - delta) / sigma)
    return BadOutcome(bound, erf_bound, float(np.clip(m @ tail, 0.0, 1.0)))


def average_conditional_fidelity(beta, N: int, k: SmoothingKernel, step: float | None = None) -> float:
    """``int P(ell) F(rho, rho_{|ell}) d ell = int (sum_L sqrt(q_L) m_L)^2 d ell`` by quadrature."""
    beta = _beta(beta)
    st = product_state(beta, N, computational_basis(len(beta)))
    m = st.probabilities()
    x = st.types / N
    keep = m > 1e-300
    pts, w = outcome_quadrature(k, x[keep], step=step)
    q = k.weights(x[keep], pts)
    a = np.sqrt(q) @ m[keep]
    return float(w @ a**2)


# ------------------------------------------------------------ mixed states
@dataclass(frozen=True)
class MixedBound:
    purified: float  # F(Phi_N, Phi_N') for the purification, measurement on molecules only
    bound: float  # closed form with d -> d^2 (floored)
    exact: float  # F(nu^N, post) from the dense oracle; nan when beyond its cap


def purification(nu) -> np.ndarray:
    """``sum_i sqrt(lambda_i) |psi_i> |i>`` as a ``d x d`` array (molecule index first)."""
    from .symmetric import check_molecule_state

    nu = check_molecule_state(nu)
    vals, vecs = np.linalg.eigh(nu)
    return vecs * np.sqrt(np.clip(vals, 0.0, None))[None, :]


def purified_fidelity(nu, N: int, k: SmoothingKernel, basis: ObservableBasis | None = None,
                      explicit: bool = False) -> float:
    """Exact ``F(Phi_N, Phi_N')`` when only the molecule half of each pair is measured.

    ``explicit=True`` works in the pair-type basis (``d^2`` letters) and
    collapses pair types onto molecule types; the default uses the molecule
    marginal directly, which gives the same number.
    """
    nu = np.asarray(nu, dtype=complex)
    d = len(nu)
    basis = computational_basis(d) if basis is None else basis
    phi = basis.u.conj().T @ purification(nu)  # rows: measurement letter j, cols: ancilla i
    if not explicit:
        R = np.clip((np.abs(phi) ** 2).sum(axis=1), 0, None)
        R = R / R.sum()
        st = product_state(np.sqrt(R).astype(complex), N, computational_basis(d))
        return averaged_fidelity(st, k, truncate=None)
    pair = product_state(phi.ravel(), N, computational_basis(d * d))
    M = pair.types.reshape(-1, d, d)
    L = M.sum(axis=2) / N
    p = pair.probabilities()
    G = k.decoherence_matrix(L)
    return float(p @ G @ p)


def purified_mixed_state_bound(nu, N: int, sigma, basis: ObservableBasis | None = None,
                               coords: str = "full") -> MixedBound:
    from . import oracle

    nu = np.asarray(nu, dtype=complex)
    d = len(nu)
    k = _kernel(sigma, coords)
    basis = computational_basis(d) if basis is None else basis
    purified = purified_fidelity(nu, N, k, basis)
    bound = gaussian_fidelity_lower_bound(N, k.sigma, d * d) if k.kind == "gaussian" else 0.0
    exact = float("nan")
    if d**N <= oracle.DIM_CAP:
        rho = oracle.product_density([nu] * N)
        post = oracle.averaged_post(rho, k, basis, N)
        exact = oracle.dense_fidelity(rho, post, "eigh")
    return MixedBound(purified, bound, exact)


# ------------------------------------------------------------------ sweeps
@dataclass
class TradeoffPoint:
    N: int
    d: int
    sigma: float
    beta_spec: str
    F_exact: float
    F_bound: float
    regime: str
    runtime_ms: float


CSV_COLUMNS = ["N", "d", "sigma", "beta_spec", "F_exact", "F_bound", "regime", "runtime_ms"]


def beta_spec(beta) -> str:
    return ";".join(f"{b.real:.6g}{b.imag:+.6g}j" for b in np.asarray(beta, dtype=complex))


def tradeoff_point(beta, N: int, sigma: float, coords: str = "full") -> TradeoffPoint:
    beta = _beta(beta)
    t0 = time.perf_counter()
    F = exact_fidelity(beta, N, sigma, coords)
    ms = (time.perf_counter() - t0) * 1e3
    bound = gaussian_fidelity_lower_bound(N, sigma, len(beta)) if sigma > 0 else 0.0
    return TradeoffPoint(N, len(beta), float(sigma), beta_spec(beta), F, bound, regime(N, sigma), ms)


def sweep(Ns: Iterable[int], sigmas: Iterable[float], betas: Sequence | None = None,
          coords: str = "full") -> list[TradeoffPoint]:
    betas = [balanced(2)] if betas is None else betas
    sigmas = list(sigmas)
    return [tradeoff_point(b, int(N), s, coords) for b in betas for N in Ns for s in sigmas]


def default_grid() -> tuple[np.ndarray, np.ndarray]:
    """Log-spaced ``N`` in [1e2, 1e5] and ``sigma`` in [1e-3, 1]."""
    return np.unique(np.round(np.logspace(2, 5, 7)).astype(int)), np.logspace(-3, 0, 7)


def write_csv(points: Iterable[TradeoffPoint], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for p in points:
            w.writerow(asdict(p))


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    r2: float
    n: int


def fit_scaling(points: Iterable[TradeoffPoint], min_y: float = 10.0) -> ScalingFit:
    """Regress ``1 - F`` on ``ln(y) / y``, ``y = N sigma^2 d``, over points with ``y >= min_y``."""
    xs, ys = [], []
    for p in points:
        y = p.N * p.sigma**2 * p.d
        if y >= min_y:
            xs.append(math.log(y) / y)
            ys.append(1 - p.F_exact)
    if len(xs) < 3:
        raise ValidationError("need at least 3 points for the scaling fit")
    r = stats.linregress(xs, ys)
    return ScalingFit(float(r.slope), float(r.intercept), float(r.rvalue**2), len(xs))
