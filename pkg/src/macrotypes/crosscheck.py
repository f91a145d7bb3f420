"""Symmetric engine vs. dense oracle on random small cases."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from . import oracle
from . import symmetric as sym
from .combinatorics import type_table
from .smoothing import exact_kernel, gaussian_kernel

QUANTITIES = ("outcome_density", "conditional_post", "averaged_post", "reduced_conditional",
              "reduced_averaged", "fidelity_averaged", "fidelity_conditional", "fidelity_mixed")


@dataclass
class EquivalenceCase:
    N: int
    d: int
    sigma: float
    coords: str
    errors: dict = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max(self.errors.values())


def random_basis(d: int, rng: np.random.Generator) -> sym.ObservableBasis:
    u = scipy.stats.unitary_group.rvs(d, random_state=rng)
    return sym.ObservableBasis(u, np.arange(d, 0, -1) / d, "random")


def random_amplitudes(d: int, rng: np.random.Generator) -> np.ndarray:
    b = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return b / np.linalg.norm(b)


def _lab(rho1, basis):
    return basis.u @ rho1 @ basis.u.conj().T


def run_case(N: int, d: int, sigma: float, rng: np.random.Generator, coords: str = "full") -> EquivalenceCase:
    basis = random_basis(d, rng)
    st = sym.product_state(random_amplitudes(d, rng), N, basis)
    # outcomes are drawn from the state's own outcome law; far-tail outcomes
    # (density ~1e-20) are ill-conditioned for the dense reference
    L = type_table(N, d)
    p = st.probabilities()
    x = L[rng.choice(len(p), p=p / p.sum())] / N
    if sigma == 0:
        k, ell = exact_kernel(), x
    else:
        k = gaussian_kernel(sigma, coords)
        ell = x + sigma * rng.standard_normal(d) if coords == "full" else x[0] + sigma * rng.standard_normal()
    vec = oracle.symmetric_to_dense(st)
    case = EquivalenceCase(N, d, sigma, coords)
    e = case.errors

    e["outcome_density"] = abs(sym.outcome_density(st, k, ell) - oracle.outcome_density(vec, k, ell, basis, N))
    cond = sym.conditional_post_density(st, k, ell)
    cond_d = oracle.conditional_post(vec, k, ell, basis, N)
    e["conditional_post"] = np.abs(oracle.symmetric_to_dense(cond) - cond_d).max()
    avg = sym.averaged_post_density(st, k)
    avg_d = oracle.averaged_post(vec, k, basis, N)
    e["averaged_post"] = np.abs(oracle.symmetric_to_dense(avg) - avg_d).max()
    e["reduced_conditional"] = np.abs(_lab(sym.reduce_single_molecule(cond), basis)
                                      - oracle.reduce_to_first(cond_d, N, d)).max()
    e["reduced_averaged"] = np.abs(_lab(sym.reduce_single_molecule(avg), basis)
                                   - oracle.reduce_to_first(avg_d, N, d)).max()
    e["fidelity_averaged"] = abs(sym.fidelity(st, avg) - oracle.dense_fidelity(avg_d, vec, "eigh"))
    e["fidelity_conditional"] = abs(sym.fidelity(st, cond) - oracle.dense_fidelity(cond_d, vec, "eigh"))
    e["fidelity_mixed"] = abs(sym.fidelity(cond, avg) - oracle.dense_fidelity(cond_d, avg_d, "eigh"))
    return case


def equivalence_suite(cases: int = 50, seed: int = 0, max_qubits: int = 8, max_qutrits: int = 5,
                      sigmas=(0.0, 0.1, 0.3)) -> list[EquivalenceCase]:
    """Random cases split between qubits (``N <= max_qubits``) and qutrits (``N <= max_qutrits``)."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(cases):
        d = 2 if i % 2 == 0 or max_qutrits < 1 else 3
        N = int(rng.integers(1, (max_qubits if d == 2 else max_qutrits) + 1))
        sigma = float(sigmas[i % len(sigmas)])
        coords = "simplex" if (d == 2 and i % 4 == 2) else "full"
        out.append(run_case(N, d, sigma, rng, coords))
    return out


def summarize(cases, tol: float = 1e-9) -> dict:
    worst = {q: max(c.errors[q] for c in cases) for q in QUANTITIES}
    return {"cases": len(cases), "tolerance": tol, "worst": worst,
            "passed": bool(all(math.isfinite(v) and v < tol for v in worst.values()))}
