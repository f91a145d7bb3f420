"""Exit criteria. Each test prints one PASS/FAIL line (collected in the terminal summary).

Run alone with ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest

from macrotypes import crosscheck, histories as H, nmr, oracle, tomography as TM, tradeoff as T
from macrotypes import symmetric as S
from macrotypes.combinatorics import type_table
from macrotypes.smoothing import exact_kernel, gaussian_kernel, outcome_quadrature

pytestmark = pytest.mark.acceptance

RESULTS = {}
BAL = T.balanced(2)
Z, X = S.spin_basis("z"), S.spin_basis("x")


def record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def test_c01_oracle_equivalence():
    t0 = time.perf_counter()
    cases = crosscheck.equivalence_suite(cases=50, seed=0, max_qubits=8, max_qutrits=5)
    s = crosscheck.summarize(cases, tol=1e-9)
    dt = time.perf_counter() - t0
    worst = max(s["worst"].values())
    record(1, s["passed"] and dt < 60, f"50 cases, worst |diff| {worst:.2e} (tol 1e-9), {dt:.1f}s (< 60s)")


def test_c02_exact_collapse():
    f4 = T.fidelity_zero_sigma(BAL, 4).exact
    Ns = [100, 200, 400, 800, 1600, 3200]
    zs = [T.fidelity_zero_sigma(BAL, N) for N in Ns]
    ratios = [z.exact / (2 / math.sqrt(2 * math.pi * N)) for z, N in zip(zs, Ns)]
    mono = all(a.exact > b.exact for a, b in zip(zs, zs[1:]))
    ok = abs(f4 - 70 / 256) <= 1e-12 and all(abs(r - 1) <= 0.1 for r in ratios) and mono
    record(2, ok, f"F(N=4)={f4!r} vs 70/256; exact/Stirling-line in [{min(ratios):.4f}, {max(ratios):.4f}] "
                  f"(need 1 +- 0.1); decreasing={mono}")


def test_c03_bound_dominance_and_scaling():
    pts = T.sweep([100, 1000, 10000], [0.02, 0.05, 0.1, 0.3])
    viol = [p for p in pts if p.F_bound > 0 and p.F_exact < p.F_bound]
    fit = T.fit_scaling(pts, min_y=10)
    ok = not viol and fit.slope > 0 and fit.r2 >= 0.9
    record(3, ok, f"{len(viol)} violations over {len(pts)} points; fit on {fit.n} points: "
                  f"slope {fit.slope:.4f}, R^2 {fit.r2:.4f}")


def test_c04_fine_regime():
    Ns = [400, 1600, 6400]
    F = [T.exact_fidelity(BAL, N, 0.1 / math.sqrt(N)) for N in Ns]
    est = math.erf(0.1)
    within = all(est / 2 <= f <= 2 * est for f in F) and all(f < 0.2 for f in F)
    Fn = [T.exact_fidelity(BAL, N, 1 / N) for N in Ns]
    dec = Fn[0] > Fn[1] > Fn[2]
    record(4, within and dec, f"F(0.1/sqrt N)={[round(f, 5) for f in F]} vs erf={est:.5f}; "
                              f"F(1/N)={[round(f, 5) for f in Fn]} decreasing={dec}")


def test_c05_single_molecule_decoherence():
    rng = np.random.default_rng(5)
    worst = 0.0
    for N in range(2, 9):
        b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        b /= np.linalg.norm(b)
        basis = crosscheck.random_basis(2, rng)
        st = S.product_state(b, N, basis)
        R = np.abs(b) ** 2
        L = type_table(N, 2)[int(np.argmax(st.probabilities()))]
        cond = S.conditional_post_density(st, exact_kernel(), L / N)
        avg = S.averaged_post_density(st, exact_kernel())
        vec = oracle.symmetric_to_dense(st)
        cond_d = oracle.reduce_to_first(oracle.conditional_post(vec, exact_kernel(), L / N, basis, N), N, 2)
        avg_d = oracle.reduce_to_first(oracle.averaged_post(vec, exact_kernel(), basis, N), N, 2)
        lab = lambda m: basis.u @ m @ basis.u.conj().T  # noqa: E731
        worst = max(worst,
                    np.abs(S.reduce_single_molecule(cond) - np.diag(L / N)).max(),
                    np.abs(S.reduce_single_molecule(avg) - np.diag(R)).max(),
                    np.abs(cond_d - lab(np.diag(L / N))).max(),
                    np.abs(avg_d - lab(np.diag(R))).max())
    record(5, worst < 1e-12, f"N=2..8 random bases, worst deviation {worst:.2e} (tol 1e-12)")


def test_c06_conditional_fidelity():
    N, sigma = 4000, 0.05
    delta = T.conditional_fidelity_threshold(N, sigma)
    rng = np.random.default_rng(6)
    n = 2000
    ells = rng.binomial(N, 0.5, n) / N + sigma * rng.standard_normal(n)
    inside = np.abs(ells - 0.5) <= delta
    worst = max(1 - T.conditional_fidelity(BAL, N, sigma, float(l)).exact for l in ells[inside])
    frac_out = float(np.mean(~inside))
    bound = T.bad_outcome_probability(N, sigma, delta).bound
    ok = worst < 1e-3 and frac_out <= bound
    record(6, ok, f"Delta*={delta:.5f}; max 1-F inside over {inside.sum()} samples = {worst:.3e} (need < 1e-3); "
                  f"outside fraction {frac_out:.4f} <= bound {bound:.4f}: {frac_out <= bound}")


def test_c07_commutator():
    rng = np.random.default_rng(7)
    worst = 0.0
    for N in (2, 3, 4):
        for _ in range(10):
            a, b = rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))
            worst = max(worst, H.commutator_relation(a + a.conj().T, b + b.conj().T, N).residual)
    record(7, worst < 1e-12, f"30 random pairs, max ||N[A,B]-C|| = {worst:.2e} (tol 1e-12)")


def test_c08_histories():
    N = 400
    prep = H.pure_product(np.array([1, 1]) / math.sqrt(2), N, Z)
    eps = {s: H.sum_rule_violation(H.zx_family(N, s, 5, prep), prep) for s in (0.0, 0.01, 0.03, 0.1, 0.3)}
    ladder = [eps[s] for s in (0.01, 0.03, 0.1, 0.3)]
    nonincr = all(a >= b for a, b in zip(ladder, ladder[1:]))
    xi = {r["xi"]: r["epsilon"] for r in H.epsilon_sweep(256, [0.05], xis=(1, 2, 4))}
    incr = xi[1] < xi[2] < xi[4]
    ok = eps[0.1] < 0.02 and eps[0.0] > 0.2 and nonincr and incr
    record(8, ok, f"eps(0.1)={eps[0.1]:.2e} eps(0)={eps[0.0]:.3f} ladder={['%.1e' % v for v in ladder]} "
                  f"nonincreasing={nonincr}; xi sweep {[f'{k}:{v:.1e}' for k, v in xi.items()]} increasing={incr}")


def test_c09_separable_reduction():
    rng = np.random.default_rng(9)
    up, down = np.diag([1.0, 0]), np.diag([0, 1.0])
    sts = [up if u else down for u in rng.integers(0, 2, 100)]
    tv_c = H.separable_tv(sts, Z, gaussian_kernel(0.2))
    tv_f = H.separable_tv(sts, Z, gaussian_kernel(0.001))
    half = [up] * 50 + [down] * 50
    p = H.product_type_distribution(half, Z, exact_kernel(), [0.5, 0.5])
    ok = tv_c < 0.05 and tv_f > 0.3 and abs(p - 1) <= 1e-12
    record(9, ok, f"TV(0.2)={tv_c:.4f} (<0.05) TV(0.001)={tv_f:.4f} (>0.3) P(1/2,1/2)={p!r}")


def test_c10_tomography():
    grid = TM.PriorGrid.bloch()
    nu = grid.states[150]  # first point of the pure (outer) shell
    hits = []
    for seed in range(20):
        rec = TM.simulate_tomography(nu, sigma=0.05, N=1000, seed=seed, prior=grid)
        hits.append(rec.steps[-1].concentration_10 >= 0.9)
    record(10, sum(hits) >= 18, f"{sum(hits)}/20 runs with mass >= 0.9 within 0.1 (need 18)")


def test_c11_nmr_width_decoupling():
    N = 10**4
    st = S.product_state(np.array([1, 1]) / math.sqrt(2), N, X)
    good = nmr.averaged_post_fidelity(nmr.CoilModel(1.0, 0.1, 0.0, N), st)
    bad = nmr.averaged_post_fidelity(nmr.CoilModel(1.0, 0.001, 0.099, N), st)
    small = S.product_state(np.array([0.6, 0.8j]), 40, X)
    coil = nmr.CoilModel(1.0, 0.1, 0.0, 40)
    diff = max(np.abs(nmr.thermal_coil_update(coil, small, l, units="type").matrix
                      - S.conditional_post_density(small, gaussian_kernel(0.1, "simplex"), l).matrix).max()
               for l in (0.2, 0.5, 0.63))
    ok = good > 0.95 and bad < 0.5 and diff <= 1e-12
    record(11, ok, f"F_post(lam=0.1)={good:.5f} F_post(lam=0.001)={bad:.5f} thermal-vs-ideal {diff:.1e}")


def test_c12_povm_completeness():
    worst = 0.0
    for N in (4, 20, 50):
        x = type_table(N, 2) / N
        for lam, mix in ((0.1, 0.0), (0.03, 0.05)):
            coil = nmr.CoilModel(1.0, lam, mix, N)
            k = gaussian_kernel(coil.outcome_width, "simplex")
            pts, w = outcome_quadrature(k, x)
            ideal = w @ gaussian_kernel(lam, "simplex").weights(x, pts)
            therm = sum(wi * np.diag(nmr.thermal_update_matrix(coil, x[:, 0], p[0])) for p, wi in zip(pts, w))
            worst = max(worst, np.abs(ideal - 1).max(), np.abs(therm - 1).max())
    # dense operator check at N=4: sum over quadrature of E_l equals the identity on 16 levels
    k = gaussian_kernel(0.1, "simplex")
    pts, w = outcome_quadrature(k, type_table(4, 2) / 4)
    acc = sum(wi * np.linalg.matrix_power(oracle.dense_coarse_povm(k, p, X, 4), 2) for p, wi in zip(pts, w))
    worst = max(worst, np.abs(acc - np.eye(16)).max())
    record(12, worst < 1e-6, f"N in {{4,20,50}} ideal+thermal, plus dense N=4: max |int E - 1| = {worst:.1e}")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c"):
            try:
                fn()
            except AssertionError:
                pass
