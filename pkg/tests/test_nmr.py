import math

import numpy as np
import pytest

from macrotypes import nmr, oracle
from macrotypes import symmetric as S
from macrotypes.combinatorics import type_table
from macrotypes.errors import BasisMismatchError, ValidationError
from macrotypes.smoothing import gaussian_kernel, outcome_quadrature

X, Z = S.spin_basis("x"), S.spin_basis("z")


def balanced_x(N):
    return S.product_state(np.array([1, 1]) / math.sqrt(2), N, X)


def test_thermal_states():
    h = np.diag([0.5, -0.5])
    assert np.allclose(nmr.thermal_molecule_state(nmr.ThermalSpec(h, 0.0)), np.eye(2) / 2)
    assert np.allclose(nmr.thermal_molecule_state(nmr.ThermalSpec(h, math.inf)), np.diag([0, 1]))
    nu = nmr.thermal_molecule_state(nmr.ThermalSpec(h, 1.0))
    assert nu[0, 0].real == pytest.approx(0.26894142136999512, abs=1e-15)


def test_collective_pulse():
    st = S.product_state(np.array([0.6, 0.8j]), 4, X)
    assert np.allclose(nmr.apply_collective_pulse(st, np.eye(2)).amplitudes(), st.amplitudes())
    w = nmr.rotation("y", 0.7)
    out = nmr.apply_collective_pulse(st, w)
    ref = oracle.local_power(w, 4) @ oracle.symmetric_to_dense(st)
    assert np.allclose(oracle.symmetric_to_dense(out), ref, atol=1e-10)
    nu = np.diag([0.3, 0.7])
    assert np.allclose(nmr.apply_collective_pulse(nu, w), w @ nu @ w.conj().T)


def test_units_and_jacobian():
    coil = nmr.CoilModel(2.5, 0.05, 0.03, 40)
    st = balanced_x(40)
    ell = np.array([0.3, 0.5, 0.62])
    r = coil.to_field(ell)
    assert np.allclose(coil.to_type(r), ell)
    assert np.allclose(nmr.thermal_outcome_density(coil, st, r),
                       nmr.thermal_outcome_density(coil, st, ell, units="type") / (40 * 2.5))
    assert coil.outcome_width == pytest.approx(math.hypot(0.05, 0.03))
    assert coil.nominal_width == pytest.approx(0.08)


def test_pure_coil_is_ideal_update():
    st = S.product_state(np.array([0.6, 0.8j]), 30, X)
    coil = nmr.CoilModel(1.0, 0.1, 0.0, 30)
    a = nmr.thermal_coil_update(coil, st, 0.55, units="type")
    b = S.conditional_post_density(st, gaussian_kernel(0.1, "simplex"), 0.55)
    assert np.abs(a.matrix - b.matrix).max() < 1e-12
    dens = nmr.thermal_outcome_density(coil, st, 0.55, units="type")
    assert dens == pytest.approx(S.outcome_density(st, gaussian_kernel(0.1, "simplex"), 0.55), rel=1e-12)
    with pytest.raises(ValidationError):
        nmr.ideal_coil_kernel(nmr.CoilModel(1.0, 0.1, 0.1, 30))


def test_closed_form_vs_gauss_hermite():
    st = S.product_state(np.array([0.6, 0.8j]), 25, X)
    coil = nmr.CoilModel(1.0, 0.04, 0.07, 25)
    a = nmr.thermal_coil_update(coil, st, 0.4, units="type")
    b = nmr.thermal_coil_update(coil, st, 0.4, units="type", method="gh")
    assert np.abs(a.matrix - b.matrix).max() < 1e-12


def test_outcome_width_adds_in_quadrature():
    N = 200
    st = S.product_state(np.array([math.sqrt(0.3), math.sqrt(0.7)]), N, X)
    coil = nmr.CoilModel(1.0, 0.03, 0.04, N)
    ell = np.linspace(-0.5, 1.5, 40001)
    d = nmr.thermal_outcome_density(coil, st, ell, units="type")
    h = ell[1] - ell[0]
    m = (d * ell).sum() * h
    var = (d * (ell - m) ** 2).sum() * h
    assert m == pytest.approx(0.3, abs=1e-9)
    assert math.sqrt(var) == pytest.approx(math.sqrt(0.03**2 + 0.04**2 + 0.3 * 0.7 / N), rel=1e-6)


@pytest.mark.parametrize("lam,mix", [(0.1, 0.0), (0.02, 0.05)])
def test_completeness_n50(lam, mix):
    N = 50
    coil = nmr.CoilModel(1.0, lam, mix, N)
    x = type_table(N, 2)[:, 0] / N
    k = gaussian_kernel(coil.outcome_width, "simplex")
    pts, w = outcome_quadrature(k, type_table(N, 2) / N)
    diag = sum(wi * np.diag(nmr.thermal_update_matrix(coil, x, p[0])) for p, wi in zip(pts, w))
    assert np.allclose(diag, 1.0, atol=1e-6)


def test_monte_carlo_readings():
    N = 60
    st = S.product_state(np.array([math.sqrt(0.35), math.sqrt(0.65)]), N, X)
    coil = nmr.CoilModel(1.5, 0.04, 0.06, N)
    n = 10**5
    r = nmr.sample_readings(coil, st, n, np.random.default_rng(2024))
    grid = coil.to_field(np.linspace(-0.6, 1.6, 20001))
    dens = nmr.thermal_outcome_density(coil, st, grid)
    h = grid[1] - grid[0]
    mean = (dens * grid).sum() * h
    var = (dens * (grid - mean) ** 2).sum() * h
    se = math.sqrt(var / n)
    assert abs(r.mean() - mean) < 3 * se
    # standard error of the sample variance for a near-Gaussian law
    assert abs(r.var() - var) < 3 * var * math.sqrt(2 / n)


def test_disturbance_depends_on_lambda_only():
    N = 10**4
    st = balanced_x(N)
    good = nmr.averaged_post_fidelity(nmr.CoilModel(1.0, 0.1, 0.0, N), st)
    bad = nmr.averaged_post_fidelity(nmr.CoilModel(1.0, 0.001, 0.099, N), st)
    assert good > 0.95 and bad < 0.5
    # same lambda, different mixing: same averaged disturbance
    a = nmr.averaged_post_fidelity(nmr.CoilModel(1.0, 0.01, 0.0, N), st)
    b = nmr.averaged_post_fidelity(nmr.CoilModel(1.0, 0.01, 0.2, N), st)
    assert a == b


def test_conditional_fidelity_shortcut():
    st = S.product_state(np.array([0.6, 0.8j]), 30, X)
    coil = nmr.CoilModel(2.0, 0.05, 0.08, 30)
    post = nmr.thermal_coil_update(coil, st, 3.0)
    assert nmr.conditional_post_fidelity(coil, st, 3.0) == pytest.approx(S.fidelity(st, post), abs=1e-12)


def test_frame_and_validation():
    coil = nmr.CoilModel(1.0, 0.1, 0.0, 10)
    with pytest.raises(BasisMismatchError):
        nmr.thermal_coil_update(coil, S.product_state(np.array([1, 0]), 10, Z), 0.5, units="type")
    with pytest.raises(ValidationError):
        nmr.CoilModel(1.0, 0.0, 0.1, 10)
    with pytest.raises(ValidationError):
        nmr.apply_collective_pulse(np.eye(2) / 2, np.ones((2, 2)))


def test_back_to_back_narrows():
    st = balanced_x(400)
    before, after = nmr.back_to_back_width(st, gaussian_kernel(0.01, "simplex"), 0.5)
    assert after < before


def test_sweep_csv(tmp_path):
    pts = nmr.coil_sweep(400, 0.1, [1.0, 0.5])
    nmr.write_csv(pts, tmp_path / "n.csv")
    assert (tmp_path / "n.csv").read_text().splitlines()[0] == ",".join(nmr.NMR_COLUMNS)
    assert pts[0].F_post >= pts[1].F_post
