import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from macrotypes.combinatorics import type_table
from macrotypes.errors import ValidationError
from macrotypes.smoothing import (SmoothingKernel, comb_kernel, decoherence_kernel, decoherence_kernel_quadrature,
                                  exact_kernel, gaussian_density, gaussian_kernel, lipschitz_estimate,
                                  lipschitz_refinement, make_kernel, outcome_quadrature)


def test_gaussian_density_values():
    assert gaussian_density(0.1, [0.3, 0.7], [0.3, 0.7]) == pytest.approx(1 / (2 * math.pi * 0.01))
    val = gaussian_density(0.1, [0.3, 0.7], [0.4, 0.7])
    assert val == pytest.approx(9.6532352630053908, rel=1e-13)
    with pytest.raises(ValidationError):
        gaussian_density(0.0, [0.5], [0.5])


def test_decoherence_closed_form_vs_quadrature():
    k = gaussian_kernel(0.05)
    L, Lp = np.array([0.5, 0.5]), np.array([0.6, 0.5])
    assert decoherence_kernel(k, L, Lp) == pytest.approx(0.60653065971263342, abs=1e-14)
    assert decoherence_kernel_quadrature(k, L, Lp) == pytest.approx(0.60653065971263342, abs=1e-6)


def test_flat_kernel_limit():
    k = gaussian_kernel(1e6)
    x = type_table(10, 2) / 10
    assert np.allclose(k.decoherence_matrix(x), 1.0, atol=1e-12)


def test_exact_kernel():
    k = exact_kernel()
    x = type_table(4, 2) / 4
    assert np.array_equal(k.decoherence_matrix(x), np.eye(5))
    assert np.array_equal(k.weights(x, [0.25, 0.75]), [0, 1, 0, 0, 0])


def test_make_kernel():
    assert make_kernel(0).kind == "exact"
    assert make_kernel(0.2, "simplex").coords == "simplex"
    with pytest.raises(ValidationError):
        SmoothingKernel("gaussian", 0.0)
    with pytest.raises(ValidationError):
        comb_kernel([0.0, 0.0], 0.1)


@pytest.mark.parametrize("k", [gaussian_kernel(0.07), gaussian_kernel(0.07, "simplex"),
                               comb_kernel(np.linspace(0, 1, 11), 0.05), comb_kernel(np.linspace(0, 1, 11), 0.0)])
def test_completeness_quadrature(k):
    x = type_table(7, 2) / 7
    pts, w = outcome_quadrature(k, x)
    total = w @ k.weights(x, pts)
    assert np.allclose(total, 1.0, atol=1e-6)


def test_completeness_d3():
    k = gaussian_kernel(0.1)
    x = type_table(3, 3) / 3
    pts, w = outcome_quadrature(k, x, step=0.01)
    assert np.allclose(w @ k.weights(x, pts), 1.0, atol=1e-6)


@given(st.floats(0.01, 1.0), st.floats(-2, 2), st.floats(-2, 2))
def test_G_bounds_symmetry(sigma, a, b):
    k = gaussian_kernel(sigma, "simplex")
    g = decoherence_kernel(k, [a, 1 - a], [b, 1 - b])
    assert 0.0 <= g <= 1.0
    assert g == pytest.approx(decoherence_kernel(k, [b, 1 - b], [a, 1 - a]))


@given(st.integers(1, 15), st.floats(0.01, 0.5))
def test_bins_partition(N, sigma):
    x = type_table(N, 2) / N
    for k in (gaussian_kernel(sigma), exact_kernel(), comb_kernel(np.linspace(0, 1, 6), sigma)):
        w = k.bin_weights(x, [0.2, 0.5, 0.7])
        assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)


@given(st.integers(1, 12), st.floats(0.02, 0.5))
def test_G_matrix_psd(N, sigma):
    x = type_table(N, 2) / N
    ev = np.linalg.eigvalsh(gaussian_kernel(sigma).decoherence_matrix(x))
    assert ev.min() > -1e-10


def test_config_roundtrip():
    for k in (gaussian_kernel(0.3, "simplex"), exact_kernel(), comb_kernel([0, 0.5, 1], 0.1)):
        assert SmoothingKernel.from_config(k.to_config()) == k


def test_lipschitz_gaussian_sup_gradient():
    # 1D gaussian: sup |dq/dL| = 1 / (sigma^2 sqrt(2 pi e)); with s=1 and distances in units
    # of sigma the constant is that times sigma
    sigma = 0.1
    k = gaussian_kernel(sigma, "simplex")
    xs = np.linspace(0.2, 0.8, 401)
    samples = [((x, 1 - x), (x + 1e-4, 1 - x - 1e-4), 0.5) for x in xs]
    est = lipschitz_estimate(k, samples)
    analytic = 1 / (sigma * math.sqrt(2 * math.pi * math.e)) / 2  # l1 counts both coordinates
    assert est.c == pytest.approx(analytic, rel=0.1)


def test_lipschitz_refinement_flags_hard_comb():
    hard = comb_kernel(np.linspace(0, 1, 11), 0.0)
    _, diverging = lipschitz_refinement(hard, [0.55, 0.45], [0.5], [1e-2, 1e-3, 1e-4])
    assert diverging
    soft = gaussian_kernel(0.05, "simplex")
    _, diverging = lipschitz_refinement(soft, [0.5, 0.5], [0.5], [1e-2, 1e-3, 1e-4])
    assert not diverging
