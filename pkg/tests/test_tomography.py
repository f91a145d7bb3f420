import json

import numpy as np
import pytest

from macrotypes import tomography as TM
from macrotypes.errors import ValidationError
from macrotypes.smoothing import gaussian_kernel, outcome_quadrature
from macrotypes.symmetric import spin_basis

Z = spin_basis("z")


def test_grid_shape():
    g = TM.PriorGrid.bloch()
    assert len(g) == 200
    assert np.allclose([np.linalg.norm(TM.bloch_vector(s)) for s in g.states[150:]], 1.0)
    assert np.allclose(np.linalg.norm(TM.fibonacci_sphere(50), axis=1), 1.0)


def test_density_linear_in_prior():
    k = gaussian_kernel(0.1, "simplex")
    a, b = np.diag([0.9, 0.1]), np.diag([0.4, 0.6])
    da = TM.exchangeable_outcome_density(TM.PriorGrid.single(a), Z, k, 0.7, 50)
    db = TM.exchangeable_outcome_density(TM.PriorGrid.single(b), Z, k, 0.7, 50)
    both = TM.exchangeable_outcome_density(TM.PriorGrid((a, b), [0.5, 0.5]), Z, k, 0.7, 50)
    assert both == pytest.approx((da + db) / 2, rel=1e-14)


def test_density_integrates():
    g = TM.PriorGrid.bloch(50, shells=(1.0,))
    k = gaussian_kernel(0.1, "simplex")
    pts, w = outcome_quadrature(k, np.array([[0.0, 1.0], [1.0, 0.0]]))
    dens = TM.component_densities(g, Z, k, pts, 100)
    assert w @ dens @ g.weights == pytest.approx(1.0, abs=1e-6)


def test_bayes_two_point():
    g = TM.PriorGrid((np.diag([0.9, 0.1]), np.diag([0.5, 0.5])), [0.5, 0.5])
    post = TM.posterior_update(g, Z, gaussian_kernel(0.05, "simplex"), 0.9, 100)
    assert post.weights[0] == pytest.approx(0.99999992223812319, rel=1e-12)


def test_uninformative_and_single_point():
    g = TM.PriorGrid.bloch(10, shells=(0.5, 1.0))
    post = TM.posterior_update(g, Z, gaussian_kernel(1e4, "simplex"), 0.3, 40)
    assert np.allclose(post.weights, g.weights, rtol=1e-8)
    one = TM.PriorGrid.single(np.eye(2) / 2)
    assert TM.posterior_update(one, Z, gaussian_kernel(0.1), [0.2, 0.8], 40).weights[0] == 1.0


def test_concentration_edges():
    nu = TM.bloch_state([0, 0, 1])
    delta = TM.PriorGrid.single(nu)
    assert TM.posterior_concentration(delta, nu, 0.0) == 1.0
    g = TM.PriorGrid.bloch()
    assert TM.posterior_concentration(g, nu, 1.0) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        TM.posterior_concentration(g, nu, -0.1)


def test_mode_recovers_grid_point():
    g = TM.PriorGrid.bloch()
    nu = g.states[163]
    rec = TM.simulate_tomography(nu, sigma=0.02, N=1000, seed=0)
    assert rec.steps[-1].mode == 163


def test_z_only_is_not_complete():
    g = TM.PriorGrid.bloch()
    nu = TM.bloch_state([1, 0, 0])  # z-population 1/2, shared by the whole equator of each shell
    rec = TM.simulate_tomography(nu, bases=("z",), sigma=0.02, N=1000, seed=1, mode="fresh")
    post = rec.posterior
    zs = np.array([TM.bloch_vector(s)[2] for s in g.states])
    eq = np.abs(zs) < 0.1
    assert post.weights[eq].sum() > 0.9
    assert TM.posterior_concentration(post, nu, 0.1) < 0.5


def test_rounds_shrink_spread():
    nu = TM.bloch_state([0.3, -0.5, 0.6])
    means = []
    for rounds in (1, 2, 3):
        means.append(np.mean([TM.simulate_tomography(nu, sigma=0.1, N=200, seed=s, rounds=rounds,
                                                     mode="fresh").steps[-1].spread for s in range(20)]))
    assert means[0] > means[1] > means[2]


def test_reuse_needs_pure_state():
    with pytest.raises(ValidationError):
        TM.simulate_tomography(np.eye(2) / 2, N=50)
    rec = TM.simulate_tomography(np.eye(2) / 2, N=50, mode="fresh")
    assert len(rec.steps) == 3


def test_seed_reproducible(tmp_path):
    nu = TM.bloch_state([0, 0.6, 0.8])
    a = TM.simulate_tomography(nu, N=300, seed=5)
    b = TM.simulate_tomography(nu, N=300, seed=5)
    assert [s.outcome for s in a.steps] == [s.outcome for s in b.steps]
    a.write_json(tmp_path / "r.json")
    a.write_csv(tmp_path / "r.csv")
    assert json.loads((tmp_path / "r.json").read_text())["N"] == 300
    assert (tmp_path / "r.csv").read_text().startswith("round,basis,outcome,concentration@0.05,concentration@0.1")


def test_bloch_validation():
    with pytest.raises(ValidationError):
        TM.bloch_state([1, 1, 0])
