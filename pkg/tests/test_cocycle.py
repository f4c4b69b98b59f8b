import numpy as np
import pytest

from framelab import models
from framelab.cocycle import (
    Diffeo,
    autonomy_check,
    derivative_cocycle,
    determinant_check,
    identity_diffeo,
    lyapunov_exponents,
    verify_partial_hyperbolicity,
)
from framelab.errors import NotPartiallyHyperbolic, NotRealDiagonalizable
from framelab.fields import canonical_framing
from framelab.geometry import Torus

from conftest import CAT, LOG_LU


def test_toral_cocycle_is_the_linear_part():
    A = np.array([[2, 1], [1, 1]])
    sys_ = models.toral_affine(A, (0.3, 0.1))
    pts = np.random.default_rng(0).random((100, 2))
    assert np.allclose(derivative_cocycle(sys_.diffeo, sys_.framing, pts), A)
    ident = identity_diffeo(3, Torus(3))
    assert np.allclose(derivative_cocycle(ident, canonical_framing(3), np.random.default_rng(1).random((10, 3))), np.eye(3))


def test_heis_left_translation_cocycle_is_adjoint():
    rng = np.random.default_rng(2)
    F = models.heis_right_framing()
    for _ in range(5):
        g = rng.normal(size=3)
        phi = models.heis_left_translation(g)
        pts = rng.random((50, 3))
        # oracle: Ad(g) = [[1,0,0],[0,1,0],[-b,a,1]] computed by hand
        a, b = g[0], g[1]
        ad = np.array([[1, 0, 0], [0, 1, 0], [-b, a, 1]])
        assert np.max(np.abs(derivative_cocycle(phi, F, pts) - ad)) < 1e-12
        assert np.allclose(models.heis_adjoint(g), ad)


def test_cat_map_autonomy():
    sys_ = models.cat_map()
    rep = autonomy_check(sys_.diffeo, sys_.framing, np.random.default_rng(3).random((10_000, 2)))
    assert rep.autonomous and rep.max_deviation < 1e-12
    assert np.allclose(rep.M, CAT)
    assert determinant_check(rep) == 1


def test_circle_extension_block_cocycle():
    sys_ = models.circle_extension(CAT, models.sine_phase(0.2))
    rep = autonomy_check(sys_.diffeo, sys_.framing, sys_.manifold.sample(np.random.default_rng(4), 2000))
    assert rep.max_deviation < 1e-6
    assert np.allclose(rep.M, [[1, 0, 0], [0, 2, 1], [0, 1, 1]], atol=1e-9)


def test_perturbed_cat_is_not_autonomous():
    sys_ = models.perturbed_cat(0.1)
    rep = autonomy_check(sys_.diffeo, sys_.framing, np.random.default_rng(5).random((10_000, 2)))
    assert not rep.autonomous and rep.max_deviation > 0.1
    # two-point oracle: the Jacobian of the perturbation differs at y=0 and y=1/4
    p = np.array([[0.3, 0.0], [0.3, 0.25]])
    C = derivative_cocycle(sys_.diffeo, sys_.framing, p)
    assert np.max(np.abs(C[0] - C[1])) > 0.1


def test_determinant_examples():
    th = np.pi / 3
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    phi = Diffeo(lambda p: p @ rot.T, lambda p: np.broadcast_to(rot, (len(p), 2, 2)).copy(), name="rotation")
    rep = autonomy_check(phi, canonical_framing(2), np.random.default_rng(6).random((20, 2)))
    assert determinant_check(rep) == 1
    flip = models.toral_affine(np.diag([1, -1]))
    rep = autonomy_check(flip.diffeo, flip.framing, np.random.default_rng(7).random((20, 2)))
    assert determinant_check(rep) == -1
    doubling = Diffeo(lambda p: 2 * p, lambda p: np.broadcast_to(2 * np.eye(2), (len(p), 2, 2)).copy())
    rep = autonomy_check(doubling, canonical_framing(2), np.zeros((3, 2)))
    assert determinant_check(rep) is None


@pytest.mark.parametrize("name", ["cat", "heis-k1", "sol", "suspension-twist", "anosov3", "circle-extension"])
def test_cocycle_chain_rule(systems, name):
    sys_ = systems[name]
    phi, F = sys_.diffeo, sys_.framing
    pts = sys_.manifold.sample(np.random.default_rng(8), 100)
    two = phi.compose(phi)
    lhs = derivative_cocycle(two, F, pts)
    rhs = derivative_cocycle(phi, F, phi.forward(pts)) @ derivative_cocycle(phi, F, pts)
    assert np.max(np.abs(lhs - rhs)) < 1e-8


def test_inverse_has_inverse_cocycle(systems):
    sys_ = systems["heis-k1"]
    pts = sys_.manifold.sample(np.random.default_rng(9), 50)
    C = derivative_cocycle(sys_.diffeo, sys_.framing, pts)
    Cinv = derivative_cocycle(sys_.diffeo.inverted(), sys_.framing, sys_.diffeo.forward(pts))
    assert np.max(np.abs(Cinv @ C - np.eye(3))) < 1e-10


def test_lyapunov_examples():
    cat = models.cat_map()
    starts = np.random.default_rng(10).random((16, 2))
    spec = lyapunov_exponents(cat.diffeo, starts, 1000)
    assert np.allclose(spec.exponents, [LOG_LU, -LOG_LU], atol=1e-3)
    ident = identity_diffeo(2, Torus(2))
    assert np.array_equal(lyapunov_exponents(ident, starts, 200).exponents, [0.0, 0.0])
    susp = models.suspension(CAT)
    spec = lyapunov_exponents(susp.diffeo, susp.manifold.sample(np.random.default_rng(11), 16), 1000)
    assert np.allclose(spec.exponents, [LOG_LU, 0.0, -LOG_LU], atol=1e-3)
    with pytest.raises(ValueError):
        lyapunov_exponents(cat.diffeo, starts, 50)


def test_lyapunov_running_series_shape():
    cat = models.cat_map()
    spec = lyapunov_exponents(cat.diffeo, np.random.default_rng(12).random((4, 2)), 300)
    assert spec.running.shape == (300, 2)
    assert np.allclose(spec.running[-1], spec.exponents)


def test_partial_hyperbolicity_examples():
    spec = verify_partial_hyperbolicity(np.diag([0.382, 1, 2.618]))
    assert (spec.lambda_s, spec.lambda_c, spec.lambda_u) == (0.382, 1.0, 2.618)
    with pytest.raises(NotPartiallyHyperbolic, match="lambda_u"):
        verify_partial_hyperbolicity(np.eye(3))
    assert verify_partial_hyperbolicity(np.diag([0.5, 2, 3])).lambda_c == 2.0
    rot = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 2]], dtype=float)
    with pytest.raises(NotRealDiagonalizable):
        verify_partial_hyperbolicity(rot)


def test_partial_hyperbolicity_inverse_symmetry():
    rng = np.random.default_rng(13)
    for _ in range(300):
        P = rng.normal(size=(3, 3))
        lam = np.exp(rng.uniform(-2, 2, 3)) * rng.choice([-1, 1], 3)
        M = P @ np.diag(lam) @ np.linalg.inv(P)
        try:
            a = verify_partial_hyperbolicity(M)
        except NotPartiallyHyperbolic:
            a = None
        try:
            b = verify_partial_hyperbolicity(np.linalg.inv(M))
        except NotPartiallyHyperbolic:
            b = None
        assert (a is None) == (b is None)
        if a is not None:
            assert a.lambda_s == pytest.approx(1 / b.lambda_u, rel=1e-8)
            assert a.lambda_u == pytest.approx(1 / b.lambda_s, rel=1e-8)
