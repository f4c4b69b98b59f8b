import numpy as np
import pytest
from scipy.integrate import solve_ivp

from framelab import models
from framelab.circle import (
    CircleMapLift,
    arclength_rotation,
    conjugate_fibers_to_rotations,
    fiber_rotation_profile,
    linearization_distance,
    linearize_parabolic,
    rigid_rotation,
    rotation_deviation,
    rotation_number,
)
from framelab.cocycle import Diffeo
from framelab.errors import NotADiffeomorphism, NotAutonomous, NotFiberPreserving, NotLocalDiffeo
from framelab.models import FramedSystem

TP = 2 * np.pi


def _arnold(a=0.3, b=0.05):
    return CircleMapLift(lambda x: x + a + b * np.sin(TP * x), 1, lambda x: 1 + b * TP * np.cos(TP * x))


def test_rotation_number_examples():
    assert abs(rotation_number(rigid_rotation(0.25)) - 0.25) < 1e-9
    assert rotation_number(rigid_rotation(0.0)) == 0.0
    with pytest.raises(ValueError):
        rotation_number(rigid_rotation(0.1), n_iter=10)


def test_rotation_number_against_long_orbit():
    f = _arnold()
    total = 0.0
    n = 10**6
    # plain long-orbit average as the oracle
    xs = 0.0
    for _ in range(n):
        y = xs + 0.3 + 0.05 * np.sin(TP * xs)
        total += y - xs
        xs = y % 1.0
    oracle = total / n
    assert abs(rotation_number(f) - oracle) < 2e-4


def test_rotation_number_rejects_non_diffeos():
    with pytest.raises(NotADiffeomorphism):
        rotation_number(CircleMapLift(lambda x: x + 0.3 * np.sin(TP * x) * 0.5 + 0.2 * np.sin(2 * TP * x), 1))
    with pytest.raises(NotADiffeomorphism):
        rotation_number(CircleMapLift(lambda x: 2 * x, 2))


def test_rotation_number_composition():
    rng = np.random.default_rng(0)
    for a, b in rng.random((20, 2)):
        comp = CircleMapLift(lambda x, a=a, b=b: x + a + b)
        assert abs(rotation_number(comp) - (a + b) % 1.0) < 1e-9


def _fiber_change(c):
    """``h(x) = x + c sin 2 pi x`` and its Newton inverse (|c| < 1 / 2 pi)."""

    def h(x):
        return x + c * np.sin(TP * x)

    def h_inv(u):
        u = np.asarray(u, dtype=float)
        x = u.copy()
        for _ in range(12):
            x = x - (h(x) - u) / (1 + c * TP * np.cos(TP * x))
        return x

    return h, h_inv


def test_rotation_number_conjugation_invariant():
    f = _arnold()
    base = rotation_number(f, 100_000)
    for c in (-0.08, 0.05):
        h, h_inv = _fiber_change(c)
        g = CircleMapLift(lambda x, h=h, h_inv=h_inv: h(f(h_inv(x))), 1)
        assert abs(rotation_number(g, 100_000) - base) < 5e-4


def test_arclength_rotation_examples():
    assert arclength_rotation(rigid_rotation(0.25)) == pytest.approx(0.25, abs=1e-12)
    assert arclength_rotation(rigid_rotation(0.0)) == 0.0
    with pytest.raises(NotAutonomous):
        arclength_rotation(_arnold())


def test_arclength_rotation_of_a_flow_map():
    g = lambda th: 2 + np.sin(TP * th)  # noqa: E731
    t = 0.3

    def flow(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        sol = solve_ivp(lambda _, u: g(u), (0, t), x, method="DOP853", rtol=1e-12, atol=1e-13, vectorized=True)
        return sol.y[:, -1].reshape(x.shape)

    lift = CircleMapLift(flow, 1, lambda x: g(flow(x)) / g(x))
    period = 1 / np.sqrt(3)  # int_0^1 dth / (2 + sin) = 1 / sqrt(3)
    expected = t / period
    expected -= np.floor(expected)
    val = arclength_rotation(lift, g)
    assert val == pytest.approx(expected, abs=1e-8)
    assert val == pytest.approx(rotation_number(lift, 2000), abs=1e-6)


def test_parabolic_profile_is_exact():
    prof = fiber_rotation_profile(models.linear_parabolic(3))
    assert prof.degree_k == 3
    assert np.max(np.abs(prof.unwrapped - 3 * prof.z)) < 1e-12
    assert np.max(np.abs(prof.alpha - (3 * prof.z) % 1.0)) < 1e-12


def test_translation_profile_is_constant():
    prof = fiber_rotation_profile(models.fiber_translation(0.3))
    assert prof.degree_k == 0
    assert np.allclose(prof.alpha, 0.3, atol=1e-12)


def test_monotone_twist_degree_by_sign_changes():
    sys_ = models.monotone_twist(2, 0.1)
    prof = fiber_rotation_profile(sys_)
    assert prof.degree_k == 2
    # independent count: zeros of alpha(y) - 1/2 mod 1 (two per unit winding)
    y = np.linspace(0, 1, 20001)[:-1]
    a = (2 * y + 0.1 * np.sin(TP * y)) % 1.0
    crossings = np.sum(np.diff(np.sign(a - 0.5)) > 0)
    assert crossings == 2


def test_degree_invariant_under_fiber_reparametrisation():
    base = models.monotone_twist(2, 0.1)
    ref = fiber_rotation_profile(base)
    for c in (-0.1, 0.07, 0.12):
        h, h_inv = _fiber_change(c)

        def fwd(p, h=h, h_inv=h_inv):
            r = base.diffeo.forward(np.column_stack([h_inv(p[:, 0]), p[:, 1]]))
            return np.column_stack([h(r[:, 0]), r[:, 1]])

        def speed(p, h_inv=h_inv, c=c):
            # the pushed unit fiber field h_* d/dx has length density h'(h^-1 x)
            return 1 + c * TP * np.cos(TP * h_inv(p[:, 0]))

        phi = Diffeo(fwd, None, None, base.manifold, "conjugated-twist")
        sys_ = FramedSystem("conjugated-twist", base.manifold, base.framing, phi, fiber_axis=0, fiber_speed=speed)
        prof = fiber_rotation_profile(sys_)
        assert prof.degree_k == ref.degree_k == 2
        assert np.max(np.abs(prof.unwrapped - ref.unwrapped)) < 1e-6


def test_fiber_flow_conjugates_to_rotation():
    sys_ = models.fiber_flow(0.3, 0.5)
    conj = conjugate_fibers_to_rotations(sys_)
    pts = np.random.default_rng(3).random((400, 2))
    assert rotation_deviation(sys_, conj, pts) < 1e-6
    prof = fiber_rotation_profile(sys_)
    expected = 0.3 / models.fiber_flow_period(0.5)
    assert np.allclose(prof.alpha, expected, atol=1e-6)


def test_rigid_rotations_give_identity_conjugacy():
    sys_ = models.fiber_translation(0.3)
    conj = conjugate_fibers_to_rotations(sys_)
    pts = np.random.default_rng(4).random((100, 2))
    assert np.max(np.abs(conj(pts) - pts)) < 1e-12


def test_parabolic_conjugated_map_is_vertical_translation():
    sys_ = models.linear_parabolic(2)
    conj = conjugate_fibers_to_rotations(sys_)
    pts = np.random.default_rng(5).random((100, 2))
    img = conj(sys_.diffeo.forward(pts))
    shift = img[:, 0] - conj(pts)[:, 0] - 2 * pts[:, 1]
    assert np.max(np.abs(shift - np.round(shift))) < 1e-12


def test_conjugacy_then_profile_reproduces_alpha():
    sys_ = models.fiber_flow(0.3, 0.5)
    conj = conjugate_fibers_to_rotations(sys_)
    prof = fiber_rotation_profile(sys_)
    z = prof.z
    start = np.column_stack([z, np.zeros_like(z)])
    alpha = conj(sys_.diffeo.forward(start))[:, 1] - conj(start)[:, 1]
    assert np.max(np.abs(alpha % 1.0 - prof.alpha)) < 1e-6


def test_linearize_linear_model_exactly():
    sys_ = models.linear_parabolic(3)
    lin = linearize_parabolic(sys_)
    assert lin.k == 3 and lin.sup_distance < 1e-12


def test_linearize_monotone_twist_off_grid():
    sys_ = models.monotone_twist(2, 0.1)
    lin = linearize_parabolic(sys_, n_base=256, grid=256)
    assert lin.k == 2 and lin.sup_distance < 1e-4
    # a lattice that does not share nodes with the profile samples
    assert linearization_distance(sys_, lin, grid=250) < 1e-4
    assert linearization_distance(sys_, lin, grid=257) < 1e-4


def test_linearize_rejects_constant_profile():
    with pytest.raises(NotLocalDiffeo):
        linearize_parabolic(models.fiber_translation(0.3))


def test_profile_rejects_non_fibered_maps():
    with pytest.raises(NotFiberPreserving):
        fiber_rotation_profile(models.cat_map(), fiber_axis=0)
