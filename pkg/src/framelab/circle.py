"""Rotation numbers of circle maps and fiberwise rotation profiles of fibered maps."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import (
    NotADiffeomorphism,
    NotAutonomous,
    NotFiberPreserving,
    NotLocalDiffeo,
    UnsupportedDimension,
)
from .models import FramedSystem

BASE_PANELS = 2**12
MAX_PANELS = 2**18
QUAD_RTOL = 1e-8


@dataclass(frozen=True)
class CircleMapLift:
    """Lift ``F`` of a circle map with ``F(x + 1) = F(x) + degree``."""

    func: Callable[[np.ndarray], np.ndarray]
    degree: int = 1
    deriv: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    def derivative(self, x, h: float = 1e-5):
        x = np.asarray(x, dtype=float)
        if self.deriv is not None:
            return self.deriv(x)
        return (self.func(x + h) - self.func(x - h)) / (2 * h)

    def periodicity_residual(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.max(np.abs(self(x + 1) - self(x) - self.degree)))


def rigid_rotation(alpha: float) -> CircleMapLift:
    return CircleMapLift(lambda x: x + alpha, 1, lambda x: np.ones_like(x))


def _check_monotone(lift: CircleMapLift, n: int = 4096):
    x = np.arange(n + 1) / n
    if np.any(np.diff(lift(x)) <= 0):
        raise NotADiffeomorphism("lift is not strictly increasing")


def rotation_number(lift: CircleMapLift, n_iter: int = 10_000) -> float:
    """Average displacement along the orbit of 0, in ``[0, 1)``.

    Increments over the second half of the orbit are averaged with the smooth
    bump ``exp(-1 / (t (1 - t)))``, which converges much faster than the plain
    mean for maps conjugate to an irrational rotation.
    """
    if n_iter < 1000:
        raise ValueError(f"n_iter must be >= 1000, got {n_iter}")
    if lift.degree != 1:
        raise NotADiffeomorphism(f"degree {lift.degree} lift is not a circle diffeomorphism")
    _check_monotone(lift)
    x = 0.0
    steps = np.empty(n_iter)
    for i in range(n_iter):
        y = float(np.ravel(lift(x))[0])
        steps[i] = y - x
        x = y - np.floor(y)
    tail = steps[n_iter // 2:]
    t = (np.arange(len(tail)) + 0.5) / len(tail)
    w = np.exp(-1.0 / (t * (1.0 - t)))
    rho = float(np.sum(w * tail) / np.sum(w))
    return rho - np.floor(rho) if rho - np.floor(rho) < 1.0 else 0.0


def _inverse_speed_integral(inv_speed, upper, panels):
    """``int_0^upper inv_speed(s) ds`` per row; ``inv_speed`` maps ``(m, P)`` to ``(m, P)``."""
    u = np.linspace(0.0, 1.0, panels + 1)
    theta = upper[:, None] * u[None, :]
    return upper * simpson(inv_speed(theta), dx=1.0 / panels, axis=1)


def normalized_arclengths(inv_speed, upper):
    """``l / d`` for each row, doubling the panel count until converged."""
    upper = np.asarray(upper, dtype=float)
    ones = np.ones_like(upper)
    panels = BASE_PANELS

    def both(p):
        return _inverse_speed_integral(inv_speed, upper, p), _inverse_speed_integral(inv_speed, ones, p)

    l_old, d_old = both(panels)
    while panels < MAX_PANELS:
        panels *= 2
        l_new, d_new = both(panels)
        if np.allclose(l_new, l_old, rtol=QUAD_RTOL, atol=1e-14) and np.allclose(d_new, d_old, rtol=QUAD_RTOL, atol=0):
            return l_new / d_new
        l_old, d_old = l_new, d_new
    return l_old / d_old


def arclength_rotation(
    lift: CircleMapLift, speed: Callable[[np.ndarray], np.ndarray] | None = None, tol: float = 1e-6
) -> float:
    """Rotation number as the framing length from ``0`` to ``F(0)`` over the total length.

    ``speed(theta)`` is the length density of the preserved field ``g d/dtheta``
    (so the field's metric gives ``ds / g``). The map must preserve the field:
    ``F'(x) g(x) = g(F(x))``.
    """
    if speed is None:
        speed = np.ones_like
    x = np.linspace(0.0, 1.0, 257)[:-1]
    lhs = lift.derivative(x) * speed(x)
    rhs = speed(lift(x))
    if np.max(np.abs(lhs - rhs)) > tol * max(1.0, float(np.max(np.abs(rhs)))):
        raise NotAutonomous("the circle map does not preserve the framing field")
    val = float(normalized_arclengths(lambda th: 1.0 / speed(th), np.ravel(lift(0.0))[:1])[0])
    val -= np.floor(val)
    return 0.0 if val >= 1.0 else val


# -- fibered systems on T^2 -----------------------------------------------------


@dataclass
class RotationProfile:
    z: np.ndarray
    alpha: np.ndarray
    degree_k: int
    unwrapped: np.ndarray
    fiber_axis: int

    def to_dict(self) -> dict:
        return {
            "degree": int(self.degree_k),
            "fiber_axis": int(self.fiber_axis),
            "samples": len(self.z),
            "z": self.z.tolist(),
            "alpha": self.alpha.tolist(),
        }


def _axes(sys: FramedSystem, fiber_axis):
    if sys.dimension != 2:
        raise UnsupportedDimension("fiber profiles are computed for fibered maps of T^2")
    fa = sys.fiber_axis if fiber_axis is None else fiber_axis
    if fa not in (0, 1):
        raise ValueError("the system has no fiber axis")
    return fa, 1 - fa


def _points(fa, base, fiber):
    base = np.asarray(base, dtype=float)
    fiber = np.asarray(fiber, dtype=float)
    base, fiber = np.broadcast_arrays(base, fiber)
    out = np.empty(base.shape + (2,))
    out[..., fa] = fiber
    out[..., 1 - fa] = base
    return out


def _speed_fn(sys: FramedSystem):
    if sys.fiber_speed is None:
        return lambda pts: np.ones(pts.shape[:-1])
    return lambda pts: sys.fiber_speed(pts.reshape(-1, 2)).reshape(pts.shape[:-1])


def check_fiber_preserving(sys: FramedSystem, fiber_axis=None, n: int = 512, seed: int = 0, tol: float = 1e-9):
    fa, ba = _axes(sys, fiber_axis)
    pts = np.random.default_rng(seed).random((n, 2))
    img = sys.diffeo.forward(pts)
    moved = img[:, ba] - pts[:, ba]
    if np.max(np.abs(moved - np.round(moved))) > tol:
        raise NotFiberPreserving("the map moves points across fibers")


def _check_fiber_field(sys, fa, base, tol=1e-6):
    """``dF/dz2 * g(z2) = g(F(z2))`` on every sampled fiber."""
    speed = _speed_fn(sys)
    th = (np.arange(32) + 0.5) / 32
    pts = _points(fa, base[:, None], th[None, :]).reshape(-1, 2)
    img = sys.diffeo.forward(pts)
    dfib = sys.diffeo.jacobian(pts)[:, fa, fa]
    lhs = dfib * speed(pts[None])[0]
    rhs = speed(img[None])[0]
    if np.max(np.abs(lhs - rhs)) > tol * max(1.0, float(np.max(np.abs(rhs)))):
        raise NotAutonomous("fiber maps do not preserve the fiber field")


def fiber_rotation_profile(
    sys: FramedSystem, fiber_axis: int | None = None, n_base: int = 256, max_base: int = 2**14
) -> RotationProfile:
    """Rotation number of each fiber map, sampled over the base, and its winding degree."""
    fa, ba = _axes(sys, fiber_axis)
    check_fiber_preserving(sys, fa)
    speed = _speed_fn(sys)
    while True:
        z = np.arange(n_base) / n_base
        _check_fiber_field(sys, fa, z)
        start = _points(fa, z, np.zeros_like(z))
        upper = sys.diffeo.forward(start)[:, fa]

        def inv_speed(theta):
            return 1.0 / speed(_points(fa, z[:, None], theta))

        alpha = normalized_arclengths(inv_speed, upper)
        alpha = alpha - np.floor(alpha)
        alpha[alpha >= 1.0] = 0.0
        inc = np.diff(np.append(alpha, alpha[0]))
        inc = inc - np.round(inc)
        if np.max(np.abs(inc)) < 0.45 or n_base >= max_base:
            break
        n_base *= 2
    unwrapped = alpha[0] + np.concatenate([[0.0], np.cumsum(inc[:-1])])
    degree = int(np.round(np.sum(inc)))
    return RotationProfile(z, alpha, degree, unwrapped, fa)


@dataclass
class FiberConjugacy:
    """``(z1, z2) -> (z1, l(z1, z2) / d(z1))`` with ``l`` the fiber-field length from 0."""

    sys: FramedSystem
    fiber_axis: int
    n_nodes: int = 256
    chunk: int = 4096

    def normalized_length(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        fa, ba = self.fiber_axis, 1 - self.fiber_axis
        speed = _speed_fn(self.sys)
        m = self.n_nodes
        nodes = np.arange(m) / m
        k = np.arange(1, m // 2 + 1)
        out = np.empty(len(pts))
        for lo in range(0, len(pts), self.chunk):
            p = pts[lo:lo + self.chunk]
            inv = 1.0 / speed(_points(fa, p[:, ba][:, None], nodes[None, :]))
            c = np.fft.rfft(inv, axis=1) / m
            z2 = p[:, fa][:, None]
            terms = c[:, 1:] * (np.exp(2j * np.pi * k * z2) - 1.0) / (2j * np.pi * k)
            weights = np.full(len(k), 2.0)
            if m % 2 == 0:
                weights[-1] = 1.0
            length = c[:, 0].real * z2[:, 0] + np.sum(weights * terms.real, axis=1)
            out[lo:lo + self.chunk] = length / c[:, 0].real
        return out

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = pts.copy()
        out[:, self.fiber_axis] = self.normalized_length(pts)
        return out


def conjugate_fibers_to_rotations(sys: FramedSystem, fiber_axis: int | None = None, n_nodes: int = 256) -> FiberConjugacy:
    fa, _ = _axes(sys, fiber_axis)
    check_fiber_preserving(sys, fa)
    return FiberConjugacy(sys, fa, n_nodes)


def _wrap(d):
    return d - np.round(d)


def rotation_deviation(sys: FramedSystem, conj: FiberConjugacy, samples) -> float:
    """Sup distance of the conjugated fiber maps from rigid rotations."""
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    fa, ba = conj.fiber_axis, 1 - conj.fiber_axis
    start = _points(fa, pts[:, ba], np.zeros(len(pts)))
    alpha = conj.normalized_length(sys.diffeo.forward(start))
    moved = conj.normalized_length(sys.diffeo.forward(pts)) - conj.normalized_length(pts)
    return float(np.max(np.abs(_wrap(moved - alpha))))


@dataclass
class ParabolicLinearization:
    k: int
    z_star: float
    conjugacy: FiberConjugacy
    base_map: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    sup_distance: float = float("nan")

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        fa, ba = self.conjugacy.fiber_axis, 1 - self.conjugacy.fiber_axis
        out = np.empty_like(pts)
        out[:, fa] = self.conjugacy.normalized_length(pts)
        out[:, ba] = self.base_map(pts[:, ba])
        return out

    def to_dict(self) -> dict:
        return {"k": self.k, "z_star": self.z_star, "sup_distance": self.sup_distance}


def linearize_parabolic(
    sys: FramedSystem,
    fiber_axis: int | None = None,
    n_base: int = 256,
    grid: int = 256,
    min_derivative: float = 1e-6,
) -> ParabolicLinearization:
    """Coordinates in which the fibered map becomes the linear parabolic ``A_k``.

    The new base coordinate is ``(alpha~(z) - alpha~(z*)) / k`` with ``alpha~`` the
    lifted profile and ``z*`` a point where the fiber rotation vanishes; the new
    fiber coordinate is the normalized fiber length.
    """
    prof = fiber_rotation_profile(sys, fiber_axis, n_base)
    k = prof.degree_k
    if k == 0:
        raise NotLocalDiffeo("rotation profile has degree 0, so it is not a covering")
    z = prof.z
    periodic = prof.unwrapped - k * z
    spline = CubicSpline(np.append(z, 1.0), np.append(periodic, periodic[0]), bc_type="periodic")
    dalpha = k + spline(z, 1)
    if np.min(np.abs(dalpha)) <= min_derivative or np.any(np.sign(dalpha) != np.sign(k)):
        raise NotLocalDiffeo(f"profile derivative reaches {np.min(np.abs(dalpha)):.3e}")

    def lifted(u):
        u = np.asarray(u, dtype=float)
        return k * u + spline(np.mod(u, 1.0))

    a0 = float(lifted(0.0))
    target = np.ceil(a0) if k > 0 else np.floor(a0)
    if abs(a0 - np.round(a0)) < 1e-14:
        z_star, target = 0.0, np.round(a0)
    else:
        z_star = float(brentq(lambda u: float(lifted(u)) - target, 0.0, 1.0, xtol=1e-15))

    def base_map(u):
        return (lifted(u) - target) / k

    conj = FiberConjugacy(sys, prof.fiber_axis)
    lin = ParabolicLinearization(k, z_star, conj, base_map)
    lin.sup_distance = linearization_distance(sys, lin, grid)
    return lin


def linearization_distance(sys: FramedSystem, lin: ParabolicLinearization, grid: int = 256) -> float:
    """Sup torus distance between ``psi o phi`` and ``A_k o psi`` on a ``grid x grid`` lattice."""
    u = np.arange(grid) / grid
    pts = np.stack(np.meshgrid(u, u, indexing="ij"), axis=-1).reshape(-1, 2)
    fa, ba = lin.conjugacy.fiber_axis, 1 - lin.conjugacy.fiber_axis
    lhs = lin(sys.diffeo.forward(pts))
    rhs = lin(pts)
    rhs[:, fa] += lin.k * rhs[:, ba]
    return float(np.max(np.abs(_wrap(lhs - rhs))))
