"""Constructors for the model systems: toral, Heisenberg, Sol, suspensions, skew products."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .cocycle import Diffeo
from .errors import (
    LatticeNotPreserved,
    NotCommuting,
    NotPartiallyHyperbolic,
    NotUnimodular,
)
from .fields import Framing, VectorField, canonical_framing, constant_field
from .geometry import (
    HeisQuotient,
    MappingTorus,
    ModelManifold,
    ProductT2xS1,
    SolQuotient,
    Torus,
    heis_mul,
)


@dataclass(frozen=True)
class FramedSystem:
    """A manifold, a framing on its universal cover and a diffeomorphism.

    ``roles`` gives the framing indices of the (stable, central, unstable)
    fields when the framing is adapted; ``fiber_axis`` marks the circle
    coordinate of fibered systems and ``fiber_speed(pts)`` the length density
    of the preserved fiber field along it.
    """

    name: str
    manifold: ModelManifold
    framing: Framing
    diffeo: Diffeo
    roles: tuple | None = None
    fiber_axis: int | None = None
    fiber_speed: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    expected_M: np.ndarray | None = field(default=None, compare=False)
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def dimension(self) -> int:
        return self.manifold.dimension


def _int_matrix(A, name="A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or not np.all(A == np.round(A)):
        raise NotUnimodular(f"{name} must be a square integer matrix")
    if abs(abs(np.linalg.det(A)) - 1) > 1e-9:
        raise NotUnimodular(f"|det {name}| must be 1, got {np.linalg.det(A):.6g}")
    return A


def _const_jac(mat):
    mat = np.asarray(mat, dtype=float)
    return lambda p: np.broadcast_to(mat, (len(p),) + mat.shape).copy()


def eigen_split(A) -> tuple[float, np.ndarray, float, np.ndarray]:
    """``(lambda_s, e_s, lambda_u, e_u)`` of a hyperbolic 2x2 matrix, unit eigenvectors."""
    w, v = np.linalg.eig(np.asarray(A, dtype=float))
    if np.any(np.abs(w.imag) > 0):
        raise NotPartiallyHyperbolic("matrix has complex eigenvalues")
    w, v = w.real, v.real
    order = np.argsort(np.abs(w))
    ls, lu = w[order]
    if not (abs(ls) < 1 < abs(lu)):
        raise NotPartiallyHyperbolic(f"eigenvalues {w} are not hyperbolic")
    es, eu = v[:, order[0]], v[:, order[1]]
    es = es if es[np.argmax(np.abs(es))] > 0 else -es
    eu = eu if eu[np.argmax(np.abs(eu))] > 0 else -eu
    return float(ls), es, float(lu), eu


# -- tori ------------------------------------------------------------------------


def toral_affine(A, v=None) -> FramedSystem:
    """``p -> A p + v`` on the torus with the coordinate framing."""
    A = _int_matrix(A)
    n = A.shape[0]
    v = np.zeros(n) if v is None else np.asarray(v, dtype=float)
    Ainv = np.round(np.linalg.inv(A))
    phi = Diffeo(
        lambda p: p @ A.T + v,
        _const_jac(A),
        lambda p: (p - v) @ Ainv.T,
        Torus(n),
        "toral-affine",
    )
    return FramedSystem(
        "toral-affine", Torus(n), canonical_framing(n), phi,
        fiber_axis=0 if n == 2 and A[1, 0] == 0 and A[0, 0] == 1 and A[1, 1] == 1 else None,
        expected_M=A.copy(),
        metadata={"A": A.tolist(), "v": v.tolist()},
    )


def cat_map() -> FramedSystem:
    return toral_affine([[2, 1], [1, 1]])


def linear_parabolic(k: int) -> FramedSystem:
    """``(x, y) -> (x + k y, y)`` fibered over ``y`` with circle fibers along ``x``."""
    return toral_affine([[1, k], [0, 1]])


# companion matrix of t^3 - 8 t^2 + 9 t - 1: three real roots, none of modulus one
ANOSOV3_MATRIX = ((0, 0, 1), (1, 0, -9), (0, 1, 8))


def anosov3() -> FramedSystem:
    sys = toral_affine(ANOSOV3_MATRIX)
    return FramedSystem(
        "anosov3", sys.manifold, sys.framing, sys.diffeo,
        expected_M=sys.expected_M, metadata=sys.metadata,
    )


def perturbed_cat(eps: float = 0.1) -> FramedSystem:
    """Cat map after the shear ``(x, y) -> (x + eps sin 2 pi y, y)``; not autonomous."""
    A = np.array([[2.0, 1.0], [1.0, 1.0]])
    Ainv = np.array([[1.0, -1.0], [-1.0, 2.0]])

    def shear(p):
        return np.column_stack([p[:, 0] + eps * np.sin(2 * np.pi * p[:, 1]), p[:, 1]])

    def fwd(p):
        return shear(p) @ A.T

    def jac(p):
        s = np.broadcast_to(np.eye(2), (len(p), 2, 2)).copy()
        s[:, 0, 1] = 2 * np.pi * eps * np.cos(2 * np.pi * p[:, 1])
        return A @ s

    def inv(q):
        p = q @ Ainv.T
        return np.column_stack([p[:, 0] - eps * np.sin(2 * np.pi * p[:, 1]), p[:, 1]])

    phi = Diffeo(fwd, jac, inv, Torus(2), "perturbed-cat")
    return FramedSystem("perturbed-cat", Torus(2), canonical_framing(2), phi, metadata={"eps": eps})


# -- Heisenberg -------------------------------------------------------------------


def heis_correction(B, x, y):
    """Quadratic centre correction that makes ``(B, det B z + c)`` a homomorphism."""
    (p, q), (r, s) = np.asarray(B, dtype=float)
    return p * r * x * (x - 1) / 2 + q * s * y * (y - 1) / 2 + q * r * x * y


def heis_automorphism(B):
    """Forward map, inverse map and Jacobian of the automorphism induced by ``B``."""
    B = np.asarray(B, dtype=float)
    (p, q), (r, s) = B
    delta = float(np.round(np.linalg.det(B)))
    Binv = np.linalg.inv(B)

    def fwd(pts):
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        return np.column_stack([p * x + q * y, r * x + s * y, delta * z + heis_correction(B, x, y)])

    def inv(pts):
        xy = pts[:, :2] @ Binv.T
        z = (pts[:, 2] - heis_correction(B, xy[:, 0], xy[:, 1])) / delta
        return np.column_stack([xy, z])

    def jac(pts):
        x, y = pts[:, 0], pts[:, 1]
        j = np.zeros((len(pts), 3, 3))
        j[:, :2, :2] = B
        j[:, 2, 0] = p * r * (x - 0.5) + q * r * y
        j[:, 2, 1] = q * s * (y - 0.5) + q * r * x
        j[:, 2, 2] = delta
        return j

    return fwd, inv, jac, delta


def heis_homomorphism_residual(B, p_pts, q_pts) -> float:
    """Sup of ``|Phi(p q) - Phi(p) Phi(q)|`` over the given pairs."""
    fwd = heis_automorphism(B)[0]
    lhs = fwd(heis_mul(p_pts, q_pts))
    rhs = heis_mul(fwd(np.atleast_2d(p_pts)), fwd(np.atleast_2d(q_pts)))
    return float(np.max(np.abs(lhs - rhs)))


def heis_right_field(xi, descriptor="heis-right-invariant") -> VectorField:
    """Right-invariant field of the Lie algebra element ``xi`` in the (X, Y, Z) basis."""
    xi = np.asarray(xi, dtype=float)

    def func(p):
        out = np.broadcast_to(xi, p.shape).copy()
        out[:, 2] += p[:, 1] * xi[0]
        return out

    def jac(p):
        j = np.zeros((len(p), 3, 3))
        j[:, 2, 1] = xi[0]
        return j

    return VectorField(func, descriptor, jac)


def heis_right_framing() -> Framing:
    return Framing(
        (
            heis_right_field((1, 0, 0), "heis-right-invariant-X"),
            heis_right_field((0, 1, 0), "heis-right-invariant-Y"),
            heis_right_field((0, 0, 1), "heis-right-invariant-Z"),
        ),
        "heis-right-invariant",
    )


def heis_adjoint(g) -> np.ndarray:
    """Matrix of ``Ad(g)`` in the (X, Y, Z) basis."""
    a, b, _ = g
    return np.array([[1.0, 0, 0], [0, 1.0, 0], [-b, a, 1.0]])


def heis_left_translation(g, k: int = 1) -> Diffeo:
    g = np.asarray(g, dtype=float)

    def jac(p):
        j = np.broadcast_to(np.eye(3), (len(p), 3, 3)).copy()
        j[:, 2, 1] = g[0]
        return j

    ginv = np.array([-g[0], -g[1], -g[2] + g[0] * g[1]])
    return Diffeo(
        lambda p: heis_mul(g[None, :], p),
        jac,
        lambda p: heis_mul(ginv[None, :], p),
        HeisQuotient(k),
        "heis-left-translation",
    )


def _is_hyperbolic(B) -> bool:
    w = np.linalg.eigvals(np.asarray(B, dtype=float))
    return bool(np.all(np.abs(w.imag) < 1e-12) and np.all(np.abs(np.abs(w.real) - 1) > 1e-9))


def heis_lattice_check(B, k: int) -> float:
    """Distance of the images of the lattice generators from the lattice."""
    fwd = heis_automorphism(B)[0]
    gens = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0 / k]])
    red = HeisQuotient(k).reduce(fwd(gens))
    # a lattice point reduces to the origin (or to the far edge of the box by rounding)
    period = np.array([1.0, 1.0, 1.0 / k])
    dist = np.minimum(np.abs(red), np.abs(period - red))
    return float(dist.max())


def heis_system(B, k: int = 1, translation=None, strict: bool = True) -> FramedSystem:
    """Affine automorphism ``L_g o Phi_B`` of ``Heis / Gamma_k`` with an adapted framing.

    The framing is right-invariant, ordered (stable, centre, unstable) so the
    cocycle is diagonal. ``strict=False`` admits non-hyperbolic ``B`` and then
    keeps the plain (X, Y, Z) right-invariant framing.
    """
    B = _int_matrix(B, "B")
    k = int(k)
    hyperbolic = _is_hyperbolic(B)
    if strict and not hyperbolic:
        raise NotPartiallyHyperbolic(f"B = {B.tolist()} is not hyperbolic")
    if heis_lattice_check(B, k) > 1e-9:
        raise LatticeNotPreserved(f"B = {B.tolist()} does not preserve Gamma_{k}")
    fwd, inv, jac, delta = heis_automorphism(B)
    g = np.zeros(3) if translation is None else np.asarray(translation, dtype=float)
    Lg = heis_left_translation(g, k)
    aut = Diffeo(fwd, jac, inv, HeisQuotient(k), "heis-automorphism")
    phi = Lg.compose(aut)
    phi = Diffeo(phi.forward, phi.jac, phi.inverse, HeisQuotient(k), "heis-affine")

    M0 = heis_adjoint(g) @ jac(np.zeros((1, 3)))[0]
    if hyperbolic:
        ls, es, lu, eu = eigen_split(B)
        row = M0[2, :2]
        vs = np.array([es[0], es[1], row @ es / (ls - delta)])
        vu = np.array([eu[0], eu[1], row @ eu / (lu - delta)])
        P = np.column_stack([vs, [0.0, 0.0, 1.0], vu])
        framing = Framing(
            (
                heis_right_field(vs, "heis-adapted-stable"),
                heis_right_field((0, 0, 1), "heis-adapted-centre"),
                heis_right_field(vu, "heis-adapted-unstable"),
            ),
            "heis-adapted",
        )
        roles = (0, 1, 2)
        expected = np.diag([ls, delta, lu])
    else:
        P = np.eye(3)
        framing = heis_right_framing()
        roles = None
        expected = M0
    return FramedSystem(
        "heis", HeisQuotient(k), framing, phi, roles=roles, expected_M=expected,
        metadata={"B": B.tolist(), "k": k, "translation": g.tolist(), "algebra_basis": P.tolist()},
    )


# -- Sol ------------------------------------------------------------------------------


def sol_right_framing() -> Framing:
    def t_func(p):
        return np.column_stack([np.ones(len(p)), p[:, 1], -p[:, 2]])

    def t_jac(p):
        j = np.zeros((len(p), 3, 3))
        j[:, 1, 1] = 1.0
        j[:, 2, 2] = -1.0
        return j

    return Framing(
        (
            VectorField(t_func, "sol-right-invariant-T", t_jac),
            constant_field((0, 1, 0), "sol-right-invariant-X"),
            constant_field((0, 0, 1), "sol-right-invariant-Y"),
        ),
        "sol-right-invariant",
    )


def sol_system(A_monodromy) -> FramedSystem:
    """Left translation by ``(alpha, 0)`` on the Sol quotient with monodromy ``A``.

    Framing order is (Y, T, X): stable, centre, unstable.
    """
    manifold = SolQuotient(tuple(tuple(r) for r in np.asarray(A_monodromy).tolist()))
    alpha = manifold.alpha
    lam = float(np.exp(alpha))
    scale = np.array([1.0, lam, 1.0 / lam])

    phi = Diffeo(
        lambda p: np.column_stack([p[:, 0] + alpha, p[:, 1:] * scale[1:]]),
        _const_jac(np.diag(scale)),
        lambda p: np.column_stack([p[:, 0] - alpha, p[:, 1:] / scale[1:]]),
        manifold,
        "sol-left-translation",
    )
    T, X, Y = sol_right_framing().fields
    framing = Framing((Y, T, X), "sol-adapted")
    return FramedSystem(
        "sol", manifold, framing, phi, roles=(0, 1, 2), expected_M=np.diag([1.0 / lam, 1.0, lam]),
        metadata={"monodromy": [list(r) for r in manifold.monodromy], "alpha": alpha},
    )


# -- suspensions ------------------------------------------------------------------


def suspension(A, m: int = 1, w=(0.0, 0.0), twist: float = 0.0, n_check: int = 1000) -> FramedSystem:
    """``(x, t) -> (A x, t)`` on the mapping torus of ``f = A^m o T_w``.

    Framing ``(h(t) e_s, d/dt, g(t) e_u)`` with
    ``h(t) = |lambda_s|^(m t) exp(twist sin 2 pi t)`` and ``g`` likewise with the
    opposite twist, so the centre-stable bracket coefficient is
    ``m log|lambda_s| + 2 pi twist cos 2 pi t``; it is constant only when
    ``twist == 0``.
    """
    A = _int_matrix(A)
    w = np.asarray(w, dtype=float)
    ls, es, lu, eu = eigen_split(A)
    if m % 2 and (ls < 0 or lu < 0):
        raise ValueError("odd powers of a matrix with negative eigenvalues flip the framing")
    C = np.round(np.linalg.matrix_power(A, m))
    b = C @ w
    # commuting check on samples: f(A x) - A f(x) must be an integer vector
    rng = np.random.default_rng(12345)
    xs = rng.random((n_check, 2))
    diff = (xs @ A.T + w) @ C.T - (xs + w) @ C.T @ A.T
    if np.max(np.abs(diff - np.round(diff))) > 1e-8:
        raise NotCommuting("A^m o T_w does not commute with A on the torus")
    manifold = MappingTorus(tuple(map(tuple, C.astype(int).tolist())), tuple(b.tolist()))
    Ainv = np.round(np.linalg.inv(A))

    full = np.eye(3)
    full[:2, :2] = A
    phi = Diffeo(
        lambda p: np.column_stack([p[:, :2] @ A.T, p[:, 2]]),
        _const_jac(full),
        lambda p: np.column_stack([p[:, :2] @ Ainv.T, p[:, 2]]),
        manifold,
        "suspension",
    )
    cs = m * np.log(abs(ls))
    cu = m * np.log(abs(lu))
    two_pi = 2 * np.pi

    def scaled(vec, rate, sign):
        def amp(t):
            return np.exp(rate * t + sign * twist * np.sin(two_pi * t))

        def func(p):
            return np.column_stack([np.outer(amp(p[:, 2]), vec), np.zeros(len(p))])

        def jac(p):
            t = p[:, 2]
            d = amp(t) * (rate + sign * twist * two_pi * np.cos(two_pi * t))
            j = np.zeros((len(p), 3, 3))
            j[:, 0, 2] = d * vec[0]
            j[:, 1, 2] = d * vec[1]
            return j

        return func, jac

    fs, js = scaled(es, cs, 1.0)
    fu, ju = scaled(eu, cu, -1.0)
    framing = Framing(
        (
            VectorField(fs, "suspension-stable", js),
            constant_field((0, 0, 1), "suspension-flow"),
            VectorField(fu, "suspension-unstable", ju),
        ),
        "suspension-adapted",
    )
    return FramedSystem(
        "suspension", manifold, framing, phi, roles=(0, 1, 2), expected_M=np.diag([ls, 1.0, lu]),
        metadata={"A": A.tolist(), "m": m, "w": w.tolist(), "twist": twist},
    )


def suspension_shift_for(A, target=(1.0, 0.0)) -> np.ndarray:
    """``w`` with ``(A - I) w = target``; commuting translations of the suspension family."""
    A = np.asarray(A, dtype=float)
    return np.linalg.solve(A - np.eye(2), np.asarray(target, dtype=float))


# -- circle extensions ------------------------------------------------------------


@dataclass(frozen=True)
class FourierPhase:
    """``r(x, y) = sum a cos 2 pi (k.x) + b sin 2 pi (k.x)`` over integer ``k``.

    ``modes`` rows are ``(kx, ky, a, b)``; a row with ``k = 0`` adds ``a``.
    """

    modes: tuple = ()

    def __post_init__(self):
        rows = tuple(tuple(float(v) for v in row) for row in self.modes)
        for row in rows:
            if len(row) != 4 or row[0] != round(row[0]) or row[1] != round(row[1]):
                raise ValueError(f"bad Fourier mode {row}")
        object.__setattr__(self, "modes", rows)

    @property
    def is_constant(self) -> bool:
        return all((kx == 0 and ky == 0) or (a == 0 and b == 0) for kx, ky, a, b in self.modes)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for kx, ky, a, b in self.modes:
            ph = 2 * np.pi * (kx * x + ky * y)
            out = out + a * np.cos(ph) + b * np.sin(ph)
        return out

    def grad(self, x, y):
        x = np.asarray(x, dtype=float)
        gx = np.zeros(np.broadcast(x, y).shape)
        gy = np.zeros_like(gx)
        for kx, ky, a, b in self.modes:
            ph = 2 * np.pi * (kx * x + ky * y)
            d = 2 * np.pi * (-a * np.sin(ph) + b * np.cos(ph))
            gx = gx + kx * d
            gy = gy + ky * d
        return gx, gy

    def to_list(self):
        return [list(r) for r in self.modes]


def sine_phase(amplitude: float = 0.2) -> FourierPhase:
    return FourierPhase(((1, 0, 0.0, amplitude),))


SERIES_TERMS = 44


def horizontal_slopes(A, rho: FourierPhase, x, y, n_terms: int = SERIES_TERMS):
    """Slopes of the invariant unstable and stable lines over ``e_u`` and ``e_s``.

    ``sigma_u(x) = sum_{n>=1} lambda_u^-n dr(A^-n x) e_u``,
    ``sigma_s(x) = -sum_{n>=0} lambda_s^n dr(A^n x) e_s``.
    """
    A = np.asarray(A, dtype=float)
    Ainv = np.round(np.linalg.inv(A))
    ls, es, lu, eu = eigen_split(A)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    su = np.zeros(np.broadcast(x, y).shape)
    ss = np.zeros_like(su)
    bx, by = x % 1.0, y % 1.0
    fx, fy = bx, by
    weight = 1.0
    for _ in range(n_terms):
        bx, by = (Ainv[0, 0] * bx + Ainv[0, 1] * by) % 1.0, (Ainv[1, 0] * bx + Ainv[1, 1] * by) % 1.0
        weight /= lu
        gx, gy = rho.grad(bx, by)
        su = su + weight * (gx * eu[0] + gy * eu[1])
    weight = 1.0
    for _ in range(n_terms):
        gx, gy = rho.grad(fx, fy)
        ss = ss - weight * (gx * es[0] + gy * es[1])
        fx, fy = (A[0, 0] * fx + A[0, 1] * fy) % 1.0, (A[1, 0] * fx + A[1, 1] * fy) % 1.0
        weight *= ls
    return su, ss


def circle_extension(A, rho: FourierPhase, base_framing: str = "canonical") -> FramedSystem:
    """Skew product ``(x, theta) -> (A x, theta + r(x))`` on ``T^2 x S^1``.

    The framing is the vertical unit field followed by horizontal lifts of a
    base framing into the invariant plane field. ``base_framing="canonical"``
    lifts the coordinate fields, giving the block cocycle ``diag(1, A)``;
    ``"eigen"`` lifts ``(e_s, e_u)`` and gives ``diag(1, lambda_s, lambda_u)``.
    The horizontal lifts are only continuous, so they carry no Jacobian.
    """
    A = _int_matrix(A)
    if A.shape != (2, 2):
        raise ValueError("circle extensions are built over T^2")
    ls, es, lu, eu = eigen_split(A)
    Ainv = np.round(np.linalg.inv(A))

    def fwd(p):
        return np.column_stack([p[:, :2] @ A.T, p[:, 2] + rho(p[:, 0], p[:, 1])])

    def inv(q):
        b = q[:, :2] @ Ainv.T
        return np.column_stack([b, q[:, 2] - rho(b[:, 0], b[:, 1])])

    def jac(p):
        j = np.zeros((len(p), 3, 3))
        j[:, :2, :2] = A
        gx, gy = rho.grad(p[:, 0], p[:, 1])
        j[:, 2, 0], j[:, 2, 1], j[:, 2, 2] = gx, gy, 1.0
        return j

    manifold = ProductT2xS1()
    phi = Diffeo(fwd, jac, inv, manifold, "circle-extension")
    E = np.column_stack([es, eu])
    Einv = np.linalg.inv(E)

    def lift(vec):
        vec = np.asarray(vec, dtype=float)
        cs, cu = Einv @ vec

        def func(p):
            su, ss = horizontal_slopes(A, rho, p[:, 0], p[:, 1])
            return np.column_stack(
                [np.full(len(p), vec[0]), np.full(len(p), vec[1]), cs * ss + cu * su]
            )

        return VectorField(func, "horizontal-lift")

    vertical = constant_field((0, 0, 1), "vertical")
    if base_framing == "canonical":
        framing = Framing((vertical, lift((1, 0)), lift((0, 1))), "skew-canonical")
        expected = np.eye(3)
        expected[1:, 1:] = A
        roles = None
    elif base_framing == "eigen":
        framing = Framing((vertical, lift(es), lift(eu)), "skew-eigen")
        expected = np.diag([1.0, ls, lu])
        roles = (1, 0, 2)
    else:
        raise ValueError(f"unknown base framing {base_framing!r}")
    return FramedSystem(
        "circle-extension", manifold, framing, phi, roles=roles, fiber_axis=2,
        expected_M=expected,
        metadata={
            "A": A.tolist(), "rho": rho, "lambda_s": ls, "lambda_u": lu,
            "e_s": es.tolist(), "e_u": eu.tolist(),
        },
    )


# -- fibered 2D systems ---------------------------------------------------------


def fibered_twist(alpha, dalpha, d2alpha=None, name: str = "twist") -> FramedSystem:
    """``(x, y) -> (x + alpha(y), y)``: circle fibers along ``x`` over the base ``y``.

    The framing ``(alpha'(y) d/dx, d/dy)`` is preserved up to the parabolic
    cocycle ``[[1, 1], [0, 1]]``; it needs ``alpha' != 0``.
    """

    def fwd(p):
        return np.column_stack([p[:, 0] + alpha(p[:, 1]), p[:, 1]])

    def inv(p):
        return np.column_stack([p[:, 0] - alpha(p[:, 1]), p[:, 1]])

    def jac(p):
        j = np.broadcast_to(np.eye(2), (len(p), 2, 2)).copy()
        j[:, 0, 1] = dalpha(p[:, 1])
        return j

    def xf(p):
        return np.column_stack([dalpha(p[:, 1]), np.zeros(len(p))])

    xjac = None
    if d2alpha is not None:

        def xjac(p):
            j = np.zeros((len(p), 2, 2))
            j[:, 0, 1] = d2alpha(p[:, 1])
            return j

    framing = Framing((VectorField(xf, "fiber-field", xjac), constant_field((0, 1), "base-field")), name)
    phi = Diffeo(fwd, jac, inv, Torus(2), name)
    return FramedSystem(
        name, Torus(2), framing, phi, fiber_axis=0, expected_M=np.array([[1.0, 1.0], [0.0, 1.0]]),
    )


def monotone_twist(k: int = 2, eps: float = 0.1) -> FramedSystem:
    """Fibered twist with profile ``alpha(y) = k y + eps sin 2 pi y``."""
    tp = 2 * np.pi
    return fibered_twist(
        lambda y: k * y + eps * np.sin(tp * y),
        lambda y: k + eps * tp * np.cos(tp * y),
        lambda y: -eps * tp * tp * np.sin(tp * y),
        name="monotone-twist",
    )


def fiber_translation(shift: float) -> FramedSystem:
    """``(x, y) -> (x + shift, y)``: every fiber rotates by the same amount."""
    sys = toral_affine(np.eye(2), (shift, 0.0))
    return FramedSystem(
        "fiber-translation", sys.manifold, sys.framing, sys.diffeo, fiber_axis=0,
        expected_M=np.eye(2), metadata={"shift": shift},
    )


def fiber_flow(c: float = 0.3, amp: float = 0.5, rtol: float = 1e-12) -> FramedSystem:
    """Time-``c`` flow of ``g(z2) d/dz2`` with ``g = 1 + amp cos 2 pi z2`` on each fiber.

    Fibers are the ``z2`` circles over the base coordinate ``z1``; the field
    ``g d/dz2`` is preserved, so each fiber map is conjugate to a rotation by
    ``c / T`` with ``T = int_0^1 dz / g``.
    """
    tp = 2 * np.pi

    def g(z):
        return 1.0 + amp * np.cos(tp * z)

    def flow(z, time):
        z = np.asarray(z, dtype=float)
        if z.size == 0:
            return z.copy()
        sol = solve_ivp(
            lambda _, u: g(u), (0.0, time), z.ravel(), method="DOP853",
            rtol=rtol, atol=1e-14, vectorized=True,
        )
        return sol.y[:, -1].reshape(z.shape)

    def fwd(p):
        return np.column_stack([p[:, 0], flow(p[:, 1], c)])

    def inv(p):
        return np.column_stack([p[:, 0], flow(p[:, 1], -c)])

    def jac(p):
        j = np.zeros((len(p), 2, 2))
        j[:, 0, 0] = 1.0
        j[:, 1, 1] = g(flow(p[:, 1], c)) / g(p[:, 1])
        return j

    def fiber_field(p):
        return np.column_stack([np.zeros(len(p)), g(p[:, 1])])

    framing = Framing((constant_field((1, 0), "base-field"), VectorField(fiber_field, "fiber-field")), "fiber-flow")
    phi = Diffeo(fwd, jac, inv, Torus(2), "fiber-flow")
    return FramedSystem(
        "fiber-flow", Torus(2), framing, phi, fiber_axis=1,
        fiber_speed=lambda p: g(p[:, 1]), expected_M=np.eye(2),
        metadata={"c": c, "amp": amp},
    )


def fiber_flow_period(amp: float = 0.5) -> float:
    """``int_0^1 dz / (1 + amp cos 2 pi z) = 1 / sqrt(1 - amp^2)``."""
    return 1.0 / np.sqrt(1.0 - amp * amp)


__all__ = [
    "ANOSOV3_MATRIX",
    "FourierPhase",
    "FramedSystem",
    "anosov3",
    "cat_map",
    "circle_extension",
    "eigen_split",
    "fiber_flow",
    "fiber_flow_period",
    "fiber_translation",
    "fibered_twist",
    "heis_adjoint",
    "heis_automorphism",
    "heis_correction",
    "heis_homomorphism_residual",
    "heis_lattice_check",
    "heis_left_translation",
    "heis_right_framing",
    "heis_system",
    "horizontal_slopes",
    "linear_parabolic",
    "monotone_twist",
    "perturbed_cat",
    "sine_phase",
    "sol_right_framing",
    "sol_system",
    "suspension",
    "suspension_shift_for",
    "toral_affine",
]
