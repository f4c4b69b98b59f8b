"""Model manifolds: quotients of a universal cover by an explicit deck group.

Every manifold works on arrays of chart points of shape ``(N, n)`` in
universal-cover coordinates. Deck transforms act on the right, matching the
convention that points of ``G/Gamma`` are classes ``x Gamma``.

Conventions (ours, not forced by anything upstream):

* Heisenberg law ``(x,y,z)(x',y',z') = (x+x', y+y', z+z'+x y')`` and the
  lattice ``Gamma_k = {(m, n, l/k)}``; canonical box ``[0,1)^2 x [0,1/k)``.
* Sol law ``(t,v)(t',v') = (t+t', v + diag(e^t, e^-t) v')``; the lattice is
  ``{(n alpha, L m)}`` with ``L`` the inverse of the (sup-normalised)
  eigenvector matrix of the monodromy, so ``diag(e^alpha, e^-alpha) L = L A``.
  The fiber over ``t`` is reduced in the twisted box ``D(t) L [0,1)^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import DegenerateFraming, NotHyperbolicMonodromy, UnsupportedManifold

DET_FLOOR = 1e-8


def _wrap_unit(a):
    """Fractional part in [0, 1), robust to ``-tiny - floor(-tiny) == 1.0``."""
    r = a - np.floor(a)
    return np.where(r >= 1.0, 0.0, r)


@dataclass(frozen=True)
class DeckTransform:
    name: str
    apply: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]


class ModelManifold:
    """Base class; subclasses are frozen dataclasses."""

    kind = "abstract"
    dimension = 0

    def reduce(self, points: np.ndarray) -> np.ndarray:
        return self.reduce_with_jacobian(points)[0]

    def reduce_with_jacobian(self, points):
        raise UnsupportedManifold(f"no reduction for manifold kind {self.kind!r}")

    def generators(self) -> list[DeckTransform]:
        raise UnsupportedManifold(f"no deck group for manifold kind {self.kind!r}")

    def in_box(self, points: np.ndarray) -> np.ndarray:
        raise UnsupportedManifold(self.kind)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise UnsupportedManifold(self.kind)

    def to_dict(self) -> dict:
        raise UnsupportedManifold(self.kind)


def _eye_stack(n_pts, dim):
    return np.broadcast_to(np.eye(dim), (n_pts, dim, dim)).copy()


@dataclass(frozen=True)
class Torus(ModelManifold):
    n: int = 2

    kind = "torus"

    @property
    def dimension(self):
        return self.n

    def reduce_with_jacobian(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return _wrap_unit(points), _eye_stack(len(points), self.n)

    def generators(self):
        gens = []
        for i in range(self.n):
            e = np.zeros(self.n)
            e[i] = 1.0
            gens.append(
                DeckTransform(
                    f"e{i}",
                    lambda p, e=e: p + e,
                    lambda p, e=e: p - e,
                    lambda p: _eye_stack(len(np.atleast_2d(p)), self.n),
                )
            )
        return gens

    def in_box(self, points):
        points = np.atleast_2d(points)
        return np.all((points >= 0) & (points < 1), axis=1)

    def sample(self, rng, n):
        return rng.random((n, self.n))

    def to_dict(self):
        return {"kind": "torus", "n": self.n}


@dataclass(frozen=True)
class ProductT2xS1(Torus):
    """T^2 x S^1 with coordinates (x, y, theta); theta is the fiber."""

    n: int = 3

    kind = "product-t2xs1"

    def to_dict(self):
        return {"kind": "product-t2xs1"}


# -- Heisenberg -------------------------------------------------------------------


def heis_mul(p, q):
    p = np.atleast_2d(p)
    q = np.atleast_2d(q)
    return np.stack(
        [p[:, 0] + q[:, 0], p[:, 1] + q[:, 1], p[:, 2] + q[:, 2] + p[:, 0] * q[:, 1]], axis=1
    )


def heis_inv(p):
    p = np.atleast_2d(p)
    return np.stack([-p[:, 0], -p[:, 1], -p[:, 2] + p[:, 0] * p[:, 1]], axis=1)


@dataclass(frozen=True)
class HeisQuotient(ModelManifold):
    k: int = 1

    kind = "heis"
    dimension = 3

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"lattice parameter k must be a positive integer, got {self.k}")

    def _right(self, gamma):
        gamma = np.asarray(gamma, dtype=float)

        def apply(p):
            return heis_mul(p, gamma[None, :])

        def inverse(p):
            return heis_mul(p, heis_inv(gamma[None, :]))

        def jac(p):
            p = np.atleast_2d(p)
            j = _eye_stack(len(p), 3)
            j[:, 2, 0] = gamma[1]
            return j

        return apply, inverse, jac

    def generators(self):
        gens = []
        for name, g in (("a", (1, 0, 0)), ("b", (0, 1, 0)), ("c", (0, 0, 1.0 / self.k))):
            gens.append(DeckTransform(name, *self._right(g)))
        return gens

    def reduce_with_jacobian(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        m = -np.floor(p[:, 0])
        n = -np.floor(p[:, 1])
        x = _wrap_unit(p[:, 0] + m)
        y = _wrap_unit(p[:, 1] + n)
        z1 = p[:, 2] + p[:, 0] * n
        z = _wrap_unit(z1 * self.k) / self.k
        jac = _eye_stack(len(p), 3)
        jac[:, 2, 0] = n
        return np.stack([x, y, z], axis=1), jac

    def in_box(self, points):
        p = np.atleast_2d(points)
        ok = np.all((p[:, :2] >= 0) & (p[:, :2] < 1), axis=1)
        return ok & (p[:, 2] >= 0) & (p[:, 2] < 1.0 / self.k)

    def sample(self, rng, n):
        pts = rng.random((n, 3))
        pts[:, 2] /= self.k
        return pts

    def to_dict(self):
        return {"kind": "heis", "k": int(self.k)}


# -- Sol --------------------------------------------------------------------------


def sol_mul(p, q):
    p = np.atleast_2d(p)
    q = np.atleast_2d(q)
    t = p[:, 0]
    return np.stack(
        [t + q[:, 0], p[:, 1] + np.exp(t) * q[:, 1], p[:, 2] + np.exp(-t) * q[:, 2]], axis=1
    )


def sol_inv(p):
    p = np.atleast_2d(p)
    t = p[:, 0]
    return np.stack([-t, -np.exp(-t) * p[:, 1], -np.exp(t) * p[:, 2]], axis=1)


@dataclass(frozen=True)
class SolQuotient(ModelManifold):
    monodromy: tuple = ((2, 1), (1, 1))

    kind = "sol"
    dimension = 3

    def __post_init__(self):
        a = np.asarray(self.monodromy)
        if a.shape != (2, 2) or not np.all(a == np.round(a)):
            raise NotHyperbolicMonodromy("monodromy must be a 2x2 integer matrix")
        if round(np.linalg.det(a)) != 1:
            raise NotHyperbolicMonodromy("monodromy must lie in SL(2,Z)")
        if abs(np.trace(a)) <= 2:
            raise NotHyperbolicMonodromy(f"|trace| = {abs(np.trace(a))} <= 2")
        object.__setattr__(self, "monodromy", tuple(tuple(int(v) for v in row) for row in a))

    @cached_property
    def _eigen(self):
        a = np.asarray(self.monodromy, dtype=float)
        sign = 1.0 if np.trace(a) > 0 else -1.0
        w, v = np.linalg.eig(sign * a)
        order = np.argsort(-w.real)
        w = w.real[order]
        v = v.real[:, order]
        for j in range(2):
            col = v[:, j]
            col = col / np.max(np.abs(col))
            if col[np.argmax(np.abs(col))] < 0:
                col = -col
            v[:, j] = col
        return w, v, sign

    @property
    def alpha(self) -> float:
        return float(np.log(self._eigen[0][0]))

    @property
    def eigenbasis(self) -> np.ndarray:
        """Columns are the unstable/stable eigenvectors of the monodromy."""
        return self._eigen[1].copy()

    @property
    def lattice_basis(self) -> np.ndarray:
        """Columns generate the Z^2 factor of the lattice inside R^2."""
        return np.linalg.inv(self._eigen[1])

    @property
    def monodromy_sign(self) -> float:
        return self._eigen[2]

    def _right(self, gamma):
        gamma = np.asarray(gamma, dtype=float)

        def apply(p):
            return sol_mul(p, gamma[None, :])

        def inverse(p):
            return sol_mul(p, sol_inv(gamma[None, :]))

        def jac(p):
            p = np.atleast_2d(p)
            j = _eye_stack(len(p), 3)
            j[:, 1, 0] = np.exp(p[:, 0]) * gamma[1]
            j[:, 2, 0] = -np.exp(-p[:, 0]) * gamma[2]
            return j

        return apply, inverse, jac

    def generators(self):
        lb = self.lattice_basis
        return [
            DeckTransform("h", *self._right((self.alpha, 0.0, 0.0))),
            DeckTransform("u", *self._right((0.0, lb[0, 0], lb[1, 0]))),
            DeckTransform("v", *self._right((0.0, lb[0, 1], lb[1, 1]))),
        ]

    def reduce_with_jacobian(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        a = self.alpha
        t = p[:, 0] - np.floor(p[:, 0] / a) * a
        t = np.where(t >= a, 0.0, t)
        t = np.where(t < 0, 0.0, t)
        e = self._eigen[1]
        lb = self.lattice_basis
        scaled = np.stack([np.exp(-t) * p[:, 1], np.exp(t) * p[:, 2]], axis=1)
        u = scaled @ e.T
        shift = np.floor(u)
        u = _wrap_unit(u - shift)
        back = u @ lb.T
        v = np.stack([np.exp(t) * back[:, 0], np.exp(-t) * back[:, 1]], axis=1)
        w = -(shift @ lb.T)
        jac = _eye_stack(len(p), 3)
        jac[:, 1, 0] = np.exp(t) * w[:, 0]
        jac[:, 2, 0] = -np.exp(-t) * w[:, 1]
        return np.column_stack([t, v]), jac

    def in_box(self, points):
        p = np.atleast_2d(points)
        t = p[:, 0]
        scaled = np.stack([np.exp(-t) * p[:, 1], np.exp(t) * p[:, 2]], axis=1)
        u = scaled @ self._eigen[1].T
        return (t >= 0) & (t < self.alpha) & np.all((u >= 0) & (u < 1), axis=1)

    def sample(self, rng, n):
        t = rng.random(n) * self.alpha
        back = rng.random((n, 2)) @ self.lattice_basis.T
        return np.column_stack([t, np.exp(t) * back[:, 0], np.exp(-t) * back[:, 1]])

    def to_dict(self):
        return {"kind": "sol", "monodromy": [list(r) for r in self.monodromy]}


# -- mapping torus ----------------------------------------------------------------


@dataclass(frozen=True)
class MappingTorus(ModelManifold):
    """T^2 x [0,1] with (x, 0) glued to (C x + b, 1); coordinates (x1, x2, t)."""

    gluing_matrix: tuple = ((1, 0), (0, 1))
    gluing_shift: tuple = (0.0, 0.0)

    kind = "mapping-torus"
    dimension = 3

    def __post_init__(self):
        c = np.asarray(self.gluing_matrix)
        if c.shape != (2, 2) or not np.all(c == np.round(c)) or abs(round(np.linalg.det(c))) != 1:
            raise ValueError("gluing matrix must lie in GL(2,Z)")
        object.__setattr__(self, "gluing_matrix", tuple(tuple(int(v) for v in r) for r in c))
        object.__setattr__(self, "gluing_shift", tuple(float(v) for v in self.gluing_shift))

    @cached_property
    def _c(self):
        c = np.asarray(self.gluing_matrix, dtype=float)
        return c, np.linalg.inv(c), np.asarray(self.gluing_shift)

    def _tau(self, p):
        c, _, b = self._c
        p = np.atleast_2d(p)
        return np.column_stack([p[:, :2] @ c.T + b, p[:, 2] + 1.0])

    def _tau_inv(self, p):
        _, ci, b = self._c
        p = np.atleast_2d(p)
        return np.column_stack([(p[:, :2] - b) @ ci.T, p[:, 2] - 1.0])

    def _block(self, mat, n_pts):
        j = _eye_stack(n_pts, 3)
        j[:, :2, :2] = mat
        return j

    def generators(self):
        gens = []
        for i in range(2):
            e = np.zeros(3)
            e[i] = 1.0
            gens.append(
                DeckTransform(
                    f"e{i}", lambda p, e=e: p + e, lambda p, e=e: p - e,
                    lambda p: _eye_stack(len(np.atleast_2d(p)), 3),
                )
            )
        gens.append(
            DeckTransform(
                "tau", self._tau, self._tau_inv,
                lambda p: self._block(self._c[0], len(np.atleast_2d(p))),
            )
        )
        return gens

    def reduce_with_jacobian(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float)).copy()
        c, ci, _ = self._c
        n = np.floor(p[:, 2]).astype(np.int64)
        lin = _eye_stack(len(p), 2)
        for step in range(int(np.max(np.abs(n), initial=0))):
            up = n > step
            down = n < -step
            if np.any(up):
                p[up] = self._tau_inv(p[up])
                p[up, :2] = _wrap_unit(p[up, :2])
                lin[up] = ci @ lin[up]
            if np.any(down):
                p[down] = self._tau(p[down])
                p[down, :2] = _wrap_unit(p[down, :2])
                lin[down] = c @ lin[down]
        p[:, :2] = _wrap_unit(p[:, :2])
        p[:, 2] = _wrap_unit(p[:, 2])
        jac = _eye_stack(len(p), 3)
        jac[:, :2, :2] = lin
        return p, jac

    def in_box(self, points):
        p = np.atleast_2d(points)
        return np.all((p >= 0) & (p < 1), axis=1)

    def sample(self, rng, n):
        return rng.random((n, 3))

    def to_dict(self):
        return {
            "kind": "mapping-torus",
            "gluing_matrix": [list(r) for r in self.gluing_matrix],
            "gluing_shift": list(self.gluing_shift),
        }


def manifold_from_dict(d: dict) -> ModelManifold:
    kind = d.get("kind")
    if kind == "torus":
        return Torus(int(d.get("n", 2)))
    if kind == "product-t2xs1":
        return ProductT2xS1()
    if kind == "heis":
        return HeisQuotient(int(d["k"]))
    if kind == "sol":
        return SolQuotient(tuple(tuple(r) for r in d["monodromy"]))
    if kind == "mapping-torus":
        return MappingTorus(
            tuple(tuple(r) for r in d["gluing_matrix"]), tuple(d.get("gluing_shift", (0, 0)))
        )
    raise UnsupportedManifold(f"unknown manifold kind {kind!r}")


# -- chart points -----------------------------------------------------------------


@dataclass(frozen=True)
class ChartPoint:
    coords: tuple
    manifold: ModelManifold = field(compare=False)

    def __post_init__(self):
        coords = tuple(float(c) for c in np.ravel(self.coords))
        object.__setattr__(self, "coords", coords)
        if len(coords) != self.manifold.dimension:
            raise ValueError(
                f"{len(coords)} coordinates for a {self.manifold.dimension}-manifold"
            )

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords)


def _as_array(p):
    if isinstance(p, ChartPoint):
        return p.array[None, :]
    return np.atleast_2d(np.asarray(p, dtype=float))


def reduce_to_fundamental_domain(p: ChartPoint) -> ChartPoint:
    """Deck-equivalent representative of ``p`` inside the canonical box."""
    if not isinstance(p.manifold, ModelManifold):
        raise UnsupportedManifold(type(p.manifold).__name__)
    return ChartPoint(p.manifold.reduce(p.array[None, :])[0], p.manifold)


def deck_equivalent(p: ChartPoint, q: ChartPoint, word_radius: int = 3, atol: float = 1e-9) -> bool:
    """True iff a deck word of length <= ``word_radius`` sends ``p`` to ``q``."""
    if word_radius < 0:
        raise ValueError("word_radius must be >= 0")
    manifold = p.manifold
    target = q.array
    moves = []
    for g in manifold.generators():
        moves += [g.apply, g.inverse]

    frontier = p.array[None, :]
    seen = {tuple(np.round(frontier[0] / atol).astype(np.int64))}
    for depth in range(word_radius + 1):
        if np.any(np.max(np.abs(frontier - target), axis=1) <= atol):
            return True
        if depth == word_radius:
            break
        nxt = np.concatenate([mv(frontier) for mv in moves])
        keep = []
        for row in nxt:
            key = tuple(np.round(row / atol).astype(np.int64))
            if key not in seen:
                seen.add(key)
                keep.append(row)
        if not keep:
            break
        frontier = np.array(keep)
    return False


def solve_in_frame(frames: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Coordinates ``c`` with ``frames @ c = vectors`` for stacked frames.

    Frames are ``(N, n, n)`` with the framing fields as columns.
    """
    frames = np.asarray(frames, dtype=float)
    vectors = np.asarray(vectors, dtype=float)
    det = np.linalg.det(frames)
    if np.any(np.abs(det) <= DET_FLOOR):
        raise DegenerateFraming(f"frame determinant {np.min(np.abs(det)):.3e} at a sample")
    return np.linalg.solve(frames, vectors[..., None])[..., 0]


def frame_metric_norm(v, p, framing) -> float | np.ndarray:
    """Norm of ``v`` in the metric making the framing orthonormal at ``p``."""
    pts = _as_array(p)
    vec = np.atleast_2d(np.asarray(v, dtype=float))
    c = solve_in_frame(framing.matrix(pts), np.broadcast_to(vec, pts.shape))
    out = np.linalg.norm(c, axis=1)
    return float(out[0]) if out.shape == (1,) else out


def canonical_points(manifold: ModelManifold, n: int, seed: int = 0) -> np.ndarray:
    return manifold.sample(np.random.default_rng(seed), n)


__all__ = [
    "ChartPoint",
    "DeckTransform",
    "HeisQuotient",
    "MappingTorus",
    "ModelManifold",
    "ProductT2xS1",
    "SolQuotient",
    "Torus",
    "canonical_points",
    "deck_equivalent",
    "frame_metric_norm",
    "heis_inv",
    "heis_mul",
    "manifold_from_dict",
    "reduce_to_fundamental_domain",
    "sol_inv",
    "sol_mul",
    "solve_in_frame",
]
