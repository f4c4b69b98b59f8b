"""Vector fields and framings in universal-cover charts, with numerical brackets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidStep, NotInvertible, UnsupportedDimension
from .geometry import ChartPoint, solve_in_frame

DEFAULT_STEP = 1e-3


def as_points(p) -> np.ndarray:
    if isinstance(p, ChartPoint):
        return p.array[None, :]
    return np.atleast_2d(np.asarray(p, dtype=float))


def fd_jacobian(func: Callable[[np.ndarray], np.ndarray], pts: np.ndarray, h: float) -> np.ndarray:
    """Central differences with one Richardson step, stacked over points.

    Returns ``J[N, i, j] = d func_i / d x_j``.
    """
    if not h > 0:
        raise InvalidStep(f"step must be positive, got {h}")
    pts = np.atleast_2d(pts)
    n = pts.shape[1]

    def central(step):
        cols = []
        for j in range(n):
            e = np.zeros(n)
            e[j] = step
            cols.append((func(pts + e) - func(pts - e)) / (2.0 * step))
        return np.stack(cols, axis=-1)

    return (4.0 * central(h / 2.0) - central(h)) / 3.0


@dataclass(frozen=True)
class VectorField:
    """A field given by its chart expression; ``jac`` is optional and exact when present."""

    func: Callable[[np.ndarray], np.ndarray]
    descriptor: str = "custom"
    jac: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def eval(self, p) -> np.ndarray:
        out = self.func(as_points(p))
        return out[0] if isinstance(p, ChartPoint) else out

    def __call__(self, p):
        return self.eval(p)

    def jacobian(self, p, h: float = DEFAULT_STEP) -> np.ndarray:
        pts = as_points(p)
        if self.jac is not None:
            return self.jac(pts)
        return fd_jacobian(self.func, pts, h)

    @property
    def has_exact_jacobian(self) -> bool:
        return self.jac is not None


def constant_field(vec, descriptor="constant") -> VectorField:
    vec = np.asarray(vec, dtype=float)
    n = len(vec)
    return VectorField(
        lambda p: np.broadcast_to(vec, (len(p), n)).copy(),
        descriptor,
        lambda p: np.zeros((len(p), n, n)),
    )


@dataclass(frozen=True)
class Framing:
    fields: tuple
    name: str = "framing"

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))

    @property
    def dimension(self) -> int:
        return len(self.fields)

    def matrix(self, p) -> np.ndarray:
        """Frame matrices ``(N, n, n)`` with the fields as columns."""
        pts = as_points(p)
        return np.stack([X.func(pts) for X in self.fields], axis=-1)

    @property
    def exact(self) -> bool:
        return all(X.has_exact_jacobian for X in self.fields)

    def min_abs_det(self, samples) -> float:
        return float(np.min(np.abs(np.linalg.det(self.matrix(samples)))))


def canonical_framing(n: int) -> Framing:
    return Framing(
        tuple(constant_field(np.eye(n)[i], f"coordinate-{i}") for i in range(n)),
        f"canonical-R{n}",
    )


def lie_bracket(X: VectorField, Y: VectorField, p, h: float = DEFAULT_STEP) -> np.ndarray:
    """``[X, Y] = DY X - DX Y`` at ``p`` (single point or stacked points)."""
    if not h > 0:
        raise InvalidStep(f"step must be positive, got {h}")
    pts = as_points(p)
    xv, yv = X.func(pts), Y.func(pts)
    dx, dy = X.jacobian(pts, h), Y.jacobian(pts, h)
    out = np.einsum("nij,nj->ni", dy, xv) - np.einsum("nij,nj->ni", dx, yv)
    return out[0] if isinstance(p, ChartPoint) else out


def bracket_field(X: VectorField, Y: VectorField, h: float = DEFAULT_STEP) -> VectorField:
    return VectorField(lambda p: lie_bracket(X, Y, p, h), f"[{X.descriptor},{Y.descriptor}]")


def coordinates_in_framing(v, p, F: Framing) -> np.ndarray:
    pts = as_points(p)
    vec = np.broadcast_to(np.atleast_2d(np.asarray(v, dtype=float)), pts.shape)
    out = solve_in_frame(F.matrix(pts), vec)
    return out[0] if isinstance(p, ChartPoint) else out


@dataclass
class StructureTensor:
    """Coefficients ``a[i, j, k]`` of ``[X_i, X_j] = sum_k a[i, j, k] X_k``."""

    a: np.ndarray
    residual: float = 0.0
    pair_residuals: dict = field(default_factory=dict)
    tolerance: float = 1e-4

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        n = self.a.shape[0]
        if self.a.shape != (n, n, n):
            raise ValueError(f"structure tensor must be n x n x n, got {self.a.shape}")
        # keep the upper triangle as the source of truth
        upper = np.triu(np.ones((n, n), dtype=bool), 1)
        a = np.where(upper[:, :, None], self.a, 0.0)
        self.a = a - a.transpose(1, 0, 2)

    @property
    def dimension(self) -> int:
        return self.a.shape[0]

    @property
    def is_constant(self) -> bool:
        return self.residual < self.tolerance

    @classmethod
    def from_brackets(cls, n: int, brackets: dict, **kw) -> "StructureTensor":
        """Build from ``{(i, j): coefficient vector}`` with ``i < j`` or ``i > j``."""
        a = np.zeros((n, n, n))
        for (i, j), v in brackets.items():
            if i == j:
                continue
            if i < j:
                a[i, j] = v
            else:
                a[j, i] = -np.asarray(v, dtype=float)
        return cls(a, **kw)

    def change_basis(self, P: np.ndarray) -> "StructureTensor":
        """Tensor in the basis ``e'_i = sum_m P[m, i] e_m``."""
        P = np.asarray(P, dtype=float)
        Pinv = np.linalg.inv(P)
        a = np.einsum("mi,nj,mnk,lk->ijl", P, P, self.a, Pinv)
        return StructureTensor(a, self.residual, dict(self.pair_residuals), self.tolerance)

    def to_dict(self) -> dict:
        n = self.dimension
        entries = [
            {"i": i, "j": j, "k": k, "value": float(self.a[i, j, k])}
            for i in range(n)
            for j in range(i + 1, n)
            for k in range(n)
            if self.a[i, j, k] != 0.0
        ]
        return {
            "dimension": n,
            "entries": entries,
            "residual": float(self.residual),
            "constant": bool(self.is_constant),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StructureTensor":
        n = int(d["dimension"])
        a = np.zeros((n, n, n))
        for e in d["entries"]:
            a[e["i"], e["j"], e["k"]] = e["value"]
        return cls(a, float(d.get("residual", 0.0)))


def structure_constants(
    F: Framing, samples, h: float = DEFAULT_STEP, tolerance: float = 1e-4
) -> StructureTensor:
    """Sample-mean structure constants and the sup deviation from constancy."""
    pts = as_points(samples)
    if len(pts) < 10:
        raise ValueError(f"need at least 10 sample points, got {len(pts)}")
    n = F.dimension
    frames = F.matrix(pts)
    a = np.zeros((n, n, n))
    residual = 0.0
    pair_res = {}
    for i in range(n):
        for j in range(i + 1, n):
            br = lie_bracket(F.fields[i], F.fields[j], pts, h)
            coords = solve_in_frame(frames, br)
            mean = coords.mean(axis=0)
            a[i, j] = mean
            dev = np.linalg.norm(br - np.einsum("nik,k->ni", frames, mean), axis=1)
            pair_res[(i, j)] = float(dev.max())
            residual = max(residual, pair_res[(i, j)])
    return StructureTensor(a, residual, pair_res, tolerance)


def jacobiator(a: np.ndarray, i: int, j: int, k: int) -> np.ndarray:
    """Coefficients of ``[[e_i,e_j],e_k] + [[e_j,e_k],e_i] + [[e_k,e_i],e_j]``."""

    def nested(x, y, z):
        return np.einsum("l,lm->m", a[x, y], a[:, z, :])

    return nested(i, j, k) + nested(j, k, i) + nested(k, i, j)


def jacobi_residual(T: StructureTensor, order: Sequence[int] = (0, 1, 2)) -> np.ndarray:
    """Cyclic Jacobi sum for the ordered triple ``order`` of basis vectors.

    With ``order = (s, c, u)`` and only ``a_cs, a_cu, a_su`` nonzero, the
    result is ``-a_su (a_cs + a_cu)`` along ``X_c``.
    """
    if T.dimension != 3:
        raise UnsupportedDimension(f"Jacobi residual is defined here for n = 3, got {T.dimension}")
    return jacobiator(T.a, *order)


def normal_form_tensor(a_cs: float, a_cu: float, a_su: float, roles=(0, 1, 2)) -> StructureTensor:
    """Tensor with ``[X_c,X_s]=a_cs X_s``, ``[X_c,X_u]=a_cu X_u``, ``[X_s,X_u]=a_su X_c``."""
    s, c, u = roles
    a = np.zeros((3, 3, 3))
    a[c, s, s], a[s, c, s] = a_cs, -a_cs
    a[c, u, u], a[u, c, u] = a_cu, -a_cu
    a[s, u, c], a[u, s, c] = a_su, -a_su
    return StructureTensor(a)


def pushforward_field(phi, X: VectorField) -> VectorField:
    """``(phi_* X)(p) = D phi(phi^-1 p) X(phi^-1 p)``."""
    if getattr(phi, "inverse", None) is None:
        raise NotInvertible("pushforward needs the inverse map")

    def func(p):
        q = phi.inverse(p)
        return np.einsum("nij,nj->ni", phi.jacobian(q), X.func(q))

    return VectorField(func, f"push({X.descriptor})")


def max_equivariance_error(X: VectorField, manifold, samples) -> float:
    """Sup over generators of ``|X(g p) - Dg X(p)|``."""
    pts = as_points(samples)
    worst = 0.0
    for g in manifold.generators():
        lhs = X.func(g.apply(pts))
        rhs = np.einsum("nij,nj->ni", g.jacobian(pts), X.func(pts))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst
