"""Invariant line fields of circle extensions by graph transform on a grid.

A line inside ``span(e, d/dtheta)`` is stored as its slope ``s``: the line
spanned by ``e + s d/dtheta`` where ``e`` is the base unstable (or stable)
eigenvector. The pull-back sweep is affine per fiber, so the iteration
contracts slopes by exactly ``1 / lambda_u`` (``lambda_s`` for the stable field).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InsufficientResolution, NotContracting
from .models import FramedSystem, FourierPhase, horizontal_slopes

UNSTABLE = "unstable"
STABLE = "stable"
SNAP = 1e-9


@dataclass
class GridLineField:
    """Slopes on the regular grid ``(i/Nx, j/Ny, k/Nt)`` of ``T^2 x S^1``."""

    slope: np.ndarray
    kind: str = UNSTABLE

    def __post_init__(self):
        self.slope = np.ascontiguousarray(self.slope, dtype=np.float64)
        if self.slope.ndim != 3:
            raise ValueError("slope grid must be 3-dimensional")
        if self.kind not in (UNSTABLE, STABLE):
            raise ValueError(f"kind must be {UNSTABLE!r} or {STABLE!r}")

    @property
    def shape(self) -> tuple:
        return self.slope.shape

    @classmethod
    def constant(cls, shape, value=0.0, kind=UNSTABLE) -> "GridLineField":
        return cls(np.full(shape, float(value)), kind)

    @classmethod
    def random(cls, shape, low=-5.0, high=5.0, seed=0, kind=UNSTABLE) -> "GridLineField":
        return cls(np.random.default_rng(seed).uniform(low, high, shape), kind)

    def nodes(self):
        nx, ny, nt = self.shape
        return np.arange(nx) / nx, np.arange(ny) / ny, np.arange(nt) / nt

    def copy(self) -> "GridLineField":
        return GridLineField(self.slope.copy(), self.kind)


@dataclass
class ConeIterationReport:
    iterations: int
    sup_deltas: list
    contraction_estimate: float | None
    invariance_residual: float
    converged: bool
    tol: float

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "sup_deltas": [float(d) for d in self.sup_deltas],
            "contraction_estimate": None if self.contraction_estimate is None else float(self.contraction_estimate),
            "invariance_residual": float(self.invariance_residual),
            "converged": bool(self.converged),
            "tol": float(self.tol),
        }


@dataclass
class HolderEstimate:
    exponent: float
    fit_quality: float
    scales: list = field(default_factory=list)
    oscillations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "exponent": float(self.exponent),
            "fit_quality": float(self.fit_quality),
            "scales": [int(s) for s in self.scales],
            "oscillations": [float(o) for o in self.oscillations],
        }


def _skew_data(sys: FramedSystem):
    md = sys.metadata
    if "rho" not in md or sys.name != "circle-extension":
        raise ValueError("graph transform needs a circle-extension system")
    A = np.asarray(md["A"], dtype=float)
    return A, md["rho"], md["lambda_s"], np.asarray(md["e_s"]), md["lambda_u"], np.asarray(md["e_u"])


def _snap(idx):
    r = np.round(idx)
    return np.where(np.abs(idx - r) < SNAP, r, idx)


@dataclass(frozen=True)
class SweepPlan:
    """Fractional source indices and forcing for one pull-back sweep."""

    fx: np.ndarray
    fy: np.ndarray
    ft: np.ndarray
    forcing: np.ndarray
    mult: float


def _base_grid(shape):
    nx, ny, _ = shape
    return np.meshgrid(np.arange(nx) / nx, np.arange(ny) / ny, indexing="ij")


def sweep_plan(sys: FramedSystem, shape, kind: str = UNSTABLE) -> SweepPlan:
    """Where each node reads from and what it adds.

    Unstable: ``new(q) = s(phi^-1 q) / lambda_u + dr(phi^-1 q) e_u / lambda_u``.
    Stable: ``new(q) = lambda_s s(phi q) - dr(q) e_s``.
    """
    A, rho, ls, es, lu, eu = _skew_data(sys)
    nx, ny, nt = shape
    x, y = _base_grid(shape)
    if kind == UNSTABLE:
        Ainv = np.round(np.linalg.inv(A))
        bx = Ainv[0, 0] * x + Ainv[0, 1] * y
        by = Ainv[1, 0] * x + Ainv[1, 1] * y
        gx, gy = rho.grad(bx, by)
        forcing = (gx * eu[0] + gy * eu[1]) / lu
        shift = -rho(bx, by)
        mult = 1.0 / lu
    elif kind == STABLE:
        bx = A[0, 0] * x + A[0, 1] * y
        by = A[1, 0] * x + A[1, 1] * y
        gx, gy = rho.grad(x, y)
        forcing = -(gx * es[0] + gy * es[1])
        shift = rho(x, y)
        mult = ls
    else:
        raise ValueError(kind)
    fx = _snap(np.mod(bx, 1.0) * nx)
    fy = _snap(np.mod(by, 1.0) * ny)
    ft = np.mod(shift, 1.0) * nt
    return SweepPlan(
        np.ascontiguousarray(fx), np.ascontiguousarray(fy), np.ascontiguousarray(ft),
        np.ascontiguousarray(forcing), float(mult),
    )


def graph_transform_step(
    field_: GridLineField, sys: FramedSystem, plan: SweepPlan | None = None
) -> GridLineField:
    """One pull-back sweep of the graph transform."""
    return _step(field_, sys, plan)[0]


def _step(field_, sys, plan):
    if plan is None:
        plan = sweep_plan(sys, field_.shape, field_.kind)
    out, delta = kernels.pullback_step(field_.slope, plan.fx, plan.fy, plan.ft, plan.forcing, plan.mult)
    return GridLineField(out, field_.kind), delta


def invariance_residual(field_: GridLineField, sys: FramedSystem) -> float:
    """Sup over nodes of the angle between the pushed line and the line at the image."""
    A, rho, ls, es, lu, eu = _skew_data(sys)
    shape = field_.shape
    nx, ny, nt = shape
    x, y = _base_grid(shape)
    gx, gy = rho.grad(x, y)
    if field_.kind == UNSTABLE:
        pushed = (field_.slope + (gx * eu[0] + gy * eu[1])[:, :, None]) / lu
    else:
        pushed = (field_.slope + (gx * es[0] + gy * es[1])[:, :, None]) / ls
    bx = A[0, 0] * x + A[0, 1] * y
    by = A[1, 0] * x + A[1, 1] * y
    fx = _snap(np.mod(bx, 1.0) * nx)
    fy = _snap(np.mod(by, 1.0) * ny)
    ft = np.mod(rho(x, y), 1.0) * nt
    at_image, _ = kernels.pullback_step_numpy(field_.slope, fx, fy, ft, np.zeros((nx, ny)), 1.0)
    return float(np.max(np.abs(np.arctan(at_image) - np.arctan(pushed))))


def cone_converge(
    sys: FramedSystem,
    init: GridLineField,
    tol: float = 1e-10,
    max_iter: int = 80,
) -> tuple[GridLineField, ConeIterationReport]:
    """Iterate the graph transform until the sup change drops below ``tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    plan = sweep_plan(sys, init.shape, init.kind)
    current = init
    deltas = []
    converged = False
    for _ in range(max_iter):
        current, delta = _step(current, sys, plan)
        deltas.append(delta)
        if delta < tol:
            converged = True
            break
    est = contraction_estimate(deltas)
    if not converged and (est is None or est >= 1.0):
        raise NotContracting(f"no contraction after {max_iter} sweeps (estimate {est})")
    resid = invariance_residual(current, sys)
    return current, ConeIterationReport(len(deltas), deltas, est, resid, converged, tol)


def contraction_estimate(deltas) -> float | None:
    """Geometric mean of consecutive delta ratios, ignoring exact zeros."""
    d = np.asarray([v for v in deltas if v > 0.0])
    if len(d) < 2:
        return None
    return float(np.exp(np.mean(np.log(d[1:] / d[:-1]))))


def series_slope(sys: FramedSystem, shape, kind: str = UNSTABLE, n_terms: int = 40) -> np.ndarray:
    """Truncated series for the invariant slopes on the grid; the solver's oracle."""
    A, rho = _skew_data(sys)[:2]
    x, y = _base_grid(shape)
    su, ss = horizontal_slopes(A, rho, x, y, n_terms)
    s = su if kind == UNSTABLE else ss
    return np.repeat(s[:, :, None], shape[2], axis=2)


def holder_exponent(field_: GridLineField | np.ndarray, direction: int = 0, noise_floor: float = 1e-12) -> HolderEstimate:
    """Fit ``log osc(d) ~ exponent log d`` over dyadic ``d = 1, 2, ..., N/8``.

    ``osc(d)`` is the largest slope change between nodes ``d`` apart along the
    base axis ``direction`` (no wrap-around). A field whose oscillation sits at
    round-off on every scale is reported as smooth (exponent 1.05, R^2 = 1).
    """
    s = field_.slope if isinstance(field_, GridLineField) else np.asarray(field_, dtype=float)
    if direction not in (0, 1):
        raise ValueError("direction must be a base axis (0 or 1)")
    n = s.shape[direction]
    scales = []
    d = 1
    while d <= n // 8:
        scales.append(d)
        d *= 2
    if len(scales) < 4:
        raise InsufficientResolution(f"{n} nodes give only {len(scales)} dyadic scales")
    floor = noise_floor * max(1.0, float(np.max(np.abs(s))))
    osc = []
    for d in scales:
        lo = np.take(s, np.arange(0, n - d), axis=direction)
        hi = np.take(s, np.arange(d, n), axis=direction)
        osc.append(float(np.max(np.abs(hi - lo))))
    osc = np.asarray(osc)
    usable = osc > floor
    if not np.any(usable):
        return HolderEstimate(1.05, 1.0, scales, osc.tolist())
    if usable.sum() < 4:
        raise InsufficientResolution(f"only {int(usable.sum())} scales above the noise floor")
    lx = np.log(np.asarray(scales, dtype=float)[usable] / n)
    ly = np.log(osc[usable])
    slope, icpt = np.polyfit(lx, ly, 1)
    pred = slope * lx + icpt
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return HolderEstimate(float(np.clip(slope, 1e-12, 1.05)), r2, scales, osc.tolist())


def splitting_summary(field_: GridLineField) -> dict:
    s = field_.slope
    return {
        "shape": list(s.shape),
        "kind": field_.kind,
        "min": float(s.min()),
        "max": float(s.max()),
        "range": float(s.max() - s.min()),
    }


__all__ = [
    "ConeIterationReport",
    "FourierPhase",
    "GridLineField",
    "HolderEstimate",
    "STABLE",
    "UNSTABLE",
    "cone_converge",
    "contraction_estimate",
    "graph_transform_step",
    "holder_exponent",
    "invariance_residual",
    "series_slope",
    "splitting_summary",
    "sweep_plan",
]
