"""Derivative cocycles over framings, autonomy, determinants and Lyapunov spectra."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import (
    NotInvertible,
    NotPartiallyHyperbolic,
    NotProportional,
    NotRealDiagonalizable,
    UnsupportedDimension,
)
from .fields import DEFAULT_STEP, Framing, as_points, fd_jacobian, lie_bracket
from .geometry import ChartPoint, ModelManifold, solve_in_frame

EXACT_TOLERANCE = 1e-6
FD_TOLERANCE = 1e-3
UNIT_DET_BAND = 1e-6


@dataclass(frozen=True)
class Diffeo:
    """Chart lift of a diffeomorphism on the universal cover.

    ``forward`` and ``inverse`` act on stacked points ``(N, n)``. ``jac`` is
    the exact chart Jacobian when known; otherwise differences are used.
    """

    forward: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray] | None = None
    inverse: Callable[[np.ndarray], np.ndarray] | None = None
    manifold: ModelManifold | None = None
    name: str = "diffeo"
    fd_step: float = 1e-4

    def __call__(self, p):
        out = self.forward(as_points(p))
        return out[0] if isinstance(p, ChartPoint) else out

    @property
    def exact(self) -> bool:
        return self.jac is not None

    def jacobian(self, p) -> np.ndarray:
        pts = as_points(p)
        if self.jac is not None:
            return self.jac(pts)
        return fd_jacobian(self.forward, pts, self.fd_step)

    def inverted(self) -> "Diffeo":
        if self.inverse is None:
            raise NotInvertible(f"{self.name} has no inverse")
        fwd_jac = self.jac
        inv_jac = None
        if fwd_jac is not None:

            def inv_jac(p):
                return np.linalg.inv(fwd_jac(self.inverse(p)))

        return Diffeo(self.inverse, inv_jac, self.forward, self.manifold, f"{self.name}^-1", self.fd_step)

    def compose(self, other: "Diffeo") -> "Diffeo":
        """``self o other``."""
        jac = None
        if self.jac is not None and other.jac is not None:

            def jac(p):
                return self.jac(other.forward(p)) @ other.jac(p)

        inv = None
        if self.inverse is not None and other.inverse is not None:

            def inv(p):
                return other.inverse(self.inverse(p))

        return Diffeo(
            lambda p: self.forward(other.forward(p)), jac, inv, self.manifold,
            f"{self.name}*{other.name}", self.fd_step,
        )


def identity_diffeo(n: int, manifold=None) -> Diffeo:
    return Diffeo(
        lambda p: np.array(p, dtype=float),
        lambda p: np.broadcast_to(np.eye(n), (len(p), n, n)).copy(),
        lambda p: np.array(p, dtype=float),
        manifold,
        "identity",
    )


def inverse_residual(phi: Diffeo, samples) -> float:
    if phi.inverse is None:
        raise NotInvertible(f"{phi.name} has no inverse")
    pts = as_points(samples)
    return float(np.max(np.abs(phi.inverse(phi.forward(pts)) - pts)))


def derivative_cocycle(phi: Diffeo, F: Framing, p) -> np.ndarray:
    """Matrix of ``D phi(p)`` in the bases ``F(p)`` and ``F(phi(p))``."""
    pts = as_points(p)
    image = phi.forward(pts)
    dphi = phi.jacobian(pts)
    if not np.all(np.isfinite(dphi)) or np.any(np.abs(np.linalg.det(dphi)) < 1e-300):
        raise NotInvertible(f"{phi.name} has a singular Jacobian at a sample")
    moved = dphi @ F.matrix(pts)
    target = F.matrix(image)
    n = target.shape[-1]
    cols = [solve_in_frame(target, moved[:, :, j]) for j in range(n)]
    out = np.stack(cols, axis=-1)
    return out[0] if isinstance(p, ChartPoint) else out


@dataclass
class CocycleReport:
    M: np.ndarray
    max_deviation: float
    det: float
    sample_count: int
    tolerance: float
    exact: bool

    @property
    def autonomous(self) -> bool:
        return self.max_deviation < self.tolerance

    def to_dict(self) -> dict:
        return {
            "M": np.asarray(self.M).tolist(),
            "max_deviation": float(self.max_deviation),
            "det": float(self.det),
            "sample_count": int(self.sample_count),
            "tolerance": float(self.tolerance),
            "exact_jacobian": bool(self.exact),
            "autonomous": bool(self.autonomous),
        }


def autonomy_check(phi: Diffeo, F: Framing, samples, tolerance: float | None = None) -> CocycleReport:
    """Mean cocycle over the samples and the sup entrywise distance to it."""
    pts = as_points(samples)
    mats = derivative_cocycle(phi, F, pts)
    M = mats.mean(axis=0)
    dev = float(np.max(np.abs(mats - M)))
    if tolerance is None:
        tolerance = EXACT_TOLERANCE if phi.exact else FD_TOLERANCE
    return CocycleReport(M, dev, float(np.linalg.det(M)), len(pts), tolerance, phi.exact)


def determinant_check(report: CocycleReport) -> int | None:
    """``+1`` or ``-1`` when ``|det M|`` is 1 within the band, else ``None``."""
    d = report.det
    if abs(abs(d) - 1.0) < UNIT_DET_BAND:
        return 1 if d > 0 else -1
    return None


# -- Lyapunov spectrum --------------------------------------------------------------


@dataclass
class LyapunovSpectrum:
    exponents: np.ndarray
    per_point_spread: float
    per_orbit: np.ndarray
    running: np.ndarray = field(repr=False)
    n_iter: int = 0

    def to_dict(self, with_running: bool = False) -> dict:
        d = {
            "exponents": self.exponents.tolist(),
            "per_point_spread": float(self.per_point_spread),
            "n_iter": int(self.n_iter),
            "orbits": int(len(self.per_orbit)),
        }
        if with_running:
            d["running"] = self.running.tolist()
        return d


def _one_step_matrices(phi: Diffeo, pts: np.ndarray, framing: Framing | None):
    """Next reduced points and the tangent map that goes with the step."""
    image = phi.forward(pts)
    if framing is not None:
        mats = derivative_cocycle(phi, framing, pts)
        nxt = phi.manifold.reduce(image) if phi.manifold is not None else image
        return nxt, mats
    mats = phi.jacobian(pts)
    if phi.manifold is not None:
        nxt, red = phi.manifold.reduce_with_jacobian(image)
        mats = red @ mats
    else:
        nxt = image
    return nxt, mats


def lyapunov_exponents(
    phi: Diffeo, starts, n_iter: int = 1000, framing: Framing | None = None, transient: int = 100
) -> LyapunovSpectrum:
    """QR re-orthonormalised Lyapunov exponents along each starting orbit.

    With a framing the one-step matrices are cocycle values; otherwise chart
    Jacobians composed with the deck map used to re-enter the canonical box.
    The first ``transient`` QR steps only align the orthonormal frame with the
    Oseledets flag and are not counted; ``n_iter`` steps are averaged after that.
    """
    if n_iter < 100:
        raise ValueError(f"n_iter must be >= 100, got {n_iter}")
    if transient < 0:
        raise ValueError("transient must be non-negative")
    pts = as_points(starts).copy()
    if phi.manifold is not None:
        pts = phi.manifold.reduce(pts)
    m, n = pts.shape
    total = n_iter + transient
    mats = np.empty((total, m, n, n))
    for t in range(total):
        pts, mats[t] = _one_step_matrices(phi, pts, framing)
    logs = kernels.qr_log_diagonals(mats)[transient:]
    if not np.all(np.isfinite(logs)):
        raise NotInvertible(f"{phi.name} collapsed a tangent direction")
    per_orbit = -np.sort(-logs.sum(axis=0) / n_iter, axis=1)
    exponents = per_orbit.mean(axis=0)
    spread = float(np.max(per_orbit.max(axis=0) - per_orbit.min(axis=0)))
    steps = np.arange(1, n_iter + 1)[:, None]
    running = -np.sort(-np.cumsum(logs, axis=0).mean(axis=1) / steps, axis=1)
    return LyapunovSpectrum(exponents, spread, per_orbit, running, n_iter)


# -- partial hyperbolicity ----------------------------------------------------------


@dataclass(frozen=True)
class PartialHyperbolicSpec:
    lambda_s: float
    lambda_c: float
    lambda_u: float

    def to_dict(self) -> dict:
        return {"lambda_s": self.lambda_s, "lambda_c": self.lambda_c, "lambda_u": self.lambda_u}


def verify_partial_hyperbolicity(M, imag_tol: float = 1e-9) -> PartialHyperbolicSpec:
    """Sort eigenvalues by modulus and check the strict dominance chain.

    Raises ``NotPartiallyHyperbolic`` naming the first violated inequality.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise UnsupportedDimension(f"expected a 3x3 matrix, got {M.shape}")
    w = np.linalg.eigvals(M)
    scale = max(1.0, float(np.max(np.abs(w))))
    if np.max(np.abs(w.imag)) > imag_tol * scale:
        raise NotRealDiagonalizable(f"complex eigenvalues {w}")
    w = w.real[np.argsort(np.abs(w.real))]
    ls, lc, lu = (float(v) for v in w)
    if not abs(lu) > 1:
        raise NotPartiallyHyperbolic(f"|lambda_u| > 1 violated (|lambda_u| = {abs(lu):.6g})")
    if not abs(ls) < 1:
        raise NotPartiallyHyperbolic(f"|lambda_s| < 1 violated (|lambda_s| = {abs(ls):.6g})")
    if not abs(ls) < abs(lc):
        raise NotPartiallyHyperbolic("|lambda_s| < |lambda_c| violated")
    if not abs(lc) < abs(lu):
        raise NotPartiallyHyperbolic("|lambda_c| < |lambda_u| violated")
    return PartialHyperbolicSpec(ls, lc, lu)


# -- bracket coefficient equivariance ----------------------------------------------


def bracket_coefficient(F: Framing, i: int, j: int, k: int, pts, h: float = DEFAULT_STEP):
    """``beta`` with ``[X_i, X_j] = beta X_k`` and the proportionality residual."""
    pts = as_points(pts)
    br = lie_bracket(F.fields[i], F.fields[j], pts, h)
    beta = solve_in_frame(F.matrix(pts), br)[:, k]
    resid = np.linalg.norm(br - beta[:, None] * F.fields[k].func(pts), axis=1)
    return beta, float(resid.max(initial=0.0))


def bracket_coefficient_equivariance(
    phi: Diffeo,
    F: Framing,
    i: int,
    j: int,
    k: int,
    multipliers: Sequence[float],
    samples,
    h: float = DEFAULT_STEP,
    proportionality_tol: float = 1e-3,
) -> float:
    """Sup of ``|beta(phi p) - lambda_k / (lambda_i lambda_j) beta(p)|``.

    ``multipliers`` are the diagonal entries of the (diagonal) cocycle, indexed
    like the framing.
    """
    pts = as_points(samples)
    beta, resid = bracket_coefficient(F, i, j, k, pts, h)
    image = phi.forward(pts)
    if phi.manifold is not None:
        image = phi.manifold.reduce(image)
    beta_img, resid_img = bracket_coefficient(F, i, j, k, image, h)
    worst = max(resid, resid_img)
    if worst >= proportionality_tol:
        raise NotProportional(f"[X_{i}, X_{j}] is not along X_{k} (residual {worst:.3e})")
    lam = np.asarray(multipliers, dtype=float)
    factor = lam[k] / (lam[i] * lam[j])
    return float(np.max(np.abs(beta_img - factor * beta)))
