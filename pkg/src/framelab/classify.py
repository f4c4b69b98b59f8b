"""Matrix classes in dimension 2, Lie algebra recognition and 3D branch routing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cocycle import CocycleReport, PartialHyperbolicSpec
from .errors import (
    ForbiddenAlgebraicGroup,
    NotALieAlgebra,
    NotAutonomous,
    NotUnimodular,
    UnclassifiedAlgebra,
    UnsupportedDimension,
)
from .fields import StructureTensor, jacobiator

HYPERBOLIC = "Hyperbolic"
ELLIPTIC = "Elliptic"
PARABOLIC_PLUS = "ParabolicPlus"
PARABOLIC_MINUS = "ParabolicMinus"
DEGENERATE = "Degenerate"

ABELIAN = "Abelian"
HEIS3 = "Heis3"
SOL = "Sol"
EUC = "Euc"
SL2 = "Sl2"
SU2 = "Su2"
UNKNOWN = "Unknown"

ANOSOV_TORUS = "AnosovTorus"
SUSPENSION_BRANCH = "SuspensionBranch"
ALGEBRAIC_BRANCH = "AlgebraicBranch"


def classify_2d(M, band: float = 1e-9, det_band: float = 1e-6) -> str:
    """Type of a 2x2 matrix with determinant +-1 from its trace.

    For ``det = -1`` the eigenvalues are always real; a vanishing trace gives
    eigenvalues ``+-1`` and is reported as ``Degenerate``.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise UnsupportedDimension(f"expected a 2x2 matrix, got {M.shape}")
    det = float(np.linalg.det(M))
    tr = float(np.trace(M))
    if abs(det - 1) < det_band:
        if abs(abs(tr) - 2) < band:
            return PARABOLIC_PLUS if tr > 0 else PARABOLIC_MINUS
        return HYPERBOLIC if abs(tr) > 2 else ELLIPTIC
    if abs(det + 1) < det_band:
        return DEGENERATE if abs(tr) < band else HYPERBOLIC
    raise NotUnimodular(f"det = {det:.6g} is not +-1")


@dataclass
class AlgebraEvidence:
    tag: str
    derived_rank: int
    singular_values: list
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "derived_rank": self.derived_rank,
            "singular_values": [float(s) for s in self.singular_values],
            **self.details,
        }


def ad_matrices(a: np.ndarray) -> np.ndarray:
    """``ad[i]`` with ``ad[i] @ e_j = [e_i, e_j]``, i.e. ``ad[i][k, j] = a[i, j, k]``."""
    return np.transpose(a, (0, 2, 1))


def killing_form(a: np.ndarray) -> np.ndarray:
    ad = ad_matrices(a)
    return np.einsum("iab,jba->ij", ad, ad)


def analyse_algebra(
    T: StructureTensor,
    rank_tol: float = 1e-6,
    zero_band: float = 1e-9,
    jacobi_tol: float = 1e-4,
) -> AlgebraEvidence:
    """Decision tree on basis-independent data of a 3D structure tensor."""
    if T.dimension != 3:
        raise UnsupportedDimension(f"algebra recognition is for n = 3, got {T.dimension}")
    a = T.a
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return AlgebraEvidence(ABELIAN, 0, [0.0, 0.0, 0.0])
    a = a / scale
    jac = jacobiator(a, 0, 1, 2)
    if np.max(np.abs(jac)) > jacobi_tol:
        raise NotALieAlgebra(f"Jacobi identity fails by {np.max(np.abs(jac)):.3e}")

    brackets = np.array([a[0, 1], a[0, 2], a[1, 2]])
    _, sv, vt = np.linalg.svd(brackets)
    rank = int(np.sum(sv > rank_tol * sv[0]))
    ev = AlgebraEvidence(UNKNOWN, rank, (sv * scale).tolist())
    ad = ad_matrices(a)

    if rank == 1:
        z = vt[0]
        central = np.max(np.abs(np.einsum("ikj,j->ik", ad, z)))
        ev.details["center_defect"] = float(central)
        ev.tag = HEIS3 if central < rank_tol else UNKNOWN
    elif rank == 2:
        basis = vt[:2].T  # orthonormal basis of the derived algebra
        t = vt[2]
        ad_t = np.einsum("i,ikj->kj", t, ad)
        block = basis.T @ ad_t @ basis
        leak = np.max(np.abs(ad_t @ basis - basis @ block))
        tr, det = float(np.trace(block)), float(np.linalg.det(block))
        ev.details.update({"ad_trace": tr, "ad_det": det, "ideal_defect": float(leak)})
        if leak > rank_tol or abs(tr) > rank_tol * max(1.0, np.max(np.abs(block))):
            ev.tag = UNKNOWN
        elif det < -zero_band:
            ev.tag = SOL
        elif det > zero_band:
            ev.tag = EUC
    else:
        K = killing_form(a)
        w = np.linalg.eigvalsh((K + K.T) / 2)
        band = zero_band * max(1.0, float(np.max(np.abs(w))))
        pos, neg = int(np.sum(w > band)), int(np.sum(w < -band))
        ev.details.update({"killing_eigenvalues": (w * scale * scale).tolist(), "signature": [pos, neg]})
        if pos == 2 and neg == 1:
            ev.tag = SL2
        elif neg == 3:
            ev.tag = SU2
    return ev


def classify_algebra(T: StructureTensor, **kw) -> str:
    return analyse_algebra(T, **kw).tag


def model_tensor(name: str) -> StructureTensor:
    """Exact structure tensors of the six unimodular 3D algebras."""
    b = {
        ABELIAN: {},
        HEIS3: {(0, 1): (0, 0, 1)},
        SOL: {(0, 1): (0, 1, 0), (0, 2): (0, 0, -1)},
        EUC: {(0, 1): (0, 0, 1), (0, 2): (0, -1, 0)},
        SL2: {(0, 1): (0, 2, 0), (0, 2): (0, 0, -2), (1, 2): (1, 0, 0)},
        SU2: {(0, 1): (0, 0, 1), (1, 2): (1, 0, 0), (2, 0): (0, 1, 0)},
    }
    if name not in b:
        raise KeyError(name)
    return StructureTensor.from_brackets(3, b[name])


@dataclass
class Theorem3DBranch:
    tag: str
    group: str | None = None
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"tag": self.tag, "group": self.group, "evidence": self.evidence}

    def __str__(self):
        return f"{self.tag}({self.group})" if self.group else self.tag


def theorem3d_branch(
    report: CocycleReport,
    spec: PartialHyperbolicSpec,
    T: StructureTensor,
    constancy: bool | None = None,
    unit_band: float = 1e-6,
) -> Theorem3DBranch:
    """Route an autonomous partially hyperbolic system to its model family."""
    if not report.autonomous:
        raise NotAutonomous(f"cocycle deviation {report.max_deviation:.3e} above tolerance")
    if constancy is None:
        constancy = T.is_constant
    evidence = {
        "lambda": [spec.lambda_s, spec.lambda_c, spec.lambda_u],
        "tensor_residual": float(T.residual),
        "constant_coefficients": bool(constancy),
    }
    if abs(abs(spec.lambda_c) - 1) > unit_band:
        return Theorem3DBranch(ANOSOV_TORUS, None, evidence)
    if not constancy:
        return Theorem3DBranch(SUSPENSION_BRANCH, None, evidence)
    ev = analyse_algebra(T)
    evidence["algebra"] = ev.to_dict()
    if ev.tag in (SU2, EUC):
        raise ForbiddenAlgebraicGroup(
            f"structure constants classify as {ev.tag}, which cannot carry a partially "
            "hyperbolic system with constant coefficients"
        )
    if ev.tag == UNKNOWN:
        raise UnclassifiedAlgebra(f"structure tensor not recognised: {ev.to_dict()}")
    return Theorem3DBranch(ALGEBRAIC_BRANCH, ev.tag, evidence)
