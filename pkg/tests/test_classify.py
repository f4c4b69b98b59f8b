import numpy as np
import pytest

from framelab import classify, models
from framelab.classify import (
    analyse_algebra,
    classify_2d,
    classify_algebra,
    model_tensor,
    theorem3d_branch,
)
from framelab.cocycle import CocycleReport, autonomy_check, verify_partial_hyperbolicity
from framelab.errors import (
    ForbiddenAlgebraicGroup,
    NotALieAlgebra,
    NotAutonomous,
    NotUnimodular,
    UnsupportedDimension,
)
from framelab.fields import StructureTensor, normal_form_tensor, structure_constants

ALGEBRAS = ["Abelian", "Heis3", "Sol", "Euc", "Sl2", "Su2"]


def test_classify_2d_examples():
    assert classify_2d([[2, 1], [1, 1]]) == classify.HYPERBOLIC
    assert classify_2d([[1, 1], [0, 1]]) == classify.PARABOLIC_PLUS
    assert classify_2d([[-1, 1], [0, -1]]) == classify.PARABOLIC_MINUS
    th = np.pi / 3
    assert classify_2d([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]]) == classify.ELLIPTIC
    assert classify_2d([[1, 0], [0, -1]]) == classify.DEGENERATE
    assert classify_2d([[1, 1], [1, 0]]) == classify.HYPERBOLIC
    with pytest.raises(NotUnimodular):
        classify_2d([[2, 0], [0, 1]])
    with pytest.raises(UnsupportedDimension):
        classify_2d(np.eye(3))


def _random_unimodular(rng):
    P = np.eye(2, dtype=int)
    for _ in range(4):
        E = np.eye(2, dtype=int)
        i = rng.integers(2)
        E[i, 1 - i] = rng.integers(-2, 3)
        P = P @ E
    return P


def test_classify_2d_conjugation_invariant():
    rng = np.random.default_rng(0)
    mats = [[[2, 1], [1, 1]], [[1, 3], [0, 1]], [[0, -1], [1, 0]], [[0, 1], [1, 0]], [[-1, 2], [0, -1]]]
    for M in mats:
        M = np.array(M, dtype=float)
        tag = classify_2d(M)
        for _ in range(50):
            P = _random_unimodular(rng).astype(float)
            assert classify_2d(P @ M @ np.linalg.inv(P)) == tag


@pytest.mark.parametrize("name", ALGEBRAS)
def test_model_algebras_recognised(name):
    assert classify_algebra(model_tensor(name)) == name


@pytest.mark.parametrize("name", ALGEBRAS)
def test_algebra_class_is_basis_invariant(name):
    rng = np.random.default_rng(ALGEBRAS.index(name))
    T = model_tensor(name)
    for _ in range(100):
        P = rng.normal(size=(3, 3))
        while abs(np.linalg.det(P)) < 0.1:
            P = rng.normal(size=(3, 3))
        assert classify_algebra(T.change_basis(P)) == name


def test_non_lie_tensor_rejected():
    T = StructureTensor.from_brackets(3, {(0, 1): (1, 0, 0), (1, 2): (0, 0, 1), (0, 2): (0, 1, 1)})
    with pytest.raises(NotALieAlgebra):
        analyse_algebra(T)


def test_non_unimodular_algebra_is_unknown():
    # [T, X] = X, [T, Y] = Y: ad_T has trace 2
    T = StructureTensor.from_brackets(3, {(0, 1): (0, 1, 0), (0, 2): (0, 0, 1)})
    assert classify_algebra(T) == classify.UNKNOWN


def _report(M, dev=0.0):
    return CocycleReport(np.asarray(M, dtype=float), dev, float(np.linalg.det(M)), 100, 1e-6, True)


def test_branch_routing_from_systems(systems):
    expected = {
        "heis-k1": "AlgebraicBranch(Heis3)",
        "heis-k2": "AlgebraicBranch(Heis3)",
        "heis-translated": "AlgebraicBranch(Heis3)",
        "sol": "AlgebraicBranch(Sol)",
        "sol-32": "AlgebraicBranch(Sol)",
        "suspension": "AlgebraicBranch(Sol)",
        "suspension-twist": "SuspensionBranch",
        "suspension-identity": "AlgebraicBranch(Abelian)",
        "anosov3": "AnosovTorus",
    }
    rng = np.random.default_rng(1)
    for name, label in expected.items():
        sys_ = systems[name]
        pts = sys_.manifold.sample(rng, 200)
        rep = autonomy_check(sys_.diffeo, sys_.framing, pts)
        T = structure_constants(sys_.framing, pts)
        if name == "suspension-identity":
            spec = verify_partial_hyperbolicity(np.diag([0.5, 1.0, 2.0]))
        else:
            spec = verify_partial_hyperbolicity(rep.M)
        assert str(theorem3d_branch(rep, spec, T)) == label, name


def test_anosov3_has_no_unit_eigenvalue():
    w = np.linalg.eigvals(np.array(models.ANOSOV3_MATRIX, dtype=float))
    assert np.all(np.abs(w.imag) < 1e-12)
    assert np.min(np.abs(np.abs(w) - 1)) > 0.1
    # independent root finding on the characteristic polynomial
    roots = np.roots(np.poly(np.array(models.ANOSOV3_MATRIX, dtype=float)))
    assert np.allclose(np.sort(roots.real), np.sort(w.real))


def test_branch_refuses_non_autonomous_and_forbidden():
    spec = verify_partial_hyperbolicity(np.diag([0.5, 1.0, 2.0]))
    with pytest.raises(NotAutonomous):
        theorem3d_branch(_report(np.diag([0.5, 1, 2]), dev=1.0), spec, model_tensor("Heis3"))
    for name in ("Su2", "Euc"):
        with pytest.raises(ForbiddenAlgebraicGroup):
            theorem3d_branch(_report(np.diag([0.5, 1, 2])), spec, model_tensor(name))


def test_branch_never_forbidden_on_admissible_normal_forms():
    rng = np.random.default_rng(2)
    spec = verify_partial_hyperbolicity(np.diag([0.5, 1.0, 2.0]))
    rep = _report(np.diag([0.5, 1, 2]))
    seen = set()
    for _ in range(300):
        a = rng.normal() * rng.integers(0, 2)
        b = rng.normal() * rng.integers(0, 2)
        T = normal_form_tensor(a, -a, b, tuple(rng.permutation(3)))
        T = T.change_basis(rng.normal(size=(3, 3)) + 3 * np.eye(3))
        branch = theorem3d_branch(rep, spec, T)
        assert branch.group not in ("Su2", "Euc")
        seen.add(branch.group)
    assert {"Abelian", "Heis3", "Sol", "Sl2"} <= seen


def test_branch_evidence_is_json_ready(systems):
    sys_ = systems["sol"]
    pts = sys_.manifold.sample(np.random.default_rng(3), 50)
    rep = autonomy_check(sys_.diffeo, sys_.framing, pts)
    br = theorem3d_branch(rep, verify_partial_hyperbolicity(rep.M), structure_constants(sys_.framing, pts))
    d = br.to_dict()
    assert d["tag"] == "AlgebraicBranch" and d["group"] == "Sol"
    assert d["evidence"]["algebra"]["tag"] == "Sol"
