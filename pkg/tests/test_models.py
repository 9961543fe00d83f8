import json

import numpy as np
import pytest

from mrgeom import models
from mrgeom.models import ETA, XI, ZETA, CoefficientField, ModelError
from mrgeom.poly import parse_polynomial, random_polynomial

BOX2 = [(0, 1), (0, 1)]
BOX3 = [(-1, 1), (-1, 2), (0, 1)]
U = parse_polynomial("x1*x2 - x1^2*x2 - x1*x2^2 + x1^2*x2^2")


def P(text):
    return parse_polynomial(text)


def H(text):
    return parse_polynomial(text, names=("xi", "eta", "zeta"))


def test_euclidean_identity_model():
    m = models.euclidean_model(CoefficientField.identity(2), BOX2, 4)
    assert len(m) == 16
    assert np.array_equal(m.z, np.broadcast_to(np.eye(2), (16, 2, 2)))
    assert not np.any(m.coordinate_laplacians)
    assert m.weights.sum() == pytest.approx(1)
    assert m.invariant_violations() == []


def test_euclidean_variable_coefficients():
    a = CoefficientField.diagonal([P("1 + x1^2"), 1])
    m = models.euclidean_model(a, BOX2, 5)
    x1 = m.ycoords[:, 0]
    assert np.allclose(m.z[:, 0, 0], 1 + x1**2)
    assert np.allclose(m.z[:, 1, 1], 1)
    assert np.allclose(m.coordinate_laplacians[:, 0], 2 * x1)
    assert not np.any(m.coordinate_laplacians[:, 1])


def test_ellipticity_violation_reports_node():
    a = CoefficientField.diagonal([P("x1"), 1], ellipticity=0.5)
    with pytest.raises(ModelError, match="ellipticity violated at node"):
        models.euclidean_model(a, BOX2, 4)


def test_coefficient_field_validation():
    with pytest.raises(ModelError):
        CoefficientField(((1, P("x1")), (0, 1)))
    with pytest.raises(ModelError):
        CoefficientField(((1, 0),))
    with pytest.raises(ModelError):
        CoefficientField(((1,),), ellipticity=0)
    with pytest.raises(ModelError):
        models.grid_cells(BOX2, 1)


def test_ibp_examples():
    a = CoefficientField.identity(2)
    r = models.euclidean_ibp_check(a, P("3"), P("1"), U, BOX2, 8)
    assert r.first == 0 and r.second == 0
    r = models.euclidean_ibp_check(a, P("x1"), P("1"), U, BOX2, 8)
    assert r.residual <= 1e-15
    assert not r.warnings


def test_ibp_quarter_per_doubling():
    a = CoefficientField.diagonal([P("1 + x1^2"), 1])
    recs = models.ibp_convergence(a, P("x1"), P("1"), U, BOX2, [8, 16, 32])
    ratios = [recs[k]["residual"] / recs[k + 1]["residual"] for k in range(2)]
    assert all(3.6 < q < 4.4 for q in ratios)
    assert set(recs[0]) == {"check", "residual", "grid", "order_estimate"}
    json.dumps(recs)


def test_ibp_warns_for_non_vanishing_u():
    r = models.euclidean_ibp_check(CoefficientField.identity(2), P("x1"), P("1"), P("x1"), BOX2, 4)
    assert r.warnings and "does not vanish" in r.warnings[0]


def test_heisenberg_fields():
    X, Y = models.heisenberg_X, models.heisenberg_Y
    assert X(XI) == 1 and Y(XI) == 0
    assert X(ETA) == 0 and Y(ETA) == 1
    assert X(ZETA) == -ETA / 2 and Y(ZETA) == XI / 2
    assert X(Y(ZETA)) - Y(X(ZETA)) == 1


def test_heisenberg_commutator_is_d_zeta(rng):
    X, Y = models.heisenberg_X, models.heisenberg_Y
    for _ in range(20):
        f = random_polynomial(rng, 3, 4)
        assert X(Y(f)) - Y(X(f)) == f.partial(2)


def test_heisenberg_Z():
    assert np.array_equal(models.heisenberg_Z([0, 0, 0]), np.diag([1.0, 1.0, 0.0]))
    assert models.determinant(models.heisenberg_Z_poly()).is_zero()
    lam = np.linalg.eigvalsh(models.heisenberg_Z([1, 1, 0]))
    assert np.sum(lam > 1e-12) == 2 and abs(lam[0]) <= 1e-12
    zp = models.heisenberg_Z_poly()
    q = np.array([0.3, -1.2, 0.7])
    assert np.allclose([[e.eval(q) for e in row] for row in zp], models.heisenberg_Z(q))


def test_heisenberg_model():
    m = models.heisenberg_model(BOX3, 3)
    assert len(m) == 27
    assert m.weights.sum() == pytest.approx(6)
    assert np.allclose(m.z, models.heisenberg_Z(m.ycoords))
    tr = np.trace(m.z, axis1=1, axis2=2)
    assert np.allclose(tr, 2 + (m.ycoords[:, 0] ** 2 + m.ycoords[:, 1] ** 2) / 4)
    assert not np.any(m.coordinate_laplacians)
    assert m.invariant_violations() == []
    assert all(p.is_zero() for p in models.heisenberg_coordinate_laplacians())


def test_sublaplacian_examples():
    assert models.sublaplacian(H("xi^2 + eta^2")) == 4
    assert models.sublaplacian(ZETA).is_zero()
    assert models.sublaplacian(ZETA * ZETA) == H("1/2*xi^2 + 1/2*eta^2")


def test_invariant_violations_detected():
    bad = models.CoordinateModel(weights=[1.0, -1.0], z=[np.eye(2), -np.eye(2)], ycoords=np.zeros((2, 2)))
    problems = bad.invariant_violations()
    assert any("weights" in p for p in problems)
    assert any("nonnegative definite" in p for p in problems)
    with pytest.raises(ModelError):
        models.CoordinateModel(weights=[1.0], z=[np.eye(2)], ycoords=np.zeros((1, 3)))
