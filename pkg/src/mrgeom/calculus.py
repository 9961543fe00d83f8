"""Coordinate calculus over a :class:`~mrgeom.models.CoordinateModel`.

Functions ``f = F o y`` are represented by polynomials ``F`` in the model's
coordinates.  At a partition element ``x_k`` the differential ``(df)_x`` is
the coefficient vector ``grad F(y(x_k))`` in the spanning set
``{(dy^i)_x}``, and every pairing goes through the metric ``Z_k``.

The ``symbolic_*`` helpers do the same with a metric given as a matrix of
polynomials, which lets the Euclidean and Heisenberg identities be checked
as exact polynomial equalities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import sg
from .graph_form import energy
from .models import CoordinateModel
from .poly import Polynomial


class CalculusError(ValueError):
    pass


def _grad_values(F: Polynomial, model: CoordinateModel, points=None) -> np.ndarray:
    pts = model.ycoords if points is None else points
    return np.stack([F.partial(i)(pts) for i in range(model.dim)], axis=-1)


@dataclass(frozen=True)
class FiberElement:
    """``sum_i coeffs[i] (dy^i)_x`` times a scalar, at partition element ``base``."""

    base: int
    coeffs: np.ndarray
    scalar: float = 1.0

    @classmethod
    def differential(cls, F: Polynomial, model: CoordinateModel, k: int, G: Polynomial | None = None):
        """The element ``(dF o y) (G o y)`` at ``x_k`` (``G = 1`` by default)."""
        y = model.ycoords[k]
        coeffs = np.array([F.partial(i).eval(y) for i in range(model.dim)])
        scalar = 1.0 if G is None else G.eval(y)
        return cls(k, coeffs, scalar)


def fiber_inner(e1: FiberElement, e2: FiberElement, model: CoordinateModel) -> float:
    if e1.base != e2.base:
        raise CalculusError(f"fiber elements live at different points ({e1.base} vs {e2.base})")
    z = model.z[e1.base]
    return float(e1.scalar * e2.scalar * (e1.coeffs @ z @ e2.coeffs))


def energy_density(F: Polynomial, G: Polynomial, model: CoordinateModel) -> np.ndarray:
    """``<grad F, Z grad G>`` at every element (the density of ``Gamma(f, g)``)."""
    gf, gg = _grad_values(F, model), _grad_values(G, model)
    return np.einsum("ki,kij,kj->k", gf, model.z, gg)


def energy_form(F: Polynomial, G: Polynomial, model: CoordinateModel) -> float:
    """``sum_k <grad F(y_k), Z_k grad G(y_k)> m_k``."""
    return float(np.dot(energy_density(F, G, model), model.weights))


def gradient_pairing(F: Polynomial, j: int, model: CoordinateModel, k: int) -> float:
    """``(Z_k grad F(y_k))_j``, i.e. the pairing of ``df`` with ``dy^j``."""
    y = model.ycoords[k]
    grad = np.array([F.partial(i).eval(y) for i in range(model.dim)])
    return float((model.z[k] @ grad)[j])


def divergence_functional(F: Polynomial, G: Polynomial, U: Polynomial, model: CoordinateModel) -> float:
    """Coordinate expression of the distributional divergence of ``(dF) G`` tested on ``U``."""
    g = G(model.ycoords)
    return -float(np.dot(g * energy_density(F, U, model), model.weights))


def generator_values(F: Polynomial, model: CoordinateModel) -> np.ndarray:
    """``sum_ij d_i d_j F Z^ij + sum_i d_i F Ly^i`` at every element."""
    if model.coordinate_laplacians is None:
        raise CalculusError("generator formula requires Ly^i")
    pts = model.ycoords
    d = model.dim
    hess = np.empty((len(model), d, d))
    for i, row in enumerate(F.hessian(d)):
        for j, h in enumerate(row):
            hess[:, i, j] = h(pts)
    second = np.einsum("kij,kij->k", hess, model.z)
    first = np.einsum("ki,ki->k", _grad_values(F, model), model.coordinate_laplacians)
    return second + first


def generator_apply(F: Polynomial, model: CoordinateModel, k: int) -> float:
    if model.coordinate_laplacians is None:
        raise CalculusError("generator formula requires Ly^i")
    y = model.ycoords[k]
    d = model.dim
    total = 0.0
    for i, row in enumerate(F.hessian(d)):
        for j, h in enumerate(row):
            total += h.eval(y) * model.z[k, i, j]
        total += F.partial(i).eval(y) * model.coordinate_laplacians[k, i]
    return total


def leibniz_check(F: Polynomial, G: Polynomial, model: CoordinateModel, k: int) -> float:
    """Max deviation between ``grad(FG)`` and ``F grad G + G grad F`` at ``y_k``."""
    y = model.ycoords[k]
    prod = F * G
    lhs = np.array([prod.partial(i).eval(y) for i in range(model.dim)])
    rhs = np.array(
        [F.eval(y) * G.partial(i).eval(y) + G.eval(y) * F.partial(i).eval(y) for i in range(model.dim)]
    )
    return float(np.max(np.abs(lhs - rhs)))


# polynomial metrics -------------------------------------------------------------

PolyMatrix = Sequence[Sequence[Polynomial]]


def symbolic_gradient(F: Polynomial, z: PolyMatrix) -> list[Polynomial]:
    """``Z grad F`` as polynomials."""
    n = len(z)
    grad = [F.partial(i) for i in range(n)]
    return [sum((z[j][i] * grad[i] for i in range(n)), Polynomial()) for j in range(n)]


def symbolic_generator(F: Polynomial, z: PolyMatrix, laplacians: Sequence[Polynomial]) -> Polynomial:
    n = len(z)
    hess = F.hessian(n)
    out = Polynomial()
    for i in range(n):
        for j in range(n):
            out = out + hess[i][j] * z[i][j]
        out = out + F.partial(i) * laplacians[i]
    return out


# Sierpinski gasket checks -------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    check: str
    model: str
    level_or_grid: int
    lhs: float
    rhs: float
    residual: float
    relative: float | None

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "model": self.model,
            "level_or_grid": self.level_or_grid,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "relative": self.relative,
        }


def _relative(residual: float, scale: float) -> float | None:
    return residual / abs(scale) if scale != 0 else None


def kusuoka_kigami_check(F: Polynomial, G: Polynomial, n: int) -> CheckResult:
    """Graph energy ``E_n(F o y, G o y)`` against the cell sum ``energy_form`` at level ``n``."""
    lhs = sg.graph_energy_of_composite(F, G, n)
    rhs = energy_form(F, G, sg.sg_model(n))
    residual = abs(lhs - rhs)
    return CheckResult("kusuoka_kigami", "sg", n, lhs, rhs, residual, _relative(residual, lhs))


def weak_generator_check(F: Polynomial, U: Polynomial, n: int) -> CheckResult:
    """Compare ``E_n(F o y, U o y)`` with ``-sum_w tr(Z_w D^2F(y_w)) U(y_w) nu(K_w)``.

    Only a convergence experiment: the identity holds in the limit for ``U``
    vanishing on the three boundary points.
    """
    vs = sg.coordinates_at_vertices(n)
    graph = sg.sg_graph(n, vs)
    lhs = energy(graph, F(vs.coords), U(vs.coords))
    model = sg.sg_model(n)
    rhs = -float(np.dot(generator_values(F, model) * U(model.ycoords), model.weights))
    residual = abs(lhs - rhs)
    return CheckResult("weak_generator", "sg", n, lhs, rhs, residual, _relative(residual, lhs))
