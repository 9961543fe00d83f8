"""Reference coordinate models: divergence-form operators on boxes and the
first Heisenberg group.

Every backend produces a :class:`CoordinateModel`, a finite partition
``x_k`` with weights ``m_k``, metric matrices ``Z_k``, coordinate values
``y(x_k)`` and (optionally) coordinate Laplacians ``Ly^i(x_k)``.  The
Sierpinski gasket backend lives in :mod:`mrgeom.sg` and returns the same
type.

A Riemannian chart with a diagonal metric is just a :class:`CoefficientField`
here; there is no separate backend for it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .poly import HEISENBERG_NAMES, Polynomial, default_names

PSD_TOL = 1e-10


class ModelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CoordinateModel:
    weights: np.ndarray  # (K,)
    z: np.ndarray  # (K, d, d)
    ycoords: np.ndarray  # (K, d)
    coordinate_laplacians: np.ndarray | None = None  # (K, d)
    names: tuple[str, ...] = ()
    label: str = "model"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        z = np.asarray(self.z, dtype=float)
        y = np.asarray(self.ycoords, dtype=float)
        if z.ndim != 3 or z.shape[1] != z.shape[2] or z.shape[0] != len(w):
            raise ModelError("z must have shape (K, d, d) matching the weights")
        if y.shape != (len(w), z.shape[1]):
            raise ModelError("ycoords must have shape (K, d)")
        lap = self.coordinate_laplacians
        if lap is not None:
            lap = np.asarray(lap, dtype=float)
            if lap.shape != y.shape:
                raise ModelError("coordinate_laplacians must have shape (K, d)")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "ycoords", y)
        object.__setattr__(self, "coordinate_laplacians", lap)
        if not self.names:
            object.__setattr__(self, "names", default_names(z.shape[1]))

    @property
    def dim(self) -> int:
        return self.z.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    def invariant_violations(self) -> list[str]:
        """Failed invariants (symmetric PSD metrics, positive finite weights)."""
        problems = []
        if not np.all(self.weights > 0) or not np.isfinite(self.weights.sum()):
            problems.append("weights must be positive with finite total")
        asym = np.max(np.abs(self.z - np.swapaxes(self.z, 1, 2)), initial=0.0)
        if asym > 1e-12:
            problems.append(f"metric not symmetric (max asymmetry {asym:.3g})")
        lam = np.linalg.eigvalsh(0.5 * (self.z + np.swapaxes(self.z, 1, 2)))
        if len(lam) and lam.min() < -PSD_TOL:
            problems.append(f"metric not nonnegative definite (min eigenvalue {lam.min():.3g})")
        return problems


# Euclidean divergence-form operators ----------------------------------------


@dataclass(frozen=True)
class CoefficientField:
    """Symmetric polynomial coefficient matrix ``a_ij(x)`` with ellipticity bound ``c``."""

    entries: tuple[tuple[Polynomial, ...], ...]
    ellipticity: float = 1.0

    def __post_init__(self):
        rows = tuple(tuple(Polynomial._coerce(a) for a in row) for row in self.entries)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ModelError("coefficient matrix must be square")
        for i, j in itertools.combinations(range(n), 2):
            if rows[i][j] != rows[j][i]:
                raise ModelError(f"coefficients not symmetric at ({i + 1},{j + 1})")
        if not self.ellipticity > 0:
            raise ModelError("ellipticity constant must be positive")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def identity(cls, n: int) -> "CoefficientField":
        return cls(tuple(tuple(Polynomial.constant(int(i == j)) for j in range(n)) for i in range(n)))

    @classmethod
    def diagonal(cls, diag: Sequence, ellipticity: float = 1.0) -> "CoefficientField":
        n = len(diag)
        zero = Polynomial()
        return cls(
            tuple(tuple(Polynomial._coerce(diag[i]) if i == j else zero for j in range(n)) for i in range(n)),
            ellipticity,
        )

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        n = self.dim
        out = np.empty(pts.shape[:-1] + (n, n))
        for i in range(n):
            for j in range(n):
                out[..., i, j] = self.entries[i][j](pts)
        return out

    def divergence_rows(self) -> list[Polynomial]:
        """``sum_j d a_ij / d x_j`` for each row ``i``."""
        return [
            sum((self.entries[i][j].partial(j) for j in range(self.dim)), Polynomial())
            for i in range(self.dim)
        ]


def grid_cells(box: Sequence[tuple[float, float]], grid) -> tuple[np.ndarray, float]:
    """Centres and common volume of a uniform midpoint partition of ``box``."""
    box = [(float(lo), float(hi)) for lo, hi in box]
    counts = [int(grid)] * len(box) if np.isscalar(grid) else [int(g) for g in grid]
    if len(counts) != len(box):
        raise ModelError("one grid count per axis required")
    if min(counts) < 2:
        raise ModelError("grid must have at least 2 cells per axis")
    axes = [lo + (np.arange(n) + 0.5) * (hi - lo) / n for (lo, hi), n in zip(box, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([m.ravel() for m in mesh], axis=1)
    volume = math.prod((hi - lo) / n for (lo, hi), n in zip(box, counts))
    return centers, volume


def euclidean_model(a: CoefficientField, box, grid) -> CoordinateModel:
    centers, volume = grid_cells(box, grid)
    if len(box) != a.dim:
        raise ModelError("box dimension does not match the coefficient field")
    z = a(centers)
    lam = np.linalg.eigvalsh(z)[:, 0]
    bad = np.nonzero(lam < a.ellipticity - 1e-12)[0]
    if len(bad):
        k = int(bad[0])
        raise ModelError(
            f"ellipticity violated at node {centers[k].tolist()}: smallest eigenvalue "
            f"{lam[k]:.6g} < {a.ellipticity}"
        )
    lap = np.stack([row(centers) for row in a.divergence_rows()], axis=1)
    return CoordinateModel(
        weights=np.full(len(centers), volume),
        z=z,
        ycoords=centers,
        coordinate_laplacians=lap,
        names=default_names(a.dim, "x"),
        label="euclidean",
        meta={"grid": grid, "box": [list(b) for b in box]},
    )


@dataclass(frozen=True)
class IBPResult:
    grid: int
    first: float  # int g grad f . a grad u
    second: float  # int div(a g grad f) u
    residual: float
    boundary_max: float
    warnings: tuple[str, ...] = ()

    def to_record(self, order_estimate: float | None = None) -> dict:
        return {
            "check": "euclidean_ibp",
            "residual": self.residual,
            "grid": self.grid,
            "order_estimate": order_estimate,
        }


def _boundary_samples(box, n: int = 33) -> np.ndarray:
    box = [(float(lo), float(hi)) for lo, hi in box]
    axes = [np.linspace(lo, hi, n) for lo, hi in box]
    pts = []
    for d, (lo, hi) in enumerate(box):
        for face in (lo, hi):
            grids = [axes[k] if k != d else np.array([face]) for k in range(len(box))]
            mesh = np.meshgrid(*grids, indexing="ij")
            pts.append(np.stack([m.ravel() for m in mesh], axis=1))
    return np.concatenate(pts)


def euclidean_ibp_check(
    a: CoefficientField, f: Polynomial, g: Polynomial, u: Polynomial, box, grid
) -> IBPResult:
    """Midpoint-rule residual of ``int g grad f . a grad u + int div(a g grad f) u``.

    For ``u`` vanishing on the box boundary the exact value is zero, so the
    residual is pure quadrature error, ``O(h^2)``.
    """
    n = a.dim
    centers, volume = grid_cells(box, grid)
    flux = [
        sum((a.entries[i][j] * g * f.partial(j) for j in range(n)), Polynomial()) for i in range(n)
    ]
    div_flux = sum((flux[i].partial(i) for i in range(n)), Polynomial())
    first_integrand = sum((flux[i] * u.partial(i) for i in range(n)), Polynomial())
    first = float(np.sum(first_integrand(centers)) * volume)
    second = float(np.sum((div_flux * u)(centers)) * volume)

    bmax = float(np.max(np.abs(u(_boundary_samples(box)))))
    warnings = ()
    if bmax > 1e-12:
        warnings = (f"test function does not vanish on the boundary (max |u| = {bmax:.3g})",)
    return IBPResult(
        grid=int(grid) if np.isscalar(grid) else int(min(grid)),
        first=first,
        second=second,
        residual=abs(first + second),
        boundary_max=bmax,
        warnings=warnings,
    )


def observed_orders(hs: Sequence[float], errors: Sequence[float]) -> list[float]:
    """``log(e_k / e_{k+1}) / log(h_k / h_{k+1})`` for consecutive refinements."""
    out = []
    for (h0, e0), (h1, e1) in zip(zip(hs, errors), zip(hs[1:], errors[1:])):
        out.append(math.log(e0 / e1) / math.log(h0 / h1))
    return out


def ibp_convergence(a, f, g, u, box, grids: Sequence[int]) -> list[dict]:
    """Run :func:`euclidean_ibp_check` on successive grids and estimate the order."""
    results = [euclidean_ibp_check(a, f, g, u, box, n) for n in grids]
    orders = observed_orders([1.0 / n for n in grids], [r.residual for r in results])
    return [r.to_record(None if k == 0 else orders[k - 1]) for k, r in enumerate(results)]


# Heisenberg group --------------------------------------------------------------

XI, ETA, ZETA = (Polynomial.variable(i) for i in range(3))
HALF = Fraction(1, 2)


def heisenberg_X(f: Polynomial) -> Polynomial:
    """Left-invariant field ``d/dxi - (eta/2) d/dzeta``."""
    return f.partial(0) - HALF * ETA * f.partial(2)


def heisenberg_Y(f: Polynomial) -> Polynomial:
    """Left-invariant field ``d/deta + (xi/2) d/dzeta``."""
    return f.partial(1) + HALF * XI * f.partial(2)


def heisenberg_Z_poly() -> list[list[Polynomial]]:
    """The metric ``Z(q)`` as a matrix of polynomials in ``(xi, eta, zeta)``."""
    one, zero = Polynomial.constant(1), Polynomial()
    return [
        [one, zero, -HALF * ETA],
        [zero, one, HALF * XI],
        [-HALF * ETA, HALF * XI, Fraction(1, 4) * (XI * XI + ETA * ETA)],
    ]


def heisenberg_Z(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    xi, eta = q[..., 0], q[..., 1]
    z = np.zeros(q.shape[:-1] + (3, 3))
    z[..., 0, 0] = 1.0
    z[..., 1, 1] = 1.0
    z[..., 0, 2] = z[..., 2, 0] = -eta / 2
    z[..., 1, 2] = z[..., 2, 1] = xi / 2
    z[..., 2, 2] = (xi**2 + eta**2) / 4
    return z


def determinant(m: list[list[Polynomial]]) -> Polynomial:
    """Cofactor expansion; fine for the small matrices used here."""
    n = len(m)
    if n == 1:
        return m[0][0]
    total = Polynomial()
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * determinant(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def sublaplacian(f: Polynomial) -> Polynomial:
    return heisenberg_X(heisenberg_X(f)) + heisenberg_Y(heisenberg_Y(f))


def heisenberg_model(box, grid) -> CoordinateModel:
    centers, volume = grid_cells(box, grid)
    if centers.shape[1] != 3:
        raise ModelError("the Heisenberg model needs a box in R^3")
    return CoordinateModel(
        weights=np.full(len(centers), volume),
        z=heisenberg_Z(centers),
        ycoords=centers,
        # X^2 y^i + Y^2 y^i vanishes identically for all three coordinates
        coordinate_laplacians=np.zeros_like(centers),
        names=HEISENBERG_NAMES,
        label="heisenberg",
        meta={"grid": grid, "box": [list(b) for b in box]},
    )


def heisenberg_coordinate_laplacians() -> list[Polynomial]:
    return [sublaplacian(Polynomial.variable(i)) for i in range(3)]
