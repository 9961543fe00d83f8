"""The Sierpinski gasket in harmonic coordinates.

Cells ``K_w`` are addressed by words over ``{1, 2, 3}``; the corners of every
cell are ordered as the images of ``(p1, p2, p3)``.  A harmonic function is
determined by its three boundary values, and the values on child ``i`` are
``A_i b`` (the 1/5-2/5 rule).  With the two orthonormal harmonic coordinates
``y1, y2`` this gives, per cell,

* the Gram matrix ``G_w = (5/3)^|w| B(b_w^j, b_w^k)`` of mutual energies,
* the Kusuoka mass ``nu(K_w) = trace G_w``,
* the measurable metric ``Z_w = G_w / nu(K_w)``.

``Q(a, b, c) = (a-b)^2 + (b-c)^2 + (a-c)^2`` is the level-0 energy and ``B``
its polarization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graph_form import GraphForm, edge_energy, energy, energy_measure
from .models import CoordinateModel
from .poly import Polynomial

MAX_LEVEL = 10
SCALE = 5.0 / 3.0
CELL_EDGES = ((0, 1), (1, 2), (0, 2))
BOUNDARY_SEEDS = ((-1, 1, 0), (-1, -1, 2))

_F = Fraction
_EXACT_A = (
    ((_F(1), _F(0), _F(0)), (_F(2, 5), _F(2, 5), _F(1, 5)), (_F(2, 5), _F(1, 5), _F(2, 5))),
    ((_F(2, 5), _F(2, 5), _F(1, 5)), (_F(0), _F(1), _F(0)), (_F(1, 5), _F(2, 5), _F(2, 5))),
    ((_F(2, 5), _F(1, 5), _F(2, 5)), (_F(1, 5), _F(2, 5), _F(2, 5)), (_F(0), _F(0), _F(1))),
)


class LevelError(ValueError):
    pass


def _check_level(n: int, max_level: int = MAX_LEVEL) -> int:
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise LevelError(f"level must be a nonnegative integer, got {n!r}")
    if n > max_level:
        raise LevelError(f"level {n} exceeds the configured maximum {max_level}")
    return int(n)


def q_form(u, v=None) -> np.ndarray:
    """Polarized level-0 energy ``B(u, v)`` over the last axis (length 3)."""
    u = np.asarray(u, dtype=float)
    v = u if v is None else np.asarray(v, dtype=float)
    return sum((u[..., p] - u[..., q]) * (v[..., p] - v[..., q]) for p, q in CELL_EDGES)


def extension_matrices(exact: bool = False):
    """Harmonic extension matrices ``(A1, A2, A3)``.

    Row ``k`` of ``A_i`` gives the value at corner ``k`` of child ``i`` from the
    three boundary values of the parent.
    """
    if exact:
        return _EXACT_A
    return tuple(np.array([[float(x) for x in row] for row in a]) for a in _EXACT_A)


@dataclass(frozen=True)
class BoundaryPair:
    b1: np.ndarray
    b2: np.ndarray

    def as_array(self) -> np.ndarray:
        """Shape ``(3, 2)``: corner by coordinate."""
        return np.stack([self.b1, self.b2], axis=1)


def coordinate_boundary_values() -> BoundaryPair:
    """Boundary values of ``y1, y2``: ``(-1,1,0)/sqrt6`` and ``(-1,-1,2)/sqrt18``."""
    s1, s2 = (np.array(s, dtype=float) for s in BOUNDARY_SEEDS)
    return BoundaryPair(s1 / math.sqrt(q_form(s1)), s2 / math.sqrt(q_form(s2)))


def words(n: int) -> list[str]:
    """All words of length ``n`` in lexicographic order."""
    out = [""]
    for _ in range(_check_level(n, max_level=64)):
        out = [w + c for w in out for c in "123"]
    return out


@dataclass(frozen=True)
class CellData:
    word: str
    boundary: np.ndarray  # (3, 2)
    gram: np.ndarray  # (2, 2)
    nu: float
    z: np.ndarray  # (2, 2)

    @property
    def level(self) -> int:
        return len(self.word)

    @property
    def center(self) -> np.ndarray:
        return self.boundary.mean(axis=0)

    @property
    def eig_ratio(self) -> float:
        return float(eigen_ratio(self.z[None])[0])


def eigen_ratio(z: np.ndarray) -> np.ndarray:
    """``lambda_min / lambda_max`` for a stack of symmetric 2x2 matrices."""
    lam = np.linalg.eigvalsh(z)
    return lam[:, 0] / lam[:, 1]


@dataclass(frozen=True, eq=False)
class CellTable:
    """All cells of one level, stored as arrays in lexicographic word order."""

    level: int
    boundary: np.ndarray  # (3^n, 3, 2)
    gram: np.ndarray  # (3^n, 2, 2)
    nu: np.ndarray  # (3^n,)
    z: np.ndarray  # (3^n, 2, 2)

    def __len__(self) -> int:
        return len(self.nu)

    @property
    def words(self) -> list[str]:
        return words(self.level)

    @property
    def centers(self) -> np.ndarray:
        return self.boundary.mean(axis=1)

    def eig_ratios(self) -> np.ndarray:
        return eigen_ratio(self.z)

    def __getitem__(self, k: int) -> CellData:
        return CellData(
            word=_word_of_index(k, self.level),
            boundary=self.boundary[k],
            gram=self.gram[k],
            nu=float(self.nu[k]),
            z=self.z[k],
        )

    def index(self, word: str) -> int:
        if len(word) != self.level:
            raise KeyError(word)
        return word_index(word)


def word_index(word: str) -> int:
    """Position of ``word`` among the words of its length (lexicographic)."""
    k = 0
    for c in word:
        k = 3 * k + "123".index(c)
    return k


def _word_of_index(k: int, n: int) -> str:
    letters = []
    for _ in range(n):
        k, r = divmod(k, 3)
        letters.append("123"[r])
    return "".join(reversed(letters))


def _boundary_recursion(n: int, start: np.ndarray) -> np.ndarray:
    a = np.stack(extension_matrices())
    cells = start[None]
    for _ in range(n):
        # children vary fastest, which keeps lexicographic order
        cells = np.einsum("ikl,wlj->wikj", a, cells).reshape(-1, *start.shape)
    return cells


def _gram(boundary: np.ndarray, level: int) -> np.ndarray:
    u = np.swapaxes(boundary, 1, 2)  # (K, 2, 3)
    return SCALE**level * q_form(u[:, :, None, :], u[:, None, :, :])


def cell_table(n: int) -> CellTable:
    n = _check_level(n)
    boundary = _boundary_recursion(n, coordinate_boundary_values().as_array())
    gram = _gram(boundary, n)
    nu = np.trace(gram, axis1=1, axis2=2)
    return CellTable(level=n, boundary=boundary, gram=gram, nu=nu, z=gram / nu[:, None, None])


def cell_enumerate(n: int) -> list[CellData]:
    table = cell_table(n)
    return [table[k] for k in range(len(table))]


def exact_cell_gram(word: str) -> tuple[Fraction, Fraction, Fraction]:
    """``(G11, G22, G12^2 * sign(G12))`` in exact arithmetic.

    ``G12`` itself carries a factor ``1/sqrt(108)``, so its signed square is
    returned instead.
    """
    a = extension_matrices(exact=True)
    seeds = [tuple(Fraction(x) for x in s) for s in BOUNDARY_SEEDS]
    vecs = seeds
    for c in word:
        m = a["123".index(c)]
        vecs = [tuple(sum(m[r][k] * v[k] for k in range(3)) for r in range(3)) for v in vecs]

    def b(u, v):
        return sum((u[p] - u[q]) * (v[p] - v[q]) for p, q in CELL_EDGES)

    scale = Fraction(5, 3) ** len(word)
    n1, n2 = b(seeds[0], seeds[0]), b(seeds[1], seeds[1])
    g11 = scale * b(vecs[0], vecs[0]) / n1
    g22 = scale * b(vecs[1], vecs[1]) / n2
    g12_raw = scale * b(vecs[0], vecs[1])
    g12_sq = g12_raw * g12_raw / (n1 * n2)
    return g11, g22, g12_sq if g12_raw >= 0 else -g12_sq


def kusuoka_additivity_check(n: int) -> float:
    """Largest ``|nu(K_w) - sum_i nu(K_wi)|`` over ``|w| < n``."""
    n = _check_level(n)
    if n < 1:
        raise LevelError("additivity needs n >= 1")
    worst = 0.0
    child = cell_table(n).nu
    for level in range(n - 1, -1, -1):
        parent = cell_table(level).nu
        worst = max(worst, float(np.max(np.abs(parent - child.reshape(-1, 3).sum(axis=1)))))
        child = parent
    return worst


def gram_additivity_check(n: int) -> float:
    """Largest entrywise ``|G_w - sum_i G_wi|`` over ``|w| < n``."""
    worst = 0.0
    child = cell_table(n).gram
    for level in range(n - 1, -1, -1):
        parent = cell_table(level).gram
        worst = max(worst, float(np.max(np.abs(parent - child.reshape(-1, 3, 2, 2).sum(axis=1)))))
        child = parent
    return worst


# vertices of V_n -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VertexSet:
    """``V_n`` with canonical addresses and harmonic-coordinate values.

    ``cell_vertices[k]`` lists the vertex ids of the three corners of cell
    ``k``.  Vertex ids follow the first appearance of each vertex when the
    (word, corner) pairs are scanned in lexicographic order, which is also
    the canonical address stored in ``addresses``.
    """

    level: int
    coords: np.ndarray  # (V, 2)
    lattice: np.ndarray  # (V, 3) integer barycentric coordinates scaled by 2^n
    cell_vertices: np.ndarray  # (3^n, 3)
    addresses: list[tuple[str, int]]

    def __len__(self) -> int:
        return len(self.coords)

    @property
    def boundary_ids(self) -> list[int]:
        """Ids of ``p1, p2, p3``."""
        top = 2**self.level
        return [int(np.nonzero(self.lattice[:, c] == top)[0][0]) for c in range(3)]


def _lattice_corners(n: int) -> np.ndarray:
    corners = np.eye(3, dtype=np.int64)[None]  # (1, 3 corners, 3 barycentric)
    for _ in range(n):
        # child i corner k sits at the midpoint of parent corners k and i; doubling keeps integers
        children = corners[:, None, :, :] + corners[:, :, None, :]
        corners = children.reshape(-1, 3, 3)
    return corners


def coordinates_at_vertices(n: int, tol: float = 1e-12) -> VertexSet:
    n = _check_level(n)
    table = cell_table(n)
    lattice = _lattice_corners(n).reshape(-1, 3)
    values = table.boundary.reshape(-1, 2)
    keys, first, inverse = np.unique(lattice, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    ids = rank[inverse]
    coords = values[first[order]]
    gap = float(np.max(np.abs(values - coords[ids]), initial=0.0))
    if gap > tol:
        raise RuntimeError(f"inconsistent coordinate values at a shared vertex (gap {gap:.3g})")
    addresses = [(_word_of_index(int(f) // 3, n), int(f) % 3) for f in first[order]]
    return VertexSet(
        level=n,
        coords=coords,
        lattice=keys[order],
        cell_vertices=ids.reshape(-1, 3),
        addresses=addresses,
    )


def vertex_count(n: int) -> int:
    return (3 ** (n + 1) + 3) // 2


def sg_graph(n: int, vertices: VertexSet | None = None) -> GraphForm:
    """Level-``n`` approximating graph with conductance ``(5/3)^n`` on each edge.

    The vertex measure gives each corner a third of the Kusuoka mass of every
    cell containing it.
    """
    n = _check_level(n)
    vs = vertices if vertices is not None else coordinates_at_vertices(n)
    cv = vs.cell_vertices
    edges = np.concatenate([cv[:, [p, q]] for p, q in CELL_EDGES])
    mu = np.zeros(len(vs))
    np.add.at(mu, cv.reshape(-1), np.repeat(cell_table(n).nu / 3.0, 3))
    return GraphForm(mu=mu, edges=edges, conductance=np.full(len(edges), SCALE**n))


def graph_energy_of_composite(F: Polynomial, G: Polynomial, n: int) -> float:
    """``E_n(F o y, G o y)`` on the level-``n`` graph."""
    vs = coordinates_at_vertices(n)
    graph = sg_graph(n, vs)
    return energy(graph, F(vs.coords), G(vs.coords))


def cell_energy_from_graph(graph: GraphForm, vs: VertexSet, word: str, f, g=None) -> float:
    """Energy measure of ``K_w`` read off the graph oracle.

    ``graph`` must come from :func:`sg_graph` (edge ``e * 3^n + k`` is edge
    ``CELL_EDGES[e]`` of cell ``k``).  Vertices strictly inside ``K_w`` keep
    their whole mass; a corner of ``K_w`` keeps only the share carried by
    edges lying in ``K_w``.
    """
    n, depth = vs.level, len(word)
    if depth > n:
        raise LevelError("cell is finer than the graph")
    span = 3 ** (n - depth)
    k0 = word_index(word) * span
    cells = vs.cell_vertices[k0:k0 + span]
    corners = [int(cells[word_index(str(c + 1) * (n - depth)), c]) for c in range(3)]
    interior = np.setdiff1d(np.unique(cells), corners)

    total = energy_measure(graph, f, g).mass(interior)
    half = 0.5 * edge_energy(graph, f, g)
    n_cells = 3**n
    for e in range(len(CELL_EDGES)):
        ids = e * n_cells + np.arange(k0, k0 + span)
        touches = np.isin(graph.edges[ids], corners).any(axis=1)
        total += float(np.sum(half[ids][touches]))
    return float(total)


# rank-one tendency ------------------------------------------------------------


@dataclass(frozen=True)
class LevelStats:
    level: int
    mean_ratio: float  # nu-weighted mean of lambda_min / lambda_max
    max_ratio: float
    unweighted_mean_ratio: float | None
    cells: int
    sampled: bool

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "mean_ratio": self.mean_ratio,
            "max_ratio": self.max_ratio,
            "unweighted_mean_ratio": self.unweighted_mean_ratio,
            "cells": self.cells,
            "sampled": self.sampled,
        }


EXHAUSTIVE_LEVEL = 8


def _sample_words(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    """Boundary values of ``count`` random level-``n`` cells drawn with probability ``nu(K_w)/2``."""
    a = np.stack(extension_matrices())
    cur = np.repeat(coordinate_boundary_values().as_array()[None], count, axis=0)
    for level in range(n):
        kids = np.einsum("ikl,slj->sikj", a, cur)  # (S, 3, 3, 2)
        u = np.swapaxes(kids, 2, 3)
        nu = q_form(u).sum(axis=2)  # (S, 3), common factor dropped
        p = nu / nu.sum(axis=1, keepdims=True)
        choice = (rng.random(count)[:, None] > np.cumsum(p, axis=1)).sum(axis=1)
        choice = np.minimum(choice, 2)
        cur = kids[np.arange(count), choice]
    return cur


def rank_one_decay(n: int, sample_count: int = 20000, seed: int = 0) -> list[LevelStats]:
    """Eigenvalue-ratio statistics of ``Z_w`` per level ``0..n``.

    The mean is taken with respect to ``nu`` (the measure in which the
    rank-one property holds almost everywhere).  Levels up to
    ``EXHAUSTIVE_LEVEL`` are enumerated; deeper levels are estimated from
    ``sample_count`` cells drawn with probability ``nu(K_w) / nu(K)``, whose
    plain average estimates the same weighted mean.
    """
    n = _check_level(n, max_level=64)
    rng = np.random.default_rng(seed)
    stats = []
    for level in range(n + 1):
        if level <= EXHAUSTIVE_LEVEL:
            t = cell_table(level)
            r = t.eig_ratios()
            stats.append(
                LevelStats(level, float(np.dot(r, t.nu) / t.nu.sum()), float(r.max()), float(r.mean()), len(r), False)
            )
        else:
            b = _sample_words(rng, level, sample_count)
            gram = _gram(b, level)
            z = gram / np.trace(gram, axis1=1, axis2=2)[:, None, None]
            r = eigen_ratio(z)
            stats.append(LevelStats(level, float(r.mean()), float(r.max()), None, sample_count, True))
    return stats


# coordinate model ----------------------------------------------------------------


def sg_model(n: int) -> CoordinateModel:
    """Cell-resolution coordinate model: ``m = nu``, centroid representatives, ``Ly^i = 0``."""
    t = cell_table(n)
    return CoordinateModel(
        weights=t.nu,
        z=t.z,
        ycoords=t.centers,
        coordinate_laplacians=np.zeros((len(t), 2)),
        names=("y1", "y2"),
        label="sg",
        meta={"level": t.level, "boundary_seeds": [list(s) for s in BOUNDARY_SEEDS]},
    )


def bounding_triangle_check(vs: VertexSet, tol: float = 1e-12) -> float:
    """Largest violation of the maximum principle: distance outside the boundary triangle.

    Returns the most negative barycentric weight (0 if every point is inside).
    """
    tri = vs.coords[vs.boundary_ids]
    m = np.vstack([tri.T, np.ones(3)])
    bary = np.linalg.solve(m, np.vstack([vs.coords.T, np.ones(len(vs))]))
    return float(max(0.0, -bary.min()))
