"""Dirichlet forms on finite weighted graphs.

A :class:`GraphForm` is the finite-state stand-in for a strongly local
Dirichlet form: conductances ``c_pq`` on an undirected edge list and a
strictly positive vertex measure ``mu``.  Everything here is exact linear
algebra, so these routines serve as the brute-force reference for the
continuum formulas used elsewhere in the package.

Vertex functions are plain 1-d arrays indexed like ``mu``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


class GraphFormError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GraphForm:
    """Edges are stored once with ``edges[:, 0] < edges[:, 1]``."""

    mu: np.ndarray
    edges: np.ndarray
    conductance: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        cond = np.asarray(self.conductance, dtype=float).reshape(-1)
        if mu.ndim != 1 or np.any(~(mu > 0)):
            raise GraphFormError("vertex measure must be strictly positive")
        if len(edges) != len(cond):
            raise GraphFormError("one conductance per edge required")
        if np.any(cond < 0):
            raise GraphFormError("conductances must be nonnegative")
        if len(edges) and (edges.min() < 0 or edges.max() >= len(mu)):
            raise GraphFormError("edge endpoint outside the vertex set")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise GraphFormError("self-loops are not allowed (c_pp = 0)")
        lo, hi = np.minimum(edges[:, 0], edges[:, 1]), np.maximum(edges[:, 0], edges[:, 1])
        edges = np.stack([lo, hi], axis=1)
        if len(np.unique(edges, axis=0)) != len(edges):
            raise GraphFormError("duplicate edge")
        for name, arr in (("mu", mu), ("edges", edges), ("conductance", cond)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_matrix(cls, conductances, mu) -> "GraphForm":
        c = np.asarray(conductances, dtype=float)
        if c.shape[0] != c.shape[1] or not np.array_equal(c, c.T):
            raise GraphFormError("conductance matrix must be symmetric")
        if np.any(np.diag(c) != 0):
            raise GraphFormError("self-loops are not allowed (c_pp = 0)")
        i, j = np.nonzero(np.triu(c, 1))
        return cls(mu=mu, edges=np.stack([i, j], axis=1), conductance=c[i, j])

    @property
    def n_vertices(self) -> int:
        return len(self.mu)

    def conductance_matrix(self) -> np.ndarray:
        n = self.n_vertices
        c = np.zeros((n, n))
        i, j = self.edges.T
        c[i, j] = self.conductance
        c[j, i] = self.conductance
        return c

    def laplacian_matrix(self) -> np.ndarray:
        """Dense combinatorial Laplacian ``D - C`` (positive semidefinite)."""
        c = self.conductance_matrix()
        return np.diag(c.sum(axis=1)) - c

    def generator_matrix(self) -> np.ndarray:
        """Dense matrix of ``L``, i.e. ``-diag(1/mu) (D - C)``."""
        return -self.laplacian_matrix() / self.mu[:, None]

    def components(self) -> np.ndarray:
        n = self.n_vertices
        live = self.conductance > 0
        i, j = self.edges[live].T
        adj = coo_matrix((np.ones(len(i)), (i, j)), shape=(n, n))
        _, labels = connected_components(adj, directed=False)
        return labels


@dataclass(frozen=True)
class VertexMeasure:
    """A signed measure on the vertex set, given by its point masses."""

    values: np.ndarray

    def total(self) -> float:
        return float(np.sum(self.values))

    def mass(self, vertices) -> float:
        return float(np.sum(self.values[np.asarray(vertices, dtype=np.int64)]))

    def integrate(self, phi) -> float:
        return float(np.dot(np.asarray(phi, dtype=float), self.values))

    def __len__(self) -> int:
        return len(self.values)


def _vec(G: GraphForm, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (G.n_vertices,):
        raise GraphFormError(f"vertex function must have shape ({G.n_vertices},), got {f.shape}")
    return f


def edge_energy(G: GraphForm, f, g=None) -> np.ndarray:
    """Per-edge contributions ``c_pq (f(p)-f(q)) (g(p)-g(q))``."""
    f = _vec(G, f)
    g = f if g is None else _vec(G, g)
    i, j = G.edges.T
    return G.conductance * (f[i] - f[j]) * (g[i] - g[j])


def energy(G: GraphForm, f, g=None) -> float:
    """``E(f, g) = 1/2 sum_{p,q} c_pq (f(p)-f(q)) (g(p)-g(q))``."""
    return float(np.sum(edge_energy(G, f, g)))


def energy_measure(G: GraphForm, f, g=None) -> VertexMeasure:
    """Mutual energy measure; each edge gives half its term to each endpoint."""
    half = 0.5 * edge_energy(G, f, g)
    out = np.zeros(G.n_vertices)
    np.add.at(out, G.edges[:, 0], half)
    np.add.at(out, G.edges[:, 1], half)
    return VertexMeasure(out)


def verify_energy_measure_identity(G: GraphForm, f, g, phi) -> float:
    """Residual of ``int phi dGamma(f,g) = 1/2 (E(f,g phi) + E(g,f phi) - E(fg,phi))``."""
    f, g, phi = _vec(G, f), _vec(G, g), _vec(G, phi)
    lhs = energy_measure(G, f, g).integrate(phi)
    rhs = 0.5 * (energy(G, f, g * phi) + energy(G, g, f * phi) - energy(G, f * g, phi))
    return abs(lhs - rhs)


def generator(G: GraphForm, f) -> np.ndarray:
    """``Lf(p) = (1/mu(p)) sum_q c_pq (f(q) - f(p))``."""
    f = _vec(G, f)
    i, j = G.edges.T
    flow = G.conductance * (f[j] - f[i])
    out = np.zeros(G.n_vertices)
    np.add.at(out, i, flow)
    np.add.at(out, j, -flow)
    return out / G.mu


def carre_du_champ(G: GraphForm, f, g) -> np.ndarray:
    """``1/2 (L(fg) - f Lg - g Lf)``; equals the density of Gamma(f,g) w.r.t. mu."""
    f, g = _vec(G, f), _vec(G, g)
    return 0.5 * (generator(G, f * g) - f * generator(G, g) - g * generator(G, f))


def resolvent_g1(G: GraphForm, f) -> np.ndarray:
    """Solve ``(I - L) u = f``, i.e. ``u = G_1 f``.

    The system is multiplied through by ``mu`` to get the symmetric positive
    definite matrix ``diag(mu) + D - C``.  Since ``G_1 c = c`` for constants,
    the solve runs on ``f - f[0]``, which keeps constant inputs exact.
    """
    f = _vec(G, f)
    if len(f) == 0:
        return f
    c = f[0]
    a = np.diag(G.mu) + G.laplacian_matrix()
    try:
        return c + np.linalg.solve(a, G.mu * (f - c))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - I - L is strictly diagonally dominant
        raise RuntimeError("singular resolvent system") from exc


def harmonic_solve(G: GraphForm, boundary, values) -> np.ndarray:
    """Energy-minimising extension of ``values`` given on ``boundary``.

    ``values`` may be a sequence aligned with ``boundary`` or a mapping
    ``vertex -> value``.
    """
    boundary = [int(b) for b in boundary]
    if not boundary:
        raise GraphFormError("underdetermined harmonic problem: empty boundary")
    if isinstance(values, dict):
        vals = np.array([float(values[b]) for b in boundary])
    else:
        vals = np.asarray(values, dtype=float)
    if len(set(boundary)) != len(boundary) or len(vals) != len(boundary):
        raise GraphFormError("boundary vertices and values must match one to one")

    labels = G.components()
    if set(labels.tolist()) - set(labels[boundary].tolist()):
        raise GraphFormError("underdetermined harmonic problem: a component misses the boundary")

    n = G.n_vertices
    u = np.zeros(n)
    u[boundary] = vals
    interior = np.setdiff1d(np.arange(n), boundary)
    if len(interior):
        lap = G.laplacian_matrix()
        rhs = -lap[np.ix_(interior, boundary)] @ vals
        u[interior] = np.linalg.solve(lap[np.ix_(interior, interior)], rhs)
    return u


def unit_contraction(f) -> np.ndarray:
    """``(f v 0) ^ 1``."""
    return np.clip(np.asarray(f, dtype=float), 0.0, 1.0)


# graph files -------------------------------------------------------------


def parse_graph(text: str) -> GraphForm:
    """Parse the line format ``v <id> <mu>`` / ``e <id1> <id2> <conductance>``.

    ``#`` starts a comment.  Vertex indices follow the order of the ``v`` lines.
    """
    ids: dict[str, int] = {}
    mu: list[float] = []
    edges: list[tuple[int, int]] = []
    cond: list[float] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "v" and len(parts) == 3:
                if parts[1] in ids:
                    raise GraphFormError(f"duplicate vertex {parts[1]!r}")
                ids[parts[1]] = len(mu)
                mu.append(float(parts[2]))
            elif parts[0] == "e" and len(parts) == 4:
                if parts[1] not in ids or parts[2] not in ids:
                    raise GraphFormError("edge refers to an undeclared vertex")
                edges.append((ids[parts[1]], ids[parts[2]]))
                cond.append(float(parts[3]))
            else:
                raise GraphFormError(f"unrecognised record {line!r}")
        except (GraphFormError, ValueError) as exc:
            raise GraphFormError(f"line {lineno}: {exc}") from None
    if not mu:
        raise GraphFormError("graph has no vertices")
    return GraphForm(
        mu=np.array(mu),
        edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        conductance=np.array(cond),
        labels=tuple(ids),
    )


def read_graph(path) -> GraphForm:
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def format_graph(G: GraphForm) -> str:
    labels = G.labels or tuple(str(i) for i in range(G.n_vertices))
    lines = [f"v {labels[p]} {m!r}" for p, m in enumerate(G.mu.tolist())]
    lines += [
        f"e {labels[p]} {labels[q]} {c!r}" for (p, q), c in zip(G.edges.tolist(), G.conductance.tolist())
    ]
    return "\n".join(lines) + "\n"


# standard families ---------------------------------------------------------


def path_graph(n: int, conductance: float = 1.0, mu: float = 1.0) -> GraphForm:
    edges = np.stack([np.arange(n - 1), np.arange(1, n)], axis=1)
    return GraphForm(mu=np.full(n, mu), edges=edges, conductance=np.full(n - 1, conductance))


def random_graph(
    rng: np.random.Generator,
    n: int,
    extra_edge_prob: float = 0.2,
    connected: bool = True,
) -> GraphForm:
    """Random graph with conductances and masses drawn from ``[0.1, 2]``.

    With ``connected=True`` a random spanning tree is laid down first.
    """
    pairs = set()
    if connected:
        order = rng.permutation(n)
        for k in range(1, n):
            a, b = int(order[k]), int(order[rng.integers(0, k)])
            pairs.add((min(a, b), max(a, b)))
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < extra_edge_prob:
                pairs.add((a, b))
    edges = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    return GraphForm(
        mu=rng.uniform(0.1, 2.0, size=n),
        edges=edges,
        conductance=rng.uniform(0.1, 2.0, size=len(edges)),
    )
