"""Coordinate sequences built from resolvent functions on a finite graph.

Given nonzero ``f_1, ..., f_N`` the coordinates are

    y^i = 2^-i G_1 f_i / (|G_1 f_i|_sup + |f_i|_sup + E(G_1 f_i)^(1/2)),

the dominating measure is ``m = sum_i 2^i Gamma(y^i)`` and the metric is
``Z^ij = dGamma(y^i, y^j) / dm``.  :func:`verify_bounds` then checks every
inequality the construction promises and lists failures instead of raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph_form import GraphForm, VertexMeasure, energy, energy_measure, resolvent_g1

PSD_TOL = 1e-10
# slack for float comparisons against exact bounds
REL_SLACK = 1e-12


class BuilderError(ValueError):
    pass


def build_coordinates(G: GraphForm, fs) -> list[np.ndarray]:
    ys = []
    for i, f in enumerate(fs, start=1):
        f = np.asarray(f, dtype=float)
        f_sup = float(np.max(np.abs(f)))
        if f_sup == 0:
            raise BuilderError(f"f_{i} is identically zero")
        u = resolvent_g1(G, f)
        denom = float(np.max(np.abs(u))) + f_sup + math.sqrt(max(energy(G, u), 0.0))
        ys.append(2.0**-i * u / denom)
    return ys


def build_measure(G: GraphForm, ys) -> VertexMeasure:
    total = np.zeros(G.n_vertices)
    for i, y in enumerate(ys, start=1):
        total += 2.0**i * energy_measure(G, y).values
    return VertexMeasure(total)


def gamma_matrix(G: GraphForm, ys) -> np.ndarray:
    """Per-vertex mutual energy masses ``Gamma(y^i, y^j)({p})``, shape ``(V, N, N)``."""
    y = np.stack(ys, axis=1)  # (V, N)
    i, j = G.edges.T
    d = y[i] - y[j]  # (E, N)
    half = 0.5 * G.conductance[:, None, None] * d[:, :, None] * d[:, None, :]
    out = np.zeros((G.n_vertices, y.shape[1], y.shape[1]))
    np.add.at(out, i, half)
    np.add.at(out, j, half)
    return out


def compute_Z(G: GraphForm, ys, m_tilde: VertexMeasure) -> tuple[np.ndarray, np.ndarray]:
    """Metric matrices on the support of ``m_tilde``.

    Returns ``(Z, excluded)`` where ``Z`` has shape ``(V, N, N)`` with NaN rows
    at the excluded vertices (those with ``m_tilde(p) = 0``).
    """
    gam = gamma_matrix(G, ys)
    m = m_tilde.values
    excluded = np.nonzero(m <= 0)[0]
    diag = np.einsum("pii->pi", gam)
    if len(excluded) and np.any(diag[excluded] > 0):
        raise RuntimeError("m_tilde vanishes where some Gamma(y^i) does not")
    z = np.full_like(gam, np.nan)
    live = m > 0
    z[live] = gam[live] / m[live, None, None]
    return z, excluded


def span_rank(ys, tol: float = 1e-10) -> int:
    """Dimension of ``lin{y^i}``.

    Rows are normalised first: the ``2^-i`` factors would otherwise push late
    coordinates below any sensible rank tolerance.
    """
    stack = np.stack(ys)
    norms = np.linalg.norm(stack, axis=1, keepdims=True)
    stack = stack[norms[:, 0] > 0] / norms[norms[:, 0] > 0]
    if len(stack) == 0:
        return 0
    s = np.linalg.svd(stack, compute_uv=False)
    return int(np.sum(s > tol * s[0]))


@dataclass(frozen=True, eq=False)
class BuiltCoordinates:
    graph: GraphForm
    y: list
    m_tilde: VertexMeasure
    Z: np.ndarray
    excluded: np.ndarray


def build(G: GraphForm, fs=None) -> BuiltCoordinates:
    """Run the whole construction; ``fs`` defaults to the standard basis."""
    if fs is None:
        fs = list(np.eye(G.n_vertices))
    ys = build_coordinates(G, fs)
    m = build_measure(G, ys)
    z, excluded = compute_Z(G, ys, m)
    return BuiltCoordinates(G, ys, m, z, excluded)


def random_family(G: GraphForm, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    return [rng.standard_normal(G.n_vertices) for _ in range(count)]


def _record(violations, name, value, bound, ok, **extra):
    rec = {"check": name, "value": float(value), "bound": float(bound), "ok": bool(ok), **extra}
    if not ok:
        violations.append(rec)
    return rec


def verify_bounds(b: BuiltCoordinates, n_vectors: int = 100, n_test_functions: int = 20, seed: int = 0) -> dict:
    """Check the construction's inequalities and return a JSON-ready report."""
    rng = np.random.default_rng(seed)
    G = b.graph
    N = len(b.y)
    bounds, violations = [], []

    for i, y in enumerate(b.y, start=1):
        e = energy(G, y)
        bounds.append(_record(violations, "energy", e, 4.0**-i, e <= 4.0**-i * (1 + REL_SLACK), i=i))
        s = float(np.max(np.abs(y)))
        bounds.append(_record(violations, "sup_norm", s, 2.0**-i, s <= 2.0**-i * (1 + REL_SLACK), i=i))

    m_total = b.m_tilde.total()
    m_bound = 1.0 - 2.0**-N
    bounds.append(_record(violations, "m_total", m_total, m_bound, m_total <= m_bound * (1 + REL_SLACK)))

    live = np.setdiff1d(np.arange(G.n_vertices), b.excluded)
    if len(live):
        z = b.Z[live]
        lam_min = float(np.linalg.eigvalsh(z)[:, 0].min())
        bounds.append(_record(violations, "psd", lam_min, -PSD_TOL, lam_min >= -PSD_TOL))
        asym = float(np.max(np.abs(z - np.swapaxes(z, 1, 2))))
        bounds.append(_record(violations, "symmetry", asym, 1e-12, asym <= 1e-12))
        diag = np.einsum("pii->pi", z)
        ratio = float(np.max(diag * 2.0 ** np.arange(1, N + 1)))
        bounds.append(_record(violations, "diagonal", ratio, 1.0, ratio <= 1 + REL_SLACK))
        v = rng.standard_normal((n_vectors, N))
        zv = np.einsum("pij,sj->psi", z, v)
        op = float(np.max(np.linalg.norm(zv, axis=2) / np.linalg.norm(v, axis=1)))
        bounds.append(_record(violations, "operator_norm", op, 1.0, op <= 1 + REL_SLACK))

    # finite-scale energy dominance: Gamma(f)(p) > 0 forces m_tilde(p) > 0
    worst = 0.0
    for _ in range(n_test_functions):
        gam = energy_measure(G, rng.standard_normal(G.n_vertices)).values
        if len(b.excluded):
            worst = max(worst, float(np.max(gam[b.excluded])))
    bounds.append(_record(violations, "energy_dominance", worst, 0.0, worst <= 0.0))

    rank = span_rank(b.y)
    bounds.append(_record(violations, "density_rank", rank, G.n_vertices, rank == G.n_vertices))

    return {
        "schema": 1,
        "n_vertices": G.n_vertices,
        "n_coordinates": N,
        "bounds": bounds,
        "rank": rank,
        "m_total": m_total,
        "excluded_vertices": b.excluded.tolist(),
        "violations": violations,
    }
