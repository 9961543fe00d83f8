"""Check suites behind ``mrgeom check``.

Each suite returns a list of :class:`CheckRecord`; :func:`run_suite` wraps
them in the versioned JSON report.  Exact identities use ``exact_tol``
(overridable from the command line); convergence experiments carry their own
thresholds.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import builder, calculus, graph_form as gf, models, sg
from .poly import Polynomial, parse_polynomial, random_polynomial

SUITES = ("sg", "heisenberg", "euclid", "builder")
DEFAULT_SEED = 20140301
EXACT_TOL = 1e-12

Y1, Y2 = Polynomial.variable(0), Polynomial.variable(1)
# vanishes at the images of the three boundary points (they lie on y1^2 + y2^2 = 2/9)
SG_BUMP = parse_polynomial("2 - 9*y1^2 - 9*y2^2")
# the (1 + y1) tilt breaks the p1 <-> p2 reflection symmetry, under which
# E(y1^2, y1 * even) would vanish identically
SG_TEST_FUNCTION = Y1 * (1 + Y1) * SG_BUMP
KK_FUNCTIONS = ("y1^2", "y1*y2", "y1^2 + y2^3")


@dataclass
class CheckRecord:
    check: str
    model: str
    level_or_grid: int | None
    lhs: float | None
    rhs: float | None
    residual: float
    relative: float | None
    tol: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _rec(check, model, level, lhs, rhs, tol, relative_check=False, detail=""):
    residual = abs(lhs - rhs)
    relative = residual / abs(lhs) if lhs else None
    measured = relative if relative_check else residual
    passed = measured is not None and measured <= tol
    return CheckRecord(check, model, level, lhs, rhs, residual, relative, tol, bool(passed), detail)


def _flag(check, model, level, ok, value=0.0, tol=0.0, detail=""):
    return CheckRecord(check, model, level, None, None, float(value), None, tol, bool(ok), detail)


def _monotone_decreasing(values) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------------


def sg_suite(level: int = 8, exact_tol: float = EXACT_TOL, seed: int = DEFAULT_SEED) -> list[CheckRecord]:
    out = []
    vs = sg.coordinates_at_vertices(level)
    graph = sg.sg_graph(level, vs)
    y = vs.coords
    for name, f, g, want in (("E(y1)", 0, 0, 1.0), ("E(y2)", 1, 1, 1.0), ("E(y1,y2)", 0, 1, 0.0)):
        e = gf.energy(graph, y[:, f], y[:, g])
        out.append(_rec(f"orthonormality {name}", "sg", level, e, want, max(exact_tol, 1e-10)))

    worst_trace, worst_psd, total_nu = 0.0, 0.0, 0.0
    for n in range(level + 1):
        t = sg.cell_table(n)
        worst_trace = max(worst_trace, float(np.max(np.abs(np.trace(t.z, axis1=1, axis2=2) - 1))))
        worst_psd = min(worst_psd, float(np.linalg.eigvalsh(t.z)[:, 0].min()))
        total_nu = float(t.nu.sum())
    out.append(_flag("trace Z_w = 1", "sg", level, worst_trace <= exact_tol, worst_trace, exact_tol))
    out.append(_flag("Z_w nonnegative definite", "sg", level, worst_psd >= -exact_tol, -worst_psd, exact_tol))
    out.append(_rec("nu(K) = 2", "sg", level, total_nu, 2.0, exact_tol))
    if level >= 1:
        add = sg.kusuoka_additivity_check(level)
        out.append(_flag("nu additivity", "sg", level, add <= exact_tol, add, exact_tol))
        gadd = sg.gram_additivity_check(level)
        out.append(_flag("Gram additivity", "sg", level, gadd <= exact_tol, gadd, exact_tol))

    # level-1 masses, recomputed by the graph oracle on a finer graph
    n_or = min(max(level, 3), 6)
    vso = sg.coordinates_at_vertices(n_or)
    go = sg.sg_graph(n_or, vso)
    for w in ("1", "2", "3"):
        nu_w = sum(sg.cell_energy_from_graph(go, vso, w, vso.coords[:, i]) for i in range(2))
        out.append(_rec(f"nu(K_{w}) = 2/3 (graph oracle)", "sg", n_or, nu_w, 2 / 3, max(exact_tol, 1e-10)))

    stats = sg.rank_one_decay(level)
    means = [s.mean_ratio for s in stats[1:]]
    out.append(
        _flag(
            "rank-one tendency (nu-mean eigenvalue ratio decreasing)",
            "sg",
            level,
            _monotone_decreasing(means) and (level < 1 or means[-1] < 0.05),
            means[-1] if means else 1.0,
            0.05,
            detail=" ".join(f"{m:.4g}" for m in means),
        )
    )

    for text in KK_FUNCTIONS:
        F = parse_polynomial(text)
        r = calculus.kusuoka_kigami_check(F, F, level)
        out.append(_rec(f"Kusuoka-Kigami energy F={text}", "sg", level, r.lhs, r.rhs, 0.05, relative_check=True))
    r = calculus.weak_generator_check(Y1 * Y1, SG_TEST_FUNCTION, level)
    out.append(_rec("trace-form generator (weak)", "sg", level, r.lhs, r.rhs, 0.10, relative_check=True))

    # sum_w tr(Z_w D^2 F) nu(K_w) for F = y1 y2 is 2 G^12 summed, which vanishes
    model = sg.sg_model(level)
    gauss = float(np.dot(calculus.generator_values(Y1 * Y2, model), model.weights))
    out.append(_rec("generator of y1*y2 integrates to 0", "sg", level, gauss, 0.0, max(exact_tol, 1e-10)))
    return out


def heisenberg_suite(n_random: int = 40, exact_tol: float = EXACT_TOL, seed: int = DEFAULT_SEED) -> list[CheckRecord]:
    rng = np.random.default_rng(seed)
    X, Y = models.heisenberg_X, models.heisenberg_Y
    xi, eta, zeta = models.XI, models.ETA, models.ZETA
    zp = models.heisenberg_Z_poly()
    half = Fraction(1, 2)
    out = []

    def exact(name, ok, detail=""):
        out.append(_flag(name, "heisenberg", None, ok, 0.0, 0.0, detail))

    exact("X xi = 1, Y xi = 0", X(xi) == 1 and Y(xi) == 0)
    exact("X eta = 0, Y eta = 1", X(eta) == 0 and Y(eta) == 1)
    exact("X zeta = -eta/2, Y zeta = xi/2", X(zeta) == -half * eta and Y(zeta) == half * xi)
    exact("[X,Y] zeta = 1", X(Y(zeta)) - Y(X(zeta)) == 1)
    exact("det Z(q) = 0 identically", models.determinant(zp).is_zero())
    exact("Ly^i = 0 for i = 1,2,3", all(p.is_zero() for p in models.heisenberg_coordinate_laplacians()))

    zero_lap = [Polynomial()] * 3
    pair_ok = gen_ok = True
    for _ in range(n_random):
        F = random_polynomial(rng, 3, 4)
        g = calculus.symbolic_gradient(F, zp)
        pair_ok &= g[0] == X(F) and g[1] == Y(F) and g[2] == -half * eta * X(F) + half * xi * Y(F)
        gen_ok &= calculus.symbolic_generator(F, zp, zero_lap) == models.sublaplacian(F)
    exact("gradient pairings = Xf, Yf, -(eta/2)Xf + (xi/2)Yf", pair_ok, f"{n_random} random polynomials")
    exact("coordinate generator = X^2 + Y^2", gen_ok, f"{n_random} random polynomials")

    model = models.heisenberg_model([(-1, 1), (-1, 1), (-1, 1)], 4)
    problems = model.invariant_violations()
    exact("model invariants", not problems, "; ".join(problems))
    ranks = {int(np.linalg.matrix_rank(z, tol=1e-10)) for z in model.z}
    exact("rank Z(q) = 2 at all centres", ranks == {2})
    F = random_polynomial(rng, 3, 4)
    num = calculus.generator_values(F, model)
    ref = models.sublaplacian(F)(model.ycoords)
    err = float(np.max(np.abs(num - ref)))
    out.append(_flag("generator_apply = sublaplacian at centres", "heisenberg", 4, err <= exact_tol * max(1, np.abs(ref).max()), err, exact_tol))
    return out


EUCLID_A = models.CoefficientField.diagonal([parse_polynomial("1 + x1^2"), 1])
EUCLID_U = parse_polynomial("x1*x2 - x1^2*x2 - x1*x2^2 + x1^2*x2^2")  # x1(1-x1)x2(1-x2)
UNIT_SQUARE = [(0, 1), (0, 1)]


def euclid_suite(grid: int = 8, exact_tol: float = EXACT_TOL, seed: int = DEFAULT_SEED) -> list[CheckRecord]:
    rng = np.random.default_rng(seed)
    out = []
    x1 = Polynomial.variable(0)
    one = Polynomial.constant(1)

    model = models.euclidean_model(EUCLID_A, UNIT_SQUARE, grid)
    problems = model.invariant_violations()
    out.append(_flag("model invariants", "euclidean", grid, not problems, detail="; ".join(problems)))
    lap_err = float(np.max(np.abs(model.coordinate_laplacians - np.stack([2 * model.ycoords[:, 0], 0 * model.ycoords[:, 0]], 1))))
    out.append(_flag("Ly = (2 x1, 0)", "euclidean", grid, lap_err <= exact_tol, lap_err, exact_tol))

    grids = [grid, 2 * grid, 4 * grid, 8 * grid]
    recs = models.ibp_convergence(EUCLID_A, x1, one, EUCLID_U, UNIT_SQUARE, grids)
    orders = [r["order_estimate"] for r in recs[1:]]
    out.append(
        _flag(
            "integration by parts O(h^2)",
            "euclidean",
            grids[-1],
            min(orders) >= 1.8,
            min(orders),
            1.8,
            detail="orders " + " ".join(f"{o:.3f}" for o in orders),
        )
    )

    ident = models.CoefficientField.identity(2)
    r = models.euclidean_ibp_check(ident, x1, one, EUCLID_U, UNIT_SQUARE, grid)
    out.append(_flag("integration by parts, a = I", "euclidean", grid, r.residual <= exact_tol, r.residual, exact_tol))
    im = models.euclidean_model(ident, UNIT_SQUARE, grid)
    d = calculus.divergence_functional(x1, one, EUCLID_U, im)
    out.append(_rec("divergence functional vs div(a grad f) u", "euclidean", grid, d, r.second, exact_tol))

    a_poly = [list(row) for row in EUCLID_A.entries]
    lap_poly = EUCLID_A.divergence_rows()
    sym_ok = pair_ok = True
    for _ in range(20):
        F = random_polynomial(rng, 2, 4)
        div = sum(
            (sum((a_poly[i][j] * F.partial(j) for j in range(2)), Polynomial()).partial(i) for i in range(2)),
            Polynomial(),
        )
        sym_ok &= calculus.symbolic_generator(F, a_poly, lap_poly) == div
        k = int(rng.integers(0, len(model)))
        ref = EUCLID_A(model.ycoords[k]) @ np.array([F.partial(i).eval(model.ycoords[k]) for i in range(2)])
        pair_ok &= all(abs(calculus.gradient_pairing(F, j, model, k) - ref[j]) <= 1e-12 * max(1, abs(ref[j])) for j in range(2))
    out.append(_flag("coordinate generator = div(a grad f)", "euclidean", None, sym_ok, detail="20 random polynomials"))
    out.append(_flag("gradient pairing = (a grad f)_j", "euclidean", grid, pair_ok))
    return out


def graph_identity_records(trials: int, rng: np.random.Generator, exact_tol: float) -> list[CheckRecord]:
    worst = {"energy measure identity": 0.0, "carre du champ (1/2 form)": 0.0, "generator adjointness": 0.0}
    markov_ok = True
    for _ in range(trials):
        G = gf.random_graph(rng, int(rng.integers(2, 13)), connected=False)
        n = G.n_vertices
        f, g, phi = (rng.standard_normal(n) for _ in range(3))
        worst["energy measure identity"] = max(worst["energy measure identity"], gf.verify_energy_measure_identity(G, f, g, phi))
        dens = gf.energy_measure(G, f, g).values / G.mu
        worst["carre du champ (1/2 form)"] = max(worst["carre du champ (1/2 form)"], float(np.max(np.abs(dens - gf.carre_du_champ(G, f, g)))))
        adj = abs(gf.energy(G, f, g) + float(np.sum(gf.generator(G, f) * g * G.mu)))
        worst["generator adjointness"] = max(worst["generator adjointness"], adj)
        h = 2 * rng.standard_normal(n)
        markov_ok &= gf.energy(G, gf.unit_contraction(h)) <= gf.energy(G, h) + exact_tol
    out = [_flag(name, "graph", None, v <= exact_tol, v, exact_tol, f"{trials} trials") for name, v in worst.items()]
    out.append(_flag("Markov contraction", "graph", None, markov_ok, detail=f"{trials} trials"))
    return out


def builder_suite(
    graph_path: str | Path | None = None,
    n_graphs: int = 20,
    max_vertices: int = 50,
    exact_tol: float = EXACT_TOL,
    seed: int = DEFAULT_SEED,
) -> tuple[list[CheckRecord], list[dict]]:
    rng = np.random.default_rng(seed)
    out, reports = [], []

    two = gf.GraphForm(mu=[1.0, 1.0], edges=[[0, 1]], conductance=[1.0])
    b2 = builder.build(two, [np.array([1.0, 0.0])])
    y_err = float(np.max(np.abs(b2.y[0] - np.array([1 / 6, 1 / 12]))))
    out.append(_flag("two-vertex y^1 = (1/6, 1/12)", "builder", 2, y_err <= 1e-15, y_err, 1e-15))
    out.append(_rec("two-vertex Gamma(y^1)(X) = 1/144", "builder", 2, gf.energy(two, b2.y[0]), 1 / 144, 1e-15))

    graphs = []
    if graph_path is not None:
        graphs.append((str(graph_path), gf.read_graph(graph_path)))
    else:
        graphs.append(("path5", gf.path_graph(5)))
        for k in range(n_graphs):
            graphs.append((f"random{k}", gf.random_graph(rng, int(rng.integers(2, max_vertices + 1)))))
    for name, G in graphs:
        rep = builder.verify_bounds(builder.build(G), seed=int(rng.integers(0, 2**31)))
        rep["graph"] = name
        reports.append(rep)
        bad = ", ".join(sorted({v["check"] for v in rep["violations"]}))
        out.append(_flag(f"coordinate construction bounds [{name}]", "builder", G.n_vertices, not rep["violations"], len(rep["violations"]), 0, bad))

    out.extend(graph_identity_records(200, rng, exact_tol))
    return out, reports


def run_suite(
    suite: str,
    level: int = 8,
    grid: int = 8,
    graph: str | Path | None = None,
    seed: int = DEFAULT_SEED,
    tol: float | None = None,
) -> dict:
    names = SUITES if suite == "all" else (suite,)
    exact_tol = EXACT_TOL if tol is None else tol
    checks: list[CheckRecord] = []
    extra = {}
    for name in names:
        if name == "sg":
            checks += sg_suite(level, exact_tol, seed)
        elif name == "heisenberg":
            checks += heisenberg_suite(exact_tol=exact_tol, seed=seed)
        elif name == "euclid":
            checks += euclid_suite(grid, exact_tol, seed)
        elif name == "builder":
            recs, reports = builder_suite(graph, exact_tol=exact_tol, seed=seed)
            checks += recs
            extra["builder_reports"] = reports
        else:
            raise ValueError(f"unknown suite {name!r}")
    return {
        "schema": 1,
        "suite": suite,
        "params": {"level": level, "grid": grid, "graph": None if graph is None else str(graph), "seed": seed, "tol": exact_tol},
        "checks": [c.to_dict() for c in checks],
        "failures": [c.check for c in checks if not c.passed],
        "passed": all(c.passed for c in checks),
        **extra,
    }
