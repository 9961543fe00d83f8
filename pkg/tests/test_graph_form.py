import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrgeom import graph_form as gf
from mrgeom.graph_form import GraphForm, GraphFormError


def edge(c=1.0, mu=(1.0, 1.0)):
    return GraphForm(mu=list(mu), edges=[[0, 1]], conductance=[c])


def test_energy_examples():
    assert gf.energy(edge(), [0, 1], [0, 1]) == 1
    G = gf.path_graph(3)
    assert gf.energy(G, [3, 3, 3], [0, 5, -1]) == 0
    assert gf.energy(G, [0, 1, 2], [0, 1, 0]) == 0


def test_energy_measure_examples():
    G = gf.path_graph(3)
    gam = gf.energy_measure(G, [0, 1, 2])
    assert gam.values[1] == 1
    assert gam.total() == gf.energy(G, [0, 1, 2]) == 2
    assert not np.any(gf.energy_measure(G, [4, 4, 4]).values)


def test_energy_measure_identity_examples():
    assert gf.verify_energy_measure_identity(edge(), [0, 1], [0, 1], [1, 1]) == 0
    G = edge()
    assert gf.energy_measure(G, [0, 1]).integrate([0, 2]) == 1
    assert gf.verify_energy_measure_identity(G, [0, 1], [0, 1], [0, 2]) == 0


def test_generator_examples():
    assert np.array_equal(gf.generator(edge(), [0, 1]), [1, -1])
    assert not np.any(gf.generator(gf.path_graph(4), np.full(4, 2.5)))


def test_resolvent_examples():
    G = edge()
    assert np.allclose(gf.resolvent_g1(G, [1, 0]), [2 / 3, 1 / 3], atol=1e-15)
    assert not np.any(gf.resolvent_g1(G, [0, 0]))
    assert np.allclose(gf.resolvent_g1(gf.path_graph(5), np.full(5, 1.5)), 1.5, atol=1e-14)


def test_harmonic_solve_examples():
    G = gf.path_graph(3)
    assert gf.harmonic_solve(G, [0, 2], [0, 1])[1] == pytest.approx(0.5, abs=1e-15)
    assert np.allclose(gf.harmonic_solve(G, [0, 2], {0: 4.0, 2: 4.0}), 4.0)


def test_harmonic_solve_disconnected_component():
    G = GraphForm(mu=[1, 1, 1, 1], edges=[[0, 1], [2, 3]], conductance=[1, 1])
    with pytest.raises(GraphFormError, match="underdetermined harmonic problem"):
        gf.harmonic_solve(G, [0, 1], [0, 1])


def test_harmonic_solve_is_minimiser(rng):
    G = gf.random_graph(rng, 15)
    boundary = [0, 1, 2]
    h = gf.harmonic_solve(G, boundary, [0.0, 1.0, -2.0])
    interior = np.arange(3, 15)
    assert np.allclose(gf.generator(G, h)[interior], 0, atol=1e-12)
    for _ in range(20):
        v = h.copy()
        v[interior] += 1e-3 * rng.standard_normal(len(interior))
        assert gf.energy(G, v) > gf.energy(G, h)


def test_validation_errors():
    with pytest.raises(GraphFormError):
        GraphForm(mu=[1.0, 0.0], edges=[[0, 1]], conductance=[1.0])
    with pytest.raises(GraphFormError):
        GraphForm(mu=[1.0, 1.0], edges=[[0, 1]], conductance=[-1.0])
    with pytest.raises(GraphFormError):
        GraphForm(mu=[1.0, 1.0], edges=[[0, 0]], conductance=[1.0])
    with pytest.raises(GraphFormError):
        GraphForm(mu=[1.0, 1.0], edges=[[0, 1], [1, 0]], conductance=[1.0, 1.0])
    with pytest.raises(GraphFormError):
        GraphForm.from_matrix([[0, 1], [2, 0]], [1, 1])


def test_from_matrix_matches_edge_list():
    C = np.array([[0, 2, 0], [2, 0, 0.5], [0, 0.5, 0]])
    G = GraphForm.from_matrix(C, [1, 2, 3])
    assert np.array_equal(G.conductance_matrix(), C)
    assert np.array_equal(G.laplacian_matrix(), np.diag(C.sum(1)) - C)


def test_graph_file_roundtrip(tmp_path, rng):
    G = gf.random_graph(rng, 8)
    path = tmp_path / "g.txt"
    path.write_text("# comment line\n" + gf.format_graph(G))
    H = gf.read_graph(path)
    assert np.array_equal(H.mu, G.mu)
    assert np.array_equal(H.edges, G.edges)
    assert np.array_equal(H.conductance, G.conductance)


@pytest.mark.parametrize("text", ["v a 1\ne a b 1\n", "v a 1\nv a 2\n", "x 1 2\n", "", "v a one\n"])
def test_parse_graph_errors(text):
    with pytest.raises(GraphFormError):
        gf.parse_graph(text)


# properties --------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)


def _setup(seed):
    rng = np.random.default_rng(seed)
    G = gf.random_graph(rng, int(rng.integers(2, 13)), connected=bool(rng.integers(0, 2)))
    return rng, G, [rng.standard_normal(G.n_vertices) for _ in range(3)]


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_energy_nonnegative_and_symmetric(seed):
    _, G, (f, g, _) = _setup(seed)
    assert gf.energy(G, f) >= 0
    assert gf.energy(G, f, g) == pytest.approx(gf.energy(G, g, f), abs=1e-13)
    assert gf.energy_measure(G, f, g).total() == pytest.approx(gf.energy(G, f, g), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_energy_measure_identity_exact(seed):
    _, G, (f, g, phi) = _setup(seed)
    assert gf.verify_energy_measure_identity(G, f, g, phi) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_carre_du_champ_half_form(seed):
    _, G, (f, g, _) = _setup(seed)
    lhs = gf.energy_measure(G, f, g).values / G.mu
    assert np.max(np.abs(lhs - gf.carre_du_champ(G, f, g))) <= 1e-12
    L = gf.generator
    assert np.max(np.abs(lhs - 0.5 * (L(G, f * g) - f * L(G, g) - g * L(G, f)))) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_generator_adjointness(seed):
    _, G, (f, g, _) = _setup(seed)
    assert abs(gf.energy(G, f, g) + np.sum(gf.generator(G, f) * g * G.mu)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_markov_and_resolvent_contraction(seed):
    _, G, (f, _, _) = _setup(seed)
    h = 3 * f
    assert gf.energy(G, gf.unit_contraction(h)) <= gf.energy(G, h) + 1e-12
    assert np.max(np.abs(gf.resolvent_g1(G, f))) <= np.max(np.abs(f)) * (1 + 1e-12)
