"""
Tests para el núcleo de complejos cúbicos
"""

import networkx as nx
import pytest

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from src.cube_kernel import (
    CubeComplex, PermutationCover, cover, crossing_graph_dot, fiber_product, is_isomorphic,
    salvetti_complex
)
from src.models import BadAttachment, NonSimplicialLink, NotSpecial, RelatorViolation


def _square(a, b, c, d, sign_d=1):
    """Cuadrado con aristas (0,0)=a, (0,1)=b, (1,1)=c, (2,0)=d"""
    return {(0, 0): (a, 1), (0, 1): (b, 1), (1, 1): (c, 1), (2, 0): (d, sign_d)}


def _one_vertex(*loops) -> CubeComplex:
    complex_ = CubeComplex(name="test")
    complex_.add_vertex("*")
    for eid in loops:
        complex_.add_edge(eid, "*", "*")
    return complex_


def _torus() -> CubeComplex:
    torus = _one_vertex("a", "b")
    torus.add_cube(_square("a", "b", "b", "a"))
    return torus


def _cube3(with_solid: bool = True) -> CubeComplex:
    complex_ = CubeComplex(name="I3")
    for c in range(8):
        complex_.add_vertex(c)
    for c in range(8):
        for axis in range(3):
            if not c >> axis & 1:
                complex_.add_edge(("e", c, axis), c, c | 1 << axis)
    for a, b in ((0, 1), (0, 2), (1, 2)):
        for c in range(8):
            if c >> a & 1 or c >> b & 1:
                continue
            complex_.add_cube(_square(("e", c, a), ("e", c, b), ("e", c | 1 << a, b), ("e", c | 1 << b, a)))
    if with_solid:
        complex_.add_cube({
            (c, axis): (("e", c, axis), 1) for c in range(8) for axis in range(3) if not c >> axis & 1
        })
    return complex_


class TestStructure:
    """Tests para validación, f-vector y links"""

    def test_torus(self):
        torus = _torus()
        report = torus.validate(strict=True)
        assert report.f_vector == [1, 2, 1]
        assert report.simple and report.flag
        assert torus.euler_characteristic() == 0
        assert len(torus.links("*").simplices) == 4

    def test_three_cube(self):
        solid = _cube3()
        report = solid.validate()
        assert report.f_vector == [8, 12, 6, 1]
        assert solid.euler_characteristic() == 1
        assert report.flag
        assert solid.hyperplane_index().count == 3

    def test_hollow_cube_is_not_flag(self):
        hollow = _cube3(with_solid=False)
        assert hollow.flags() == {"simple": True, "flag": False}

    def test_non_simplicial_link(self):
        complex_ = _one_vertex("a")
        complex_.add_cube(_square("a", "a", "a", "a"))
        assert not complex_.validate().simple
        with pytest.raises(NonSimplicialLink):
            complex_.validate(strict=True)

    def test_duplicate_edge(self):
        complex_ = _one_vertex("a")
        with pytest.raises(BadAttachment):
            complex_.add_edge("a", "*", "*")

    def test_incoherent_corner(self):
        complex_ = CubeComplex()
        for v in ("p", "q"):
            complex_.add_vertex(v)
        complex_.add_edge("a", "p", "q")
        complex_.add_edge("b", "p", "p")
        complex_.add_cube(_square("a", "b", "b", "a"))
        with pytest.raises(BadAttachment):
            complex_.validate()


class TestSpecialness:
    """Tests para hiperplanos y las cuatro condiciones de especialidad"""

    def test_torus_is_special(self):
        torus = _torus()
        assert [h.two_sided for h in torus.hyperplanes()] == [True, True]
        assert torus.specialness().special
        char_map = torus.raag_and_char_map()
        assert char_map.relators == [(0, 1)]
        assert char_map.local_isometry

    def test_klein_bottle_is_one_sided(self):
        klein = _one_vertex("a", "b")
        klein.add_cube(_square("a", "b", "b", "a", sign_d=-1))
        report = klein.specialness()
        assert report.one_sided == ["H0"]
        assert not report.special
        with pytest.raises(NotSpecial):
            klein.raag_and_char_map()

    def test_self_intersection(self):
        complex_ = _one_vertex("a")
        complex_.add_cube(_square("a", "a", "a", "a"))
        _, selfint = complex_.crossing_pairs()
        assert selfint == ["H0@Q0"]

    def test_direct_self_osculation(self):
        complex_ = CubeComplex()
        for v in ("p0", "p1", "p3"):
            complex_.add_vertex(v)
        complex_.add_edge("e1", "p0", "p1")
        complex_.add_edge("e2", "p0", "p3")
        complex_.add_edge("f", "p0", "p0")
        complex_.add_edge("g", "p1", "p3")
        complex_.add_cube(_square("e1", "f", "g", "e2"))
        complex_.validate()
        report = complex_.specialness()
        assert "H0@p0" in report.direct_self_osculations
        assert not report.special

    def test_two_loops_without_square(self):
        complex_ = _one_vertex("a", "b")
        assert complex_.specialness().special
        char_map = complex_.raag_and_char_map()
        assert char_map.relators == []
        assert char_map.generators == [0, 1]

    def test_salvetti_of_path(self):
        salvetti = salvetti_complex(nx.Graph([("a", "b"), ("b", "c")]))
        assert salvetti.f_vector() == [1, 3, 2]
        assert salvetti.specialness().special
        assert salvetti.raag_and_char_map().relators == [(0, 1), (1, 2)]

    def test_salvetti_of_edge_is_torus(self):
        assert is_isomorphic(salvetti_complex(nx.Graph([("a", "b")])), _torus())
        assert not is_isomorphic(salvetti_complex(nx.Graph([("a", "b"), ("b", "c")])), _torus())

    def test_crossing_graph_dot(self):
        dot = crossing_graph_dot(_torus().crossing_graph())
        assert '"H0" -- "H1";' in dot


class TestCoverings:
    """Tests para recubrimientos por permutaciones y productos fibrados"""

    def test_swap_cover_is_connected(self):
        covering = cover(_torus(), PermutationCover(degree=2, perms={"a": [1, 0]}))
        assert covering.total.f_vector() == [2, 4, 2]
        assert covering.degree == 2
        assert len(covering.components()) == 1
        covering.total.validate()

    def test_trivial_cover_splits(self):
        covering = cover(_torus(), PermutationCover(degree=2))
        components = covering.components()
        assert len(components) == 2
        assert all(c.degree == 1 for c in components)

    def test_bad_permutation(self):
        with pytest.raises(RelatorViolation):
            cover(_torus(), PermutationCover(degree=2, perms={"a": [0, 0]}))

    def test_non_commuting_permutations(self):
        with pytest.raises(RelatorViolation):
            cover(_torus(), PermutationCover(degree=3, perms={"a": [1, 2, 0], "b": [1, 0, 2]}))

    def test_fiber_product(self):
        first = cover(_torus(), PermutationCover(degree=2, perms={"a": [1, 0]}))
        second = cover(_torus(), PermutationCover(degree=2, perms={"b": [1, 0]}))
        product = fiber_product(first, second)
        components = product.components()
        assert len(components) == 1
        assert components[0].degree == 4
        assert components[0].total.f_vector() == [4, 8, 4]

    def test_composition(self):
        lower = cover(_torus(), PermutationCover(degree=2, perms={"a": [1, 0]}))
        upper = cover(lower.total, PermutationCover(degree=2, perms={("b", 0): [1, 0], ("b", 1): [1, 0]}))
        composed = upper.compose(lower)
        assert composed.degree == 4
        assert composed.base is lower.base


def _klein() -> CubeComplex:
    klein = _one_vertex("a", "b")
    klein.add_cube(_square("a", "b", "b", "a", sign_d=-1))
    return klein


class TestProperties:
    """Tests de propiedades sobre familias de complejos y recubrimientos"""

    def test_salvetti_of_small_graphs_is_special(self):
        graphs = [graph for graph in nx.graph_atlas_g() if 1 <= graph.number_of_nodes() <= 4]
        assert len(graphs) == 18
        for graph in graphs:
            salvetti = salvetti_complex(graph, dim_cap=4)
            assert salvetti.validate().flag
            assert salvetti.specialness().special
            char_map = salvetti.raag_and_char_map()
            assert len(char_map.generators) == graph.number_of_nodes()
            assert len(char_map.relators) == graph.number_of_edges()
            assert char_map.local_isometry

    @pytest.mark.parametrize("base, cover_data", [
        (_torus, PermutationCover(degree=2, perms={"a": [1, 0]})),
        (_torus, PermutationCover(degree=3, perms={"a": [1, 2, 0], "b": [2, 0, 1]})),
        (_klein, PermutationCover(degree=2, perms={"a": [1, 0]})),
        (_klein, PermutationCover(degree=3, perms={"b": [1, 2, 0]})),
        (_klein, PermutationCover(degree=2, perms={"a": [1, 0], "b": [1, 0]})),
        (lambda: _one_vertex("a", "b"), PermutationCover(degree=3, perms={"a": [1, 2, 0], "b": [1, 0, 2]})),
        (lambda: salvetti_complex(nx.empty_graph(3)), PermutationCover(degree=4, perms={0: [1, 2, 3, 0]})),
        (_cube3, PermutationCover(degree=2)),
    ])
    def test_euler_characteristic_is_multiplicative(self, base, cover_data):
        complex_ = base()
        covering = cover(complex_, cover_data)
        assert covering.degree == cover_data.degree
        assert covering.total.euler_characteristic() == cover_data.degree * complex_.euler_characteristic()
        for component in covering.components():
            assert component.total.euler_characteristic() == component.degree * complex_.euler_characteristic()
