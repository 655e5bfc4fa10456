"""
Tests para el grafo de configuración
"""

import json
from fractions import Fraction

import pytest

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from src.config_graph import (
    anosov_classify, bicoloring, bipartite_double_cover, charges, cycle_basis,
    euler_characteristic_of_fiber, parse_matrix,
    parse_validate, to_dot
)
from src.models import AnosovVerdict, ConfigValidationError, NotUnimodular, bar
from tests.conftest import graph_json, make_graph


def _payload(vertices, edges) -> str:
    return json.dumps({
        "vertices": [{"id": v, "chi": chi} for v, chi in vertices],
        "edges": [{"id": eid, "ends": [x, y], "b": b} for eid, x, y, b in edges],
    })


class TestParseValidate:
    """Tests para la lectura y validación del JSON de entrada"""

    def test_pants_pair_is_valid(self, pants_pair):
        g = parse_validate(graph_json(pants_pair))
        assert g.vertex_ids == ["u", "w"]
        assert g.genus("u") == 0 and g.genus("w") == 0
        assert g.total_genus == 2

    def test_empty_curve_system_rejected(self):
        with pytest.raises(ConfigValidationError) as info:
            parse_validate(_payload([("u", -1)], []))
        assert "EmptyCurveSystem" in info.value.codes

    def test_zero_multiplicity(self):
        with pytest.raises(ConfigValidationError) as info:
            parse_validate(_payload([("u", -1), ("w", -1)], [("e1", "u", "w", 0), ("e2", "u", "w", 1),
                                                             ("e3", "u", "w", 1)]))
        assert info.value.codes == ["ZeroMultiplicity"]

    def test_every_violation_is_listed(self):
        text = _payload([("u", 0), ("w", -1)], [("e1", "u", "w", 0)])
        with pytest.raises(ConfigValidationError) as info:
            parse_validate(text)
        codes = info.value.codes
        assert "ZeroMultiplicity" in codes
        assert "NonNegativeChi" in codes

    def test_self_loop(self):
        with pytest.raises(ConfigValidationError) as info:
            parse_validate(_payload([("u", -1)], [("e1", "u", "u", 1)]))
        assert "SelfLoop" in info.value.codes

    def test_genus_parity(self):
        text = _payload([("u", -2), ("w", -1)], [("e1", "u", "w", 1), ("e2", "u", "w", -1), ("e3", "u", "w", 2)])
        with pytest.raises(ConfigValidationError) as info:
            parse_validate(text)
        assert info.value.codes == ["GenusParity"]
        assert info.value.issues[0].subject == "u"

    def test_disconnected(self):
        text = _payload(
            [("a", -1), ("b", -1), ("c", -1), ("d", -1)],
            [("e1", "a", "b", 1), ("e2", "c", "d", 1)],
        )
        with pytest.raises(ConfigValidationError) as info:
            parse_validate(text)
        assert "Disconnected" in info.value.codes

    def test_malformed_json(self):
        with pytest.raises(ConfigValidationError) as info:
            parse_validate("{no es json")
        assert info.value.codes == ["MalformedInput"]

    def test_unknown_endpoint(self):
        with pytest.raises(ConfigValidationError) as info:
            parse_validate(_payload([("u", -1)], [("e1", "u", "x", 1)]))
        assert "MalformedInput" in info.value.codes

    def test_matrix_input_detected(self):
        assert parse_matrix(json.dumps({"matrix": [[2, 1], [1, 1]]})) == [[2, 1], [1, 1]]
        assert parse_matrix(json.dumps({"vertices": []})) is None


class TestGraphInvariants:
    """Tests para cargas, bicoloraciones y bases de ciclos"""

    def test_ends_involution(self, pants_pair):
        ends = pants_pair.ends
        assert all(bar(end) != end and bar(bar(end)) == end for end in ends)
        assert sum(pants_pair.valence(v) for v in pants_pair.vertex_ids) == 2 * len(pants_pair.edges)

    def test_charge_of_unit_fraction_vertex(self):
        g = make_graph({"u": -1, "w": -1}, [("e1", "u", "w", 2), ("e2", "u", "w", 3), ("e3", "u", "w", 6)])
        assert charges(g)["u"] == Fraction(1)

    def test_pants_pair_charges_vanish(self, pants_pair):
        assert charges(pants_pair) == {"u": Fraction(0), "w": Fraction(0)}

    def test_four_cycle_charges(self, four_cycle):
        k = charges(four_cycle)
        assert k["v1"] == Fraction(1, 2)
        assert k["v2"] == Fraction(3, 2)
        assert sum(k.values()) == 0

    def test_bicoloring(self, pants_pair, four_cycle, triangle):
        assert bicoloring(pants_pair) == {"u": 1, "w": -1}
        assert bicoloring(four_cycle) == {"v1": 1, "v2": -1, "v3": 1, "v4": -1}
        assert bicoloring(triangle) is None

    def test_bicoloring_per_component(self):
        g = make_graph({"a": -1, "b": -1, "c": -1, "d": -1}, [("e1", "b", "a", 1), ("e2", "d", "c", -1)])
        assert bicoloring(g) == {"a": 1, "b": -1, "c": 1, "d": -1}

    def test_cycle_basis_counts(self, pants_pair, four_cycle, separating_edge):
        basis = cycle_basis(pants_pair)
        assert basis.tree_edges == ["e1"]
        assert basis.rank == 2
        assert all(len(cycle) == 2 for cycle in basis.cycles.values())

        ring = cycle_basis(four_cycle)
        assert ring.rank == 1
        assert len(ring.cycles["e4"]) == 4

        assert cycle_basis(separating_edge).rank == 0

    def test_fundamental_cycles_close_up(self, four_cycle):
        for eid, cycle in cycle_basis(four_cycle).cycles.items():
            assert cycle[0] == (eid, 0)
            for current, following in zip(cycle, cycle[1:] + cycle[:1]):
                assert four_cycle.v(bar(current)) == four_cycle.v(following)

    def test_fiber_euler_characteristic(self, pants_pair, four_cycle):
        assert euler_characteristic_of_fiber(pants_pair) == -2
        assert euler_characteristic_of_fiber(four_cycle) == -8

    def test_dot_labels(self, pants_pair):
        dot = to_dot(pants_pair)
        assert 'label="u:-1"' in dot
        assert 'label="e2:-3"' in dot


class TestDoubleCover:
    """Tests para el recubrimiento doble bipartito"""

    def test_triangle_becomes_hexagon(self, triangle):
        cover, covering = bipartite_double_cover(triangle)
        assert len(cover.vertices) == 6
        assert len(cover.edges) == 6
        assert all(e.b == 2 for e in cover.edges)
        assert all(v.chi == -2 for v in cover.vertices)
        assert bicoloring(cover) is not None
        assert not covering.input_bipartite

    def test_cover_charges_are_halved(self, triangle):
        cover, covering = bipartite_double_cover(triangle)
        base = charges(triangle)
        for v, k in charges(cover).items():
            assert k == base[covering.vertex_map[v]] / 2

    def test_bipartite_input_returns_one_component(self, pants_pair):
        cover, covering = bipartite_double_cover(pants_pair)
        assert covering.input_bipartite
        assert cover.vertex_ids == ["u~0", "w~1"]
        assert sorted(e.b for e in cover.edges) == [-12, -6, 4]


class TestAnosov:
    """Tests para la clasificación de monodromías 2×2"""

    def test_examples(self):
        assert anosov_classify([[2, 1], [1, 1]]) == AnosovVerdict.ANOSOV
        assert anosov_classify([[1, 1], [0, 1]]) == AnosovVerdict.NOT_ANOSOV
        assert anosov_classify([[0, -1], [1, 0]]) == AnosovVerdict.NOT_ANOSOV

    def test_negative_trace_anosov(self):
        assert anosov_classify([[-2, -1], [-1, -1]]) == AnosovVerdict.ANOSOV

    def test_not_unimodular(self):
        with pytest.raises(NotUnimodular):
            anosov_classify([[2, 0], [0, 1]])
