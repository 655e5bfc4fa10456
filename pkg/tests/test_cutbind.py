"""
Tests para el sistema de corte y enlace
"""

import pytest

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from src.cutbind import (
    assemble_cut_bind, canonical_order, divisibilities, dual_check, intersection_count,
    pants_arc_pattern, pants_subordinate, region_potentials, surface_square_complex, xi_select
)
from src.models import (
    BadTriple, CurveKind, IndexOutOfRange, SurvivalPreconditionFailed
)
from src.surface_model import build_model


@pytest.fixture
def pants_pair_system(pants_pair):
    m = build_model(pants_pair)
    decomposition = pants_subordinate(m, pants_pair)
    xi = xi_select(m, pants_pair, decomposition)
    return assemble_cut_bind(m, pants_pair, decomposition, xi)


class TestPantsDecomposition:
    """Tests para la descomposición en pantalones"""

    def test_pants_pair_needs_no_extra_curves(self, pants_pair):
        decomposition = pants_subordinate(build_model(pants_pair), pants_pair)
        assert decomposition.curve_ids == ["e1", "e2", "e3"]
        assert [p.id for p in decomposition.pants] == ["P1[u]", "P1[w]"]
        assert decomposition.pants_by_id("P1[u]").boundaries == [("e1", 1), ("e2", 1), ("e3", 1)]

    def test_every_curve_has_two_sides(self, four_cycle):
        decomposition = pants_subordinate(build_model(four_cycle), four_cycle)
        assert len(decomposition.pants) == 8
        for curve in decomposition.curves:
            assert curve.plus is not None and curve.minus is not None
        handles = [c for c in decomposition.curves if c.kind == CurveKind.HANDLE]
        assert len(handles) == 4

    def test_dead_curve_refused(self, all_positive):
        with pytest.raises(SurvivalPreconditionFailed):
            pants_subordinate(build_model(all_positive), all_positive)


class TestXiSelect:
    """Tests para la clase invariante ξ̄ y los valores de fibra"""

    def test_pants_pair(self, pants_pair):
        m = build_model(pants_pair)
        xi = xi_select(m, pants_pair, pants_subordinate(m, pants_pair))
        assert xi.curve_values == {"e1": 3, "e2": -2, "e3": -1}
        assert xi.fiber == {"u": 0, "w": 6}
        assert xi.n == 0
        assert xi.index == {"u": 1, "w": 2}
        assert xi.fiber_vector("w") == [6, 0]

    def test_four_cycle_has_two_extra_directions(self, four_cycle):
        m = build_model(four_cycle)
        xi = xi_select(m, four_cycle, pants_subordinate(m, four_cycle))
        assert xi.n == 2
        assert len(set(xi.fiber.values())) == 4
        assert all(xi.index[a] != xi.index[b] for a, b in (e.ends for e in four_cycle.edges))

    def test_edge_values_form_a_current(self, pants_pair):
        m = build_model(pants_pair)
        xi = xi_select(m, pants_pair, pants_subordinate(m, pants_pair))
        assert sum(xi.curve_values.values()) == 0


class TestArcPatterns:
    """Tests para los patrones de arcos de enlace"""

    def test_octagon_and_bands(self):
        pattern = pants_arc_pattern((5, -2, -3))
        assert len(pattern.arcs) == 5
        assert pattern.octagons == 1
        assert pattern.bands == 3
        assert pants_arc_pattern((3, -2, -1)).bands == 1
        assert pants_arc_pattern((2, -1, -1)).bands == 0

    def test_any_order_is_canonicalized(self):
        assert pants_arc_pattern((-2, 5, -3)).triple == (5, -2, -3)
        assert canonical_order((1, 2, -3)) == [2, 0, 1]

    def test_bad_triples(self):
        with pytest.raises(BadTriple):
            pants_arc_pattern((1, 1, 1))
        with pytest.raises(BadTriple):
            pants_arc_pattern((2, -2, 0))

    def test_points_per_boundary(self):
        pattern = pants_arc_pattern((-4, 1, 3))
        assert pattern.sign == -1
        assert [len(points) for points in pattern.points] == [4, 1, 3]

    def test_region_potentials(self):
        assert region_potentials(pants_arc_pattern((3, -2, -1))) == {"O": 0, "U1": 1}


class TestCutBindSystem:
    """Tests para el sistema ensamblado y el complejo cuadrado de F"""

    def test_dual_to_xi(self, pants_pair_system):
        assert dual_check(pants_pair_system)
        assert intersection_count(pants_pair_system) == 6
        assert pants_pair_system.tree_curves == ["e1"]
        assert len(pants_pair_system.loops) == 2

    def test_surface_complex(self, pants_pair_system):
        surface = surface_square_complex(pants_pair_system)
        surface.validate()
        assert surface.f_vector() == [4, 12, 6]
        assert surface.euler_characteristic() == -2

    def test_squares_are_cut_by_bind(self, pants_pair_system):
        surface = surface_square_complex(pants_pair_system)
        for cube in surface.cubes:
            assert cube[(0, 0)][0][0] == "bind" and cube[(2, 0)][0][0] == "bind"
            assert cube[(0, 1)][0][0] == "cut" and cube[(1, 1)][0][0] == "cut"

    def test_divisibilities(self, pants_pair_system):
        xi = pants_pair_system.xi
        assert [divisibilities(xi, pants_pair_system, 1, "curve", c) for c in ("e1", "e2", "e3")] == [3, 2, 1]
        assert [divisibilities(xi, pants_pair_system, 2, "curve", c) for c in ("e1", "e2", "e3")] == [3, 2, 1]
        assert divisibilities(xi, pants_pair_system, 1, "l") == 6
        assert divisibilities(xi, pants_pair_system, 2, "l") == 6
        assert divisibilities(xi, pants_pair_system, 2, "pants", "P1[u]") == 1

    def test_index_out_of_range(self, pants_pair_system):
        with pytest.raises(IndexOutOfRange):
            divisibilities(pants_pair_system.xi, pants_pair_system, 3, "l")
