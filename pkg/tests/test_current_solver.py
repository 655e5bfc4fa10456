"""
Tests para las ecuaciones de corriente
"""

from fractions import Fraction

import pytest

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from src.current_solver import (
    check_all_cycles, check_solution, crosscheck_survival, enumerate_configurations,
    equivalence_sweep, expand, nondegenerate_point, simple_cycles, solution_space
)
from src.models import CurrentSolution, InfeasibilityWitness, NotBipartite
from tests.conftest import make_graph


class TestSolutionSpace:
    """Tests para el espacio de soluciones simétricas"""

    def test_pants_pair_is_one_dimensional(self, pants_pair):
        assert solution_space(pants_pair) == [[3, -2, -1]]

    def test_opposite_pair(self):
        g = make_graph({"u": -2, "w": -2}, [("e1", "u", "w", 1), ("e2", "u", "w", -1)])
        assert solution_space(g) == [[1, -1]]

    def test_equal_pair_has_no_solution(self):
        g = make_graph({"u": -2, "w": -2}, [("e1", "u", "w", 1), ("e2", "u", "w", 1)])
        assert solution_space(g) == []

    def test_odd_cycle_rejected(self, triangle):
        with pytest.raises(NotBipartite):
            solution_space(triangle)


class TestNondegeneratePoint:
    """Tests para el punto no degenerado y el testigo de infactibilidad"""

    def test_pants_pair(self, pants_pair):
        point = nondegenerate_point(pants_pair)
        assert isinstance(point, CurrentSolution)
        assert point.nondegenerate
        assert point.at(("e1", 0)) == 3
        assert point.at(("e1", 1)) == -3
        assert point.at(("e2", 0)) == -2
        assert check_solution(pants_pair, point)

    def test_all_positive_gives_witness(self, all_positive):
        point = nondegenerate_point(all_positive)
        assert isinstance(point, InfeasibilityWitness)
        assert point.end == ("e1", 0)
        assert point.basis == []

    def test_four_cycle_alternates(self, four_cycle):
        point = nondegenerate_point(four_cycle)
        assert isinstance(point, CurrentSolution)
        assert all(point.at((eid, 0)) == 1 for eid in four_cycle.edge_ids)
        assert all(point.at((eid, 1)) == -1 for eid in four_cycle.edge_ids)

    def test_solution_satisfies_every_simple_cycle(self, pants_pair, four_cycle):
        for g in (pants_pair, four_cycle):
            point = nondegenerate_point(g)
            assert check_all_cycles(g, point)

    def test_expand_orientation(self, pants_pair):
        x = expand(pants_pair, [Fraction(3), Fraction(-2), Fraction(-1)])
        assert x.x["e3:0"] == -1
        assert x.x["e3:1"] == 1


class TestSurvivalCrosscheck:
    """Tests para la equivalencia con la supervivencia homológica"""

    def test_pants_pair_agrees(self, pants_pair):
        report = crosscheck_survival(pants_pair)
        assert report.feasible and report.all_survive and report.agree

    def test_all_positive_agrees(self, all_positive):
        report = crosscheck_survival(all_positive)
        assert not report.feasible
        assert not report.all_survive
        assert report.agree

    def test_simple_cycles_include_parallel_pairs(self, pants_pair):
        assert len(simple_cycles(pants_pair)) == 3

    def test_enumeration_is_bipartite_and_valid(self):
        graphs = list(enumerate_configurations(max_vertices=2, max_edges=2, b_values=(-1, 1)))
        assert len(graphs) == 5
        for g in graphs:
            assert all(g.genus(v) >= 0 for v in g.vertex_ids)

    def test_small_sweep_agrees(self):
        frame = equivalence_sweep(max_vertices=2, max_edges=3, b_values=(-2, -1, 1, 2), progress=False)
        assert not frame.empty
        assert frame["agree"].all()
        assert frame["cycle_sufficiency"].all()

    @pytest.mark.slow
    def test_full_sweep_agrees(self):
        frame = equivalence_sweep(max_vertices=3, max_edges=5, b_values=(-3, -2, -1, 1, 2, 3), progress=False)
        assert set(frame["vertices"]) == {2, 3}
        assert frame["edges"].max() == 5
        assert frame["agree"].all()
        assert frame["cycle_sufficiency"].all()
