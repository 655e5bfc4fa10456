"""
Tests para el modelo simpléctico de H₁(F)
"""

import pytest
from sympy import Matrix, eye

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from src.models import InconsistentCycle, SurfaceModel
from src.surface_model import (
    boundary_signs, build_model, check_model, edge_values, fiber_values, invariant_functionals, sigma_star,
    survives, twist_matrix
)


class TestBuildModel:
    """Tests para la base simpléctica y las clases de las curvas"""

    def test_pants_pair_basis(self, pants_pair):
        m = build_model(pants_pair)
        assert m.labels == ["z[e2]", "c[e2]", "z[e3]", "c[e3]"]
        assert m.curve_classes["e2"] == [1, 0, 0, 0]
        assert m.curve_classes["e3"] == [0, 0, 1, 0]
        assert m.curve_classes["e1"] == [-1, 0, -1, 0]

    def test_boundary_signs_follow_bicoloring(self, pants_pair):
        eps = boundary_signs(pants_pair)
        assert eps["e1:0"] == 1 and eps["e1:1"] == -1

    def test_separating_curve_is_null(self, separating_edge):
        m = build_model(separating_edge)
        assert m.dim == 4
        assert m.curve_classes["e1"] == [0, 0, 0, 0]
        assert twist_matrix(m, "e1", 5) == eye(4)

    def test_model_checks(self, pants_pair, four_cycle):
        for g in (pants_pair, four_cycle):
            checks = check_model(build_model(g), g)
            assert all(checks.values()), checks

    def test_curve_classes_are_isotropic(self, pants_pair):
        m = build_model(pants_pair)
        classes = list(m.curve_classes.values())
        assert all(m.form(x, y) == 0 for x in classes for y in classes)


class TestMonodromy:
    """Tests para σ_*, supervivencia y funcionales invariantes"""

    def test_single_handle_twist(self):
        m = SurfaceModel(
            labels=["a1", "b1"], intersection=[[0, 1], [-1, 0]], curve_classes={"z": [1, 0]},
            eps={}, tree_edges=[], nontree_edges=[],
        )
        image = twist_matrix(m, "z") * Matrix([0, 1])
        assert list(image) == [1, 1]

    def test_sigma_fixes_curves(self, pants_pair):
        m = build_model(pants_pair)
        sigma = sigma_star(m, pants_pair)
        for cls in m.curve_classes.values():
            assert sigma * Matrix(cls) == Matrix(cls)

    def test_twists_commute(self, four_cycle):
        m = build_model(four_cycle)
        first = twist_matrix(m, "e1", 1) * twist_matrix(m, "e2", 2)
        second = twist_matrix(m, "e2", 2) * twist_matrix(m, "e1", 1)
        assert first == second

    def test_survival(self, pants_pair, all_positive):
        m = build_model(pants_pair)
        assert survives(m, pants_pair, m.curve_classes["e1"])
        assert not survives(m, pants_pair, [0, 0, 0, 0])

        dead = build_model(all_positive)
        assert not survives(dead, all_positive, dead.curve_classes["e1"])

    def test_invariant_functionals_of_identity(self, separating_edge):
        m = build_model(separating_edge)
        assert len(invariant_functionals(m, separating_edge)) == 4

    def test_pants_pair_invariant_values(self, pants_pair):
        m = build_model(pants_pair)
        basis = invariant_functionals(m, pants_pair)
        values = [
            tuple(sum(a * b for a, b in zip(xi, m.curve_classes[eid])) for eid in ("e1", "e2", "e3"))
            for xi in basis
        ]
        nonzero = [v for v in values if any(v)]
        assert nonzero
        for v in nonzero:
            assert v[0] * -2 == v[1] * 3
            assert v[0] * -1 == v[2] * 3

    def test_fiber_values(self, pants_pair):
        m = build_model(pants_pair)
        xi = [-2, 0, -1, 0]
        assert fiber_values(m, pants_pair, xi) == {"u": 0, "w": 6}

    def test_fiber_values_reject_inconsistent_cycle(self, pants_pair):
        m = build_model(pants_pair)
        with pytest.raises(InconsistentCycle):
            fiber_values(m, pants_pair, [1, 0, 0, 0])

    def test_edge_values(self, pants_pair):
        m = build_model(pants_pair)
        assert edge_values(m, [-2, 0, -1, 0]) == {"e1": 3, "e2": -2, "e3": -1}
