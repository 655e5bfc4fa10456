"""
Tests para las ecuaciones BKN y la decisión NPC
"""

import math
from fractions import Fraction

import pytest

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from src import bkn
from src.bkn import (
    GAMMA_GRID, affine_general_convert, decide_npc, from_current, gluing_matrix, grid_starts,
    newton_refine, potentials, recheck, residual_series_coefficient, theta_classes, trivial_candidate,
    vertex_residuals, verify
)
from src.config_graph import bipartite_double_cover
from src.current_solver import enumerate_configurations, nondegenerate_point
from src.models import (
    AffineBkn, BknCandidate, CheckStatus, ConversionDirection, CurrentSolution, CycleInconsistent,
    DecisionReport, DegenerateCandidate, GeneralBkn, MalformedCandidate, MarginLoss, NoConvergence,
    NotBipartite, PotentialInconsistency, Provenance, Verdict, ZeroVertexWeight, bar
)
from tests.conftest import make_graph


SWEEP = {"max_vertices": 3, "max_edges": 3, "b_values": (-2, -1, 1, 2)}


class TestCandidate:
    """Tests para el modelo del candidato (t, ω)"""

    def test_gamma_is_derived_from_omega(self):
        cand = BknCandidate(t={"u": 0.0}, omega={"e1:0": math.pi ** 2 / 8, "e1:1": math.pi ** 2 / 8})
        assert cand.gamma["e1"] == pytest.approx(0.0, abs=1e-12)
        assert cand.margin == pytest.approx(1.0)

    def test_negative_omega_rejected(self):
        with pytest.raises(MalformedCandidate):
            BknCandidate(t={"u": 0.0}, omega={"e1:0": -0.1, "e1:1": 0.2})

    def test_missing_end_rejected(self):
        with pytest.raises(MalformedCandidate):
            BknCandidate(t={"u": 0.0}, omega={"e1:0": 0.1})

    def test_inconsistent_gamma_rejected(self):
        with pytest.raises(MalformedCandidate):
            BknCandidate(t={"u": 0.0}, omega={"e1:0": 0.0, "e1:1": 0.0}, gamma={"e1": 0.5})


class TestVerify:
    """Tests para la verificación de candidatos"""

    def test_trivial_candidate_on_zero_charge(self, pants_pair):
        report = verify(pants_pair, trivial_candidate(pants_pair))
        assert report.status == CheckStatus.PASS
        assert report.max_residual == pytest.approx(0.0, abs=1e-15)
        assert all(r == 0.0 for r in report.cycle_residuals.values())

    def test_trivial_candidate_fails_with_charge(self, four_cycle):
        report = verify(four_cycle, trivial_candidate(four_cycle))
        assert report.status == CheckStatus.FAIL
        assert report.vertex_residuals["v2"] == pytest.approx(1.5)

    def test_shape_mismatch(self, pants_pair):
        cand = BknCandidate.from_gamma(t={"u": 0.0}, gamma={"e1": 0.0})
        with pytest.raises(MalformedCandidate):
            verify(pants_pair, cand)

    def test_closed_form_solution(self, mixed_pair):
        cand = BknCandidate.from_gamma(t={"u": 0.0, "w": 0.0}, gamma={"e1": 0.5, "e2": 0.5, "e3": 0.0})
        report = verify(mixed_pair, cand)
        assert report.passed
        assert report.max_residual <= 1e-12


class TestPerturbation:
    """Tests para la curva de candidatos desde la corriente"""

    def test_pants_pair_residual_vanishes(self, pants_pair):
        x = nondegenerate_point(pants_pair)
        for s in (0.01, 0.05, 0.2):
            residuals = vertex_residuals(pants_pair, from_current(pants_pair, x, s))
            assert all(abs(r) <= 1e-12 for r in residuals.values())

    def test_four_cycle_residual(self, four_cycle):
        x = nondegenerate_point(four_cycle)
        residuals = vertex_residuals(four_cycle, from_current(four_cycle, x, 0.1))
        expected = math.tanh(0.1) - math.tanh(0.2) / 2
        assert abs(residuals["v1"]) == pytest.approx(expected, rel=1e-9)
        assert abs(residuals["v1"]) == pytest.approx(9.8033e-4, abs=1e-7)

    def test_potentials_follow_current(self, four_cycle):
        x = nondegenerate_point(four_cycle)
        levels = potentials(four_cycle, x)
        assert levels["v1"] == 0
        for end in four_cycle.ends:
            assert levels[four_cycle.v(bar(end))] == levels[four_cycle.v(end)] - four_cycle.b(end) * x.at(end)

    def test_potentials_detect_inconsistency(self, pants_pair):
        x = CurrentSolution(x={f"{e}:{s}": Fraction(1 - 2 * s) for e in ("e1", "e2", "e3") for s in (0, 1)})
        with pytest.raises(PotentialInconsistency):
            potentials(pants_pair, x)

    def test_series_coefficient(self, four_cycle):
        x = nondegenerate_point(four_cycle)
        coefficient = residual_series_coefficient(four_cycle, x)
        assert coefficient["v1"] == Fraction(-1, 3) + Fraction(4, 3)

    def test_residual_is_cubic_in_s(self, four_cycle):
        x = nondegenerate_point(four_cycle)
        coefficient = residual_series_coefficient(four_cycle, x)
        checked = 0
        for v, c in coefficient.items():
            if c == 0:
                continue
            ratios = [
                vertex_residuals(four_cycle, from_current(four_cycle, x, s))[v] / s ** 3
                for s in (1e-1, 1e-2, 1e-3)
            ]
            assert all(r == pytest.approx(ratios[-1], rel=0.05) for r in ratios)
            assert abs(ratios[-1]) == pytest.approx(abs(float(c)), rel=1e-3)
            checked += 1
        assert checked > 0

    def test_newton_on_four_cycle(self, four_cycle):
        x = nondegenerate_point(four_cycle)
        refined = newton_refine(four_cycle, from_current(four_cycle, x, 0.1), tol=1e-12, max_iter=20)
        report = verify(four_cycle, refined, tol=1e-12)
        assert report.passed
        assert all(w > 0 for w in refined.omega.values())

    def test_newton_keeps_exact_candidate(self, pants_pair):
        cand = trivial_candidate(pants_pair)
        assert newton_refine(pants_pair, cand) is cand

    def test_newton_rejects_degenerate_input(self, pants_pair):
        cand = BknCandidate.from_gamma(t={"u": 0.0, "w": 0.0}, gamma={"e1": 1.0, "e2": 0.0, "e3": 0.0})
        with pytest.raises(MarginLoss):
            newton_refine(pants_pair, cand)


class TestConversion:
    """Tests para la conversión entre la forma general y la afín"""

    def test_unit_weights(self, pants_pair):
        general = GeneralBkn(a={"u": 1, "w": 1}, gamma={"e1": 0, "e2": 0, "e3": 0})
        affine = affine_general_convert(pants_pair, ConversionDirection.GENERAL_TO_AFFINE, general)
        assert set(affine.u.values()) == {1}
        assert set(affine.gamma.values()) == {0}

    def test_exact_round_trip(self, mixed_pair):
        general = GeneralBkn(
            a={"u": Fraction(1), "w": Fraction(10, 9)},
            gamma={"e1": Fraction(9, 10), "e2": Fraction(9, 10), "e3": Fraction(-9, 10)},
        )
        affine = affine_general_convert(mixed_pair, ConversionDirection.GENERAL_TO_AFFINE, general)
        assert affine.u["e1:0"] == Fraction(10, 9)
        assert affine.gamma["e3:0"] == Fraction(9, 10)
        back = affine_general_convert(mixed_pair, ConversionDirection.AFFINE_TO_GENERAL, affine)
        assert back.a == general.a
        assert back.gamma == general.gamma

    def test_zero_weight(self, pants_pair):
        general = GeneralBkn(a={"u": 0, "w": 1}, gamma={"e1": 0, "e2": 0, "e3": 0})
        with pytest.raises(ZeroVertexWeight):
            affine_general_convert(pants_pair, ConversionDirection.GENERAL_TO_AFFINE, general)

    def test_cycle_inconsistent(self, pants_pair):
        u = {"e1:0": 2.0, "e1:1": 0.5, "e2:0": 3.0, "e2:1": 1 / 3, "e3:0": 2.0, "e3:1": 0.5}
        affine = AffineBkn(u=u, gamma={label: 0.0 for label in u})
        with pytest.raises(CycleInconsistent):
            affine_general_convert(pants_pair, ConversionDirection.AFFINE_TO_GENERAL, affine)


class TestThetaClasses:
    """Tests para las clases θ± y sus identidades"""

    def test_trivial_candidate_identities(self, pants_pair):
        classes, report = theta_classes(pants_pair, trivial_candidate(pants_pair))
        assert report.passed
        assert report.unit_pairing_error == pytest.approx(0.0, abs=1e-12)
        theta_plus = classes.theta_plus["e1:0"]
        assert theta_plus == pytest.approx((1 / 2, 1 / 2))

    def test_gluing_is_involution(self):
        matrix = gluing_matrix(-3)
        square = [[sum(matrix[i][k] * matrix[k][j] for k in range(2)) for j in range(2)] for i in range(2)]
        assert square == [[1, 0], [0, 1]]

    def test_closed_form_charge_identity(self, mixed_pair):
        cand = BknCandidate.from_gamma(t={"u": 0.0, "w": 0.0}, gamma={"e1": 0.5, "e2": 0.5, "e3": 0.0})
        _, report = theta_classes(mixed_pair, cand)
        assert report.charge_error <= 1e-10

    def test_requires_verified_candidate(self, four_cycle):
        with pytest.raises(DegenerateCandidate):
            theta_classes(four_cycle, trivial_candidate(four_cycle))


class TestDecision:
    """Tests para decide_npc y la reverificación del informe"""

    def test_pants_pair_current_route(self, pants_pair):
        decision = decide_npc(pants_pair)
        assert decision.verdict == Verdict.NPC_CERTIFIED
        assert decision.provenance == Provenance.CURRENT
        assert decision.verification.passed
        assert decision.exit_code == 0

    def test_all_positive_rule(self, all_positive):
        decision = decide_npc(all_positive)
        assert decision.verdict == Verdict.NOT_NPC
        assert decision.provenance == Provenance.ALL_POSITIVE
        assert decision.exit_code == 1

    def test_infeasible_current_goes_numeric(self, mixed_pair):
        decision = decide_npc(mixed_pair)
        assert decision.verdict == Verdict.NPC_CERTIFIED
        assert decision.provenance == Provenance.NUMERIC
        assert decision.diagnostics["current_witness"] == "e1:0"

    def test_four_cycle_certified(self, four_cycle):
        decision = decide_npc(four_cycle)
        assert decision.verdict == Verdict.NPC_CERTIFIED
        assert decision.provenance == Provenance.CURRENT

    def test_grid_starts_fix_first_vertex(self, four_cycle, mixed_pair):
        starts = grid_starts(mixed_pair)
        assert len(starts) == 5 * len(GAMMA_GRID)
        assert starts[0] == ({"u": 0.0, "w": 0.0}, 0.0)
        assert all(t["u"] == 0.0 for t, _ in starts)
        assert len(grid_starts(four_cycle, max_starts=40)) <= 40

    def test_grid_search_certifies_path(self):
        g = make_graph(
            {"v0": -1, "v1": -1, "v2": -2},
            [("e1", "v0", "v1", -2), ("e2", "v0", "v2", -1), ("e3", "v0", "v2", 1)],
        )
        decision = decide_npc(g)
        assert decision.verdict == Verdict.NPC_CERTIFIED
        assert decision.provenance == Provenance.NUMERIC
        assert decision.verification.passed
        assert decision.diagnostics["numeric_attempts"][-1].endswith("certificado")

    def test_unknown_lists_every_start(self, mixed_pair, monkeypatch):
        def never_converges(g, cand, tol=1e-12, max_iter=50):
            raise NoConvergence("sin convergencia")

        monkeypatch.setattr(bkn, "newton_refine", never_converges)
        decision = decide_npc(mixed_pair)
        assert decision.verdict == Verdict.UNKNOWN
        attempts = decision.diagnostics["numeric_attempts"]
        assert len(attempts) == len(grid_starts(mixed_pair))
        assert attempts[0].startswith("t=(0, 0) γ0=0")

    def test_odd_cycle_rejected(self, triangle):
        with pytest.raises(NotBipartite):
            decide_npc(triangle)

    def test_recheck_from_serialized_report(self, pants_pair):
        decision = decide_npc(pants_pair)
        cand = decision.candidate
        report = DecisionReport(
            digest="x", verdict=decision.verdict, provenance=decision.provenance, graph=pants_pair,
            solution={
                "t": {v: repr(x) for v, x in cand.t.items()},
                "omega": {label: repr(x) for label, x in cand.omega.items()},
            },
        )
        reloaded = DecisionReport.model_validate_json(report.model_dump_json())
        assert recheck(reloaded)

    def test_recheck_detects_tampering(self, pants_pair):
        omega = {"e1": "1.0", "e2": "0.5", "e3": "0.1"}
        report = DecisionReport(
            digest="x", verdict=Verdict.NPC_CERTIFIED, provenance=Provenance.CURRENT, graph=pants_pair,
            solution={"t": {"u": "0.0", "w": "0.5"},
                      "omega": {f"{e}:{s}": value for e, value in omega.items() for s in (0, 1)}},
        )
        assert not recheck(report)

    def test_recheck_sign_rule(self, all_positive, pants_pair):
        good = DecisionReport(digest="x", verdict=Verdict.NOT_NPC, provenance=Provenance.ALL_POSITIVE,
                              graph=all_positive)
        bad = DecisionReport(digest="x", verdict=Verdict.NOT_NPC, provenance=Provenance.ALL_POSITIVE,
                             graph=pants_pair)
        assert recheck(good)
        assert not recheck(bad)

    def test_recheck_anosov(self):
        report = DecisionReport(digest="x", verdict=Verdict.NOT_NPC, provenance=Provenance.ANOSOV,
                                matrix=[[2, 1], [1, 1]])
        assert recheck(report)


def _lift(candidate: BknCandidate, cover, covering) -> BknCandidate:
    return BknCandidate(
        t={v: candidate.t[covering.vertex_map[v]] for v in cover.vertex_ids},
        omega={
            f"{eid}:{side}": candidate.omega[f"{covering.edge_map[eid]}:{side}"]
            for eid in cover.edge_ids for side in (0, 1)
        },
    )


@pytest.mark.slow
class TestSweepProperties:
    """Tests de propiedades sobre el barrido de configuraciones pequeñas"""

    def test_theta_identities_on_certified_candidates(self):
        certified = 0
        for g in enumerate_configurations(**SWEEP):
            decision = decide_npc(g, tol=1e-12)
            if decision.verdict != Verdict.NPC_CERTIFIED:
                continue
            certified += 1
            _, report = theta_classes(g, decision.candidate, tol=1e-10)
            assert report.passed, g.model_dump()
        assert certified > 0

    def test_verdicts_survive_double_cover(self):
        for g in enumerate_configurations(**SWEEP):
            decision = decide_npc(g)
            if decision.verdict == Verdict.UNKNOWN:
                continue
            cover, covering = bipartite_double_cover(g)
            assert all(e.b == 2 * g.edge(covering.edge_map[e.id]).b for e in cover.edges)
            if decision.verdict == Verdict.NOT_NPC:
                assert decide_npc(cover).verdict == Verdict.NOT_NPC
                continue
            assert verify(cover, _lift(decision.candidate, cover, covering)).passed, g.model_dump()
            if decision.provenance == Provenance.CURRENT:
                lifted = decide_npc(cover)
                assert lifted.verdict == Verdict.NPC_CERTIFIED
                assert lifted.provenance == Provenance.CURRENT
