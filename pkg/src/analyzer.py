"""
Motor principal: decisión NPC y cubulación a partir de un archivo de entrada
"""

import hashlib
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from .bkn import decide_npc, u_value
from .config_graph import (
    anosov_classify, bicoloring, bipartite_double_cover, parse_matrix, parse_validate
)
from .current_solver import equivalence_sweep, nondegenerate_point
from .cubulation import (
    CensusReport, PathologyReport, build_pieces, glue_canonical, hyperplane_census,
    lerf_tower_and_certify, pathologies
)
from .cutbind import assemble_cut_bind, pants_subordinate, xi_select
from .models import (
    AnosovVerdict, Certificate, ConfigGraph, CubulationRefused, CurrentSolution, Decision,
    DecisionReport, Provenance, Verdict, end_label
)
from .settings import Settings
from .surface_model import build_model


class CubulationResult(BaseModel):
    """Salida de cubulate; `glued` no se serializa"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    decision: DecisionReport
    n: int
    xi: List[int]
    pieces: List[Dict[str, Any]]
    census: CensusReport
    pathologies: Optional[PathologyReport] = None
    certificate: Optional[Certificate] = None
    notice: str = ""
    glued: Any = Field(default=None, exclude=True)


class MultitwistAnalyzer:
    """
    Orquesta el análisis de un toro de aplicación multitwist: validación,
    normalización bipartita, decisión NPC y cubulación especial
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings()
        self.logger = logging.getLogger(__name__)

    def decide(self, path: Union[str, Path]) -> DecisionReport:
        """
        Decide NPC para un grafo de configuración o una matriz Anosov

        Args:
            path: archivo JSON de entrada

        Returns:
            DecisionReport autoverificable
        """
        text = Path(path).read_text(encoding="utf-8")
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()

        matrix = parse_matrix(text)
        if matrix is not None:
            verdict = anosov_classify(matrix)
            self.logger.info(f"Entrada Anosov: {verdict.value}")
            if verdict == AnosovVerdict.ANOSOV:
                return DecisionReport(
                    digest=digest, verdict=Verdict.NOT_NPC, provenance=Provenance.ANOSOV,
                    tol=self.settings.tol, matrix=matrix, reason="monodromía Anosov: geometría Sol",
                )
            return DecisionReport(
                digest=digest, verdict=Verdict.UNKNOWN, tol=self.settings.tol, matrix=matrix,
                reason="monodromía no Anosov: fuera del alcance de la regla",
            )

        g = parse_validate(text)
        double = False
        if bicoloring(g) is None:
            self.logger.info("Grafo no bipartito: se pasa al recubrimiento doble")
            g, _ = bipartite_double_cover(g)
            double = True

        decision = decide_npc(g, tol=self.settings.tol, max_iter=self.settings.max_newton)
        report = self._report(g, decision, digest, double)
        self.logger.info(f"Veredicto: {report.verdict.value} ({report.provenance.value if report.provenance else '-'})")
        return report

    def _report(self, g: ConfigGraph, decision: Decision, digest: str, double: bool) -> DecisionReport:
        report = DecisionReport(
            digest=digest,
            verdict=decision.verdict,
            provenance=decision.provenance,
            tol=self.settings.tol,
            graph=g,
            double_cover=double,
            reason=decision.reason,
            diagnostics={k: v if isinstance(v, (str, int, float, list)) else str(v)
                         for k, v in decision.diagnostics.items()},
        )
        point = nondegenerate_point(g) if decision.provenance != Provenance.ALL_POSITIVE else None
        if isinstance(point, CurrentSolution):
            report.current = {label: str(value) for label, value in point.x.items()}
        cand = decision.candidate
        if cand is not None:
            report.solution = {
                "t": {v: repr(x) for v, x in cand.t.items()},
                "omega": {label: repr(x) for label, x in cand.omega.items()},
                "u": {end_label(end): repr(u_value(g, cand, end)) for end in g.ends},
                "gamma": {eid: repr(x) for eid, x in cand.gamma.items()},
            }
            report.margin = cand.margin
        if decision.verification is not None:
            report.residuals = dict(decision.verification.vertex_residuals)
            report.residuals.update({f"cycle:{k}": v for k, v in decision.verification.cycle_residuals.items()})
        return report

    def cubulate(self, path: Union[str, Path], classify: bool = True, progress: bool = False) -> CubulationResult:
        """
        Cubulación completa: pantalones, ξ, sistema cortar-enlazar, piezas,
        pegado, censo, patologías de X y torre hasta el certificado

        Raises:
            CubulationRefused si no hay corriente no degenerada
            TowerBlowup si la torre excede el presupuesto de celdas
        """
        decision = self.decide(path)
        if decision.graph is None or not decision.current:
            raise CubulationRefused(
                f"Sin solución de corriente no degenerada (veredicto {decision.verdict.value}); "
                f"ejecute decide para el detalle"
            )
        g = decision.graph
        model = build_model(g)
        decomposition = pants_subordinate(model, g)
        xi = xi_select(model, g, decomposition)
        system = assemble_cut_bind(model, g, decomposition, xi)
        pieces = build_pieces(xi, system)
        glued = glue_canonical(pieces, system, xi)
        census = hyperplane_census(glued)

        rows = [
            {
                "vertex": v,
                "index": piece.index,
                "pants": len(piece.pants),
                "fiber_order": piece.order,
                "homology_order": piece.homology_order,
                "finite": piece.finite,
            }
            for v, piece in pieces.items()
        ]
        result = CubulationResult(
            decision=decision, n=xi.n, xi=list(xi.xi), pieces=rows, census=census, glued=glued,
        )
        if not glued.materialized:
            result.notice = f"n = {xi.n}: censo simbólico; no se materializa el complejo"
            self.logger.warning(result.notice)
            return result

        result.pathologies = pathologies(glued.identity_covering(), glued)
        result.certificate = lerf_tower_and_certify(
            glued,
            budget=self.settings.budget,
            dim_cap=self.settings.dim_cap,
            classify=classify,
            progress=progress,
        )
        return result

    def sweep(self, max_vertices: int = 3, max_edges: int = 5,
              b_values: Sequence[int] = (-3, -2, -1, 1, 2, 3), progress: bool = True) -> pd.DataFrame:
        return equivalence_sweep(max_vertices, max_edges, b_values, progress=progress)
