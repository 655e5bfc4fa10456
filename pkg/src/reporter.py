import json
import logging
import shutil
from pathlib import Path
from typing import Any, List, Optional

import pandas as pd
from tabulate import tabulate

from .config_graph import to_dot
from .models import ArtifactMissing, Certificate, DecisionReport


ARTIFACTS = {
    "report": "decision.json",
    "census": "census.json",
    "certificate": "certificate.json",
    "complex": "complex.json",
    "config": "config.dot",
    "crossing-graph": "crossing.dot",
}


class ReportGenerator:
    """
    Generador de reportes: tablas de consola y artefactos JSON/DOT
    """

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def decision_table(self, report: DecisionReport) -> str:
        rows = [
            ["Veredicto", report.verdict.value],
            ["Procedencia", report.provenance.value if report.provenance else "-"],
            ["Recubrimiento doble", "sí" if report.double_cover else "no"],
            ["Tolerancia", f"{report.tol:.1e}"],
        ]
        if report.residuals:
            rows.append(["Residuo máximo", f"{max(report.residuals.values()):.3e}"])
        if report.margin is not None:
            rows.append(["Margen min(1 − |γ|)", f"{report.margin:.6f}"])
        if report.current:
            rows.append(["Corriente", ", ".join(f"{k}={v}" for k, v in sorted(report.current.items()))])
        if report.reason:
            rows.append(["Motivo", report.reason])
        table = tabulate(rows, tablefmt="grid", stralign="left")

        if report.solution:
            detail = [
                [eid, report.solution["gamma"][eid],
                 report.solution["u"].get(f"{eid}:0", "-"), report.solution["u"].get(f"{eid}:1", "-")]
                for eid in sorted(report.solution["gamma"])
            ]
            table += "\n\n" + tabulate(detail, headers=["Arista", "γ", "u(δ₀)", "u(δ₁)"], tablefmt="grid")
        return table

    def census_table(self, census) -> str:
        rows = []
        for row in census.pants:
            for j, count in sorted(row.horizontal.items()):
                boundary = ", ".join(f"{cid}:{values[0]}" for cid, values in sorted(row.boundary.items()))
                rows.append([row.pants, row.index, row.vertical, j, count, boundary])
        table = tabulate(
            rows,
            headers=["Pantalón", "i(P)", "Verticales", "j", "Horizontales", "Circunferencias/H"],
            tablefmt="grid",
            numalign="center",
        )
        return f"Hiperplanos de corte: {census.cut} (curvas: {census.curves})\n{table}"

    def certificate_table(self, certificate: Certificate) -> str:
        rows = [
            [s.index, s.l, s.divisibility, s.cyclic_degree, s.completed_hyperplanes, s.core_order, s.degree]
            for s in certificate.stages
        ]
        table = tabulate(
            rows,
            headers=["j", "l^j", "div", "Grado cíclico", "Compleciones", "|G|", "Grado"],
            tablefmt="grid",
            numalign="center",
        )
        summary = tabulate(
            [
                ["Veredicto", certificate.verdict],
                ["Grado sobre X", certificate.degree],
                ["f-vector", certificate.f_vector],
                ["Hiperplanos", certificate.hyperplanes],
                ["Aristas del grafo de cruces", certificate.crossing_edges],
                ["Isometría local", "sí" if certificate.local_isometry else "no"],
                ["Clasificación ι", certificate.classification],
            ],
            tablefmt="grid",
            stralign="left",
        )
        return f"{table}\n\n{summary}"

    def sweep_summary(self, frame: pd.DataFrame) -> str:
        if frame.empty:
            return "Sin configuraciones"
        rows = [
            ["Configuraciones", len(frame)],
            ["Corriente factible", int(frame["feasible"].sum())],
            ["Todas sobreviven", int(frame["all_survive"].sum())],
            ["Acuerdo", f"{frame['agree'].mean() * 100:.1f}%"],
            ["Suficiencia de ciclos", f"{frame['cycle_sufficiency'].mean() * 100:.1f}%"],
        ]
        return tabulate(rows, tablefmt="grid", stralign="left")

    def write_json(self, data: Any, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, indent=2, ensure_ascii=False, default=str), encoding="utf-8")
        self.logger.info(f"Escrito {path}")
        return path

    def write_decision(self, report: DecisionReport, workdir: Path) -> Path:
        written = self.write_json(report.model_dump(mode="json"), workdir / ARTIFACTS["report"])
        if report.graph is not None:
            (workdir / ARTIFACTS["config"]).write_text(to_dot(report.graph), encoding="utf-8")
        return written

    def write_cubulation(self, result, workdir: Path, dot_dir: Optional[Path] = None) -> List[Path]:
        """Informe de decisión, censo, certificado, complejo X y grafos DOT"""
        paths = [self.write_decision(result.decision, workdir)]
        paths.append(self.write_json(result.census.model_dump(mode="json"), workdir / ARTIFACTS["census"]))
        if result.glued is not None and result.glued.materialized:
            paths.append(self.write_json(result.glued.complex.to_json(), workdir / ARTIFACTS["complex"]))
        if result.certificate is not None:
            paths.append(self.write_json(
                result.certificate.model_dump(mode="json"), workdir / ARTIFACTS["certificate"]
            ))
            crossing = workdir / ARTIFACTS["crossing-graph"]
            crossing.write_text(result.certificate.crossing_dot, encoding="utf-8")
            paths.append(crossing)
        if dot_dir is not None:
            dot_dir.mkdir(parents=True, exist_ok=True)
            for name in (ARTIFACTS["config"], ARTIFACTS["crossing-graph"]):
                source = workdir / name
                if source.exists():
                    paths.append(Path(shutil.copy(source, dot_dir / name)))
        return paths

    def export(self, workdir: Path, what: str, output: Optional[Path] = None) -> Path:
        """
        Copia un artefacto previo

        Raises:
            ArtifactMissing si el artefacto no existe en workdir
        """
        source = workdir / ARTIFACTS[what]
        if not source.exists():
            raise ArtifactMissing(f"No existe {source}; ejecute antes decide o cubulate")
        if output is None:
            return source
        output.parent.mkdir(parents=True, exist_ok=True)
        return Path(shutil.copy(source, output))

    def load_decision(self, path: Path) -> DecisionReport:
        if not path.exists():
            raise ArtifactMissing(f"No existe {path}")
        return DecisionReport.model_validate(json.loads(path.read_text(encoding="utf-8")))

    def sweep_csv(self, frame: pd.DataFrame, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, encoding="utf-8")
        self.logger.info(f"Barrido exportado a {path}")
        return path
