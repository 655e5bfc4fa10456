#!/usr/bin/env python3
"""
Multitwist Mapping Torus Analyzer CLI
Decisión de curvatura no positiva y cubulación especial
"""

import json
import logging
import sys
from pathlib import Path

import click
from dotenv import load_dotenv

# Agregar el directorio src al path
sys.path.insert(0, str(Path(__file__).parent / 'src'))

from src.analyzer import MultitwistAnalyzer
from src.bkn import recheck
from src.models import (
    ConfigValidationError, ConfigurationError, MultitwistError, NotUnimodular, TowerBlowup
)
from src.reporter import ARTIFACTS, ReportGenerator
from src.settings import Settings


logger = logging.getLogger(__name__)

EXIT_INPUT = 64
EXIT_FAILURE = 3


def setup_logging(log_file: str) -> None:
    logging.basicConfig(
        level=logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file, encoding='utf-8'),
            logging.StreamHandler()
        ]
    )


def _settings(**overrides) -> Settings:
    try:
        return Settings.from_env(overrides)
    except ConfigurationError as e:
        click.echo(f"❌ Configuración inválida: {e}")
        sys.exit(EXIT_INPUT)


def _fail(error: Exception, as_json: bool) -> None:
    """Traduce una excepción del análisis a código de salida"""
    if isinstance(error, (ConfigValidationError, ConfigurationError, NotUnimodular)):
        if as_json:
            issues = getattr(error, "issues", None)
            body = {
                "error": type(error).__name__,
                "issues": [i.model_dump() for i in issues] if issues else [{"code": "MalformedInput", "message": str(error)}],
            }
            click.echo(json.dumps(body, ensure_ascii=False))
        else:
            click.echo(f"❌ Entrada inválida: {error}")
        sys.exit(EXIT_INPUT)
    if isinstance(error, TowerBlowup):
        click.echo(f"💥 La torre excede el presupuesto: {error}")
        sys.exit(EXIT_FAILURE)
    click.echo(f"❌ Error: {type(error).__name__}: {error}")
    sys.exit(EXIT_FAILURE)


@click.group()
@click.version_option(version='1.0.0')
def cli():
    """
    🌀 Multitwist Mapping Torus Analyzer

    Decide si el toro de aplicación de un multitwist admite una métrica de
    curvatura no positiva y construye su cubulación virtualmente especial.
    """
    # Cargar variables de entorno
    load_dotenv()
    setup_logging(_settings().log_file)


@cli.command()
@click.argument('path', type=click.Path(exists=True, dir_okay=False))
@click.option('--tol', type=float, default=None, help='Tolerancia de los residuos (por defecto 1e-10)')
@click.option('--recheck', 'do_recheck', is_flag=True, help='Reverificar el informe desde su serialización')
@click.option('--json', 'as_json', is_flag=True, help='Imprimir el informe en JSON')
@click.option('--dot-dir', type=click.Path(file_okay=False), help='Directorio para el DOT del grafo')
def decide(path, tol, do_recheck, as_json, dot_dir):
    """
    Decidir NPC para un grafo de configuración o una matriz Anosov

    Códigos de salida: 0 NPC, 1 NO NPC, 2 desconocido, 64 entrada inválida.
    """
    settings = _settings(tol=tol)
    analyzer = MultitwistAnalyzer(settings)
    reporter = ReportGenerator()
    try:
        report = analyzer.decide(path)
        workdir = settings.ensure_workdir()
        written = reporter.write_decision(report, workdir)
        if dot_dir and report.graph is not None:
            Path(dot_dir).mkdir(parents=True, exist_ok=True)
            reporter.export(workdir, "config", Path(dot_dir) / ARTIFACTS["config"])
        if do_recheck:
            reloaded = reporter.load_decision(written)
            if not recheck(reloaded):
                click.echo("❌ La reverificación del informe no coincide")
                sys.exit(EXIT_FAILURE)
            if not as_json:
                click.echo("🔁 Reverificación desde el informe: OK")
    except MultitwistError as e:
        _fail(e, as_json)
        return

    if as_json:
        click.echo(report.model_dump_json(indent=2))
    else:
        icon = {0: "✅", 1: "⛔", 2: "❓"}[report.exit_code]
        click.echo(f"{icon} Veredicto: {report.verdict.value}")
        click.echo(reporter.decision_table(report))
        click.echo(f"💾 Informe: {written}")
    sys.exit(report.exit_code)


@cli.command()
@click.argument('path', type=click.Path(exists=True, dir_okay=False))
@click.option('--tol', type=float, default=None, help='Tolerancia de los residuos')
@click.option('--budget', type=int, default=None, help='Presupuesto de celdas de la torre')
@click.option('--dim-cap', type=int, default=None, help='Dimensión máxima del complejo de Salvetti')
@click.option('--json', 'as_json', is_flag=True, help='Imprimir el certificado en JSON')
@click.option('--dot-dir', type=click.Path(file_okay=False), help='Directorio para los grafos DOT')
@click.option('--no-classify', is_flag=True, help='Omitir la clasificación de ι en el último piso')
def cubulate(path, tol, budget, dim_cap, as_json, dot_dir, no_classify):
    """
    Construir la cubulación y certificar la especialidad del último piso
    """
    settings = _settings(tol=tol, budget=budget, dim_cap=dim_cap)
    analyzer = MultitwistAnalyzer(settings)
    reporter = ReportGenerator()
    try:
        if not as_json:
            click.echo("🔄 Construyendo la cubulación...")
        result = analyzer.cubulate(path, classify=not no_classify, progress=not as_json)
        paths = reporter.write_cubulation(
            result, settings.ensure_workdir(), Path(dot_dir) if dot_dir else None
        )
    except MultitwistError as e:
        _fail(e, as_json)
        return

    if as_json:
        click.echo(result.model_dump_json(indent=2))
        return
    click.echo(reporter.census_table(result.census))
    if result.notice:
        click.echo(f"⚠️  {result.notice}")
    if result.pathologies is not None:
        p = result.pathologies
        click.echo(
            f"🔎 Patologías de X: {len(p.cut_self_osculations)} autoosculaciones de corte, "
            f"{len(p.bind_self_osculations)} de enlace, {len(p.cut_bind_inter_osculations)} interosculaciones"
        )
    if result.certificate is not None:
        click.echo(reporter.certificate_table(result.certificate))
        click.echo(f"✅ {result.certificate.verdict}")
    for written in paths:
        click.echo(f"💾 {written}")


@cli.command()
@click.argument('what', type=click.Choice(sorted(ARTIFACTS)))
@click.option('--output', '-o', type=click.Path(dir_okay=False), help='Archivo de destino')
def export(what, output):
    """Exportar un artefacto de una ejecución previa"""
    settings = _settings()
    try:
        path = ReportGenerator().export(settings.workdir, what, Path(output) if output else None)
    except MultitwistError as e:
        _fail(e, False)
        return
    click.echo(f"💾 {path}")


@cli.command()
@click.option('--max-vertices', default=3, type=click.IntRange(2, 4), help='Vértices máximos')
@click.option('--max-edges', default=5, type=click.IntRange(1, 6), help='Aristas máximas')
@click.option('--csv', 'csv_path', type=click.Path(dir_okay=False), help='Exportar la tabla a CSV')
def sweep(max_vertices, max_edges, csv_path):
    """
    Barrido exhaustivo: corriente contra supervivencia homológica
    """
    analyzer = MultitwistAnalyzer(_settings())
    reporter = ReportGenerator()
    frame = analyzer.sweep(max_vertices=max_vertices, max_edges=max_edges)
    click.echo(reporter.sweep_summary(frame))
    if csv_path:
        click.echo(f"💾 {reporter.sweep_csv(frame, Path(csv_path))}")
    if not frame.empty and not frame["agree"].all():
        click.echo("❌ Hay desacuerdos entre corriente y supervivencia")
        sys.exit(EXIT_FAILURE)


def main():
    cli()


if __name__ == '__main__':
    main()
