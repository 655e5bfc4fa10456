"""
Ecuaciones de corriente: solución exacta sobre Q
"""

import itertools
import logging
from fractions import Fraction
from typing import Dict, Iterator, List, Sequence, Tuple, Union

import networkx as nx
import pandas as pd
from tqdm import tqdm

from .config_graph import bicoloring, cycle_basis
from .linalg import generic_combination, normalize_sign, nullspace_basis, primitive
from .models import (
    ConfigGraph, CurrentSolution, Edge, End, InfeasibilityWitness, NotBipartite,
    SurvivalCrosscheck, Vertex, end_label
)
from .surface_model import build_model, survives


logger = logging.getLogger(__name__)


def _orientation(g: ConfigGraph) -> Dict[str, int]:
    """+1 si v(δ) es positivo en la bicoloración, −1 si no"""
    colors = bicoloring(g)
    if colors is None:
        raise NotBipartite("El grafo tiene un ciclo impar; use el recubrimiento doble")
    return {end_label(end): colors[g.v(end)] for end in g.ends}


def _equation_rows(g: ConfigGraph) -> List[List[int]]:
    orientation = _orientation(g)
    edges = g.edge_ids
    position = {eid: k for k, eid in enumerate(edges)}

    rows = []
    for v in g.vertex_ids:
        row = [0] * len(edges)
        for end in g.ends_at(v):
            row[position[end[0]]] += orientation[end_label(end)]
        rows.append(row)
    for cycle in cycle_basis(g).cycles.values():
        row = [0] * len(edges)
        for end in cycle:
            row[position[end[0]]] += g.b(end) * orientation[end_label(end)]
        rows.append(row)
    return rows


def solution_space(g: ConfigGraph) -> List[List[int]]:
    """
    Base del espacio de soluciones simétricas

    Una variable y_e por arista con x_δ = ±y_e según el color de v(δ).

    Returns:
        Vectores enteros primitivos (coordenadas y_e en orden de aristas)
    """
    return nullspace_basis(_equation_rows(g), len(g.edges))


def expand(g: ConfigGraph, y: Sequence) -> CurrentSolution:
    """Pasa de variables por arista a x_δ por extremo"""
    orientation = _orientation(g)
    position = {eid: k for k, eid in enumerate(g.edge_ids)}
    return CurrentSolution(x={
        end_label(end): Fraction(orientation[end_label(end)]) * Fraction(y[position[end[0]]])
        for end in g.ends
    })


def nondegenerate_point(g: ConfigGraph) -> Union[CurrentSolution, InfeasibilityWitness]:
    """
    Punto simétrico con todas las coordenadas no nulas, o el extremo testigo

    Returns:
        CurrentSolution no degenerada o InfeasibilityWitness
    """
    basis = solution_space(g)
    units = [[1 if i == k else 0 for i in range(len(g.edges))] for k in range(len(g.edges))]
    point, witness = generic_combination(basis, units)
    if witness is not None:
        eid = g.edge_ids[witness]
        logger.info(f"Corriente no factible: la coordenada de {eid} se anula en todo el espacio")
        return InfeasibilityWitness(
            end=(eid, 0),
            basis=[[Fraction(x) for x in vec] for vec in basis],
        )
    y = normalize_sign(primitive(point))
    logger.info(f"Corriente no degenerada encontrada: {y}")
    return expand(g, y)


def crosscheck_survival(g: ConfigGraph) -> SurvivalCrosscheck:
    """Factibilidad de la corriente frente a la supervivencia de cada z_e"""
    feasible = isinstance(nondegenerate_point(g), CurrentSolution)
    model = build_model(g)
    survival = {eid: survives(model, g, model.curve_classes[eid]) for eid in g.edge_ids}
    agree = feasible == all(survival.values())
    if not agree:
        logger.error(f"Discrepancia corriente/supervivencia: {g.model_dump()}")
    return SurvivalCrosscheck(feasible=feasible, survival=survival, agree=agree)


def simple_cycles(g: ConfigGraph) -> List[List[End]]:
    """
    Todos los ciclos simples de Λ como sucesiones de extremos (incluye los
    2-ciclos de aristas paralelas). Enumeración por subconjuntos de aristas.
    """
    cycles = []
    edges = g.edge_ids
    for size in range(2, len(edges) + 1):
        for subset in itertools.combinations(edges, size):
            graph = nx.MultiGraph()
            for eid in subset:
                graph.add_edge(*g.edge(eid).ends, key=eid)
            if any(degree != 2 for _, degree in graph.degree()):
                continue
            if not nx.is_connected(graph):
                continue
            cycles.append(_walk(g, subset))
    return cycles


def _walk(g: ConfigGraph, subset: Tuple[str, ...]) -> List[End]:
    remaining = list(subset)
    first = remaining.pop(0)
    walk = [(first, 0)]
    current = g.edge(first).ends[1]
    while remaining:
        for eid in remaining:
            ends = g.edge(eid).ends
            if current in ends:
                side = 0 if ends[0] == current else 1
                walk.append((eid, side))
                current = ends[1 - side]
                remaining.remove(eid)
                break
    return walk


def check_all_cycles(g: ConfigGraph, solution: CurrentSolution) -> bool:
    """Σ b_δ x_δ = 0 sobre cada ciclo simple"""
    return all(
        sum(g.b(end) * solution.at(end) for end in cycle) == 0
        for cycle in simple_cycles(g)
    )


def check_solution(g: ConfigGraph, solution: CurrentSolution) -> bool:
    """Simetría, ecuaciones de vértice y de ciclos fundamentales"""
    symmetric = all(solution.at((eid, 0)) == -solution.at((eid, 1)) for eid in g.edge_ids)
    vertices = all(sum(solution.at(end) for end in g.ends_at(v)) == 0 for v in g.vertex_ids)
    fundamental = all(
        sum(g.b(end) * solution.at(end) for end in cycle) == 0
        for cycle in cycle_basis(g).cycles.values()
    )
    return symmetric and vertices and fundamental


def _minimal_chi(valence: int) -> int:
    genus = 0 if valence >= 3 else 1
    return 2 - valence - 2 * genus


def enumerate_configurations(
    max_vertices: int = 3,
    max_edges: int = 5,
    b_values: Sequence[int] = (-3, -2, -1, 1, 2, 3),
) -> Iterator[ConfigGraph]:
    """
    Configuraciones bipartitas conexas sin lazos, salvo isomorfismo del grafo
    simple subyacente (atlas de networkx). χ_v mínimo admisible por valencia.
    Las aristas paralelas reciben multiconjuntos de valores b.
    """
    for simple in nx.graph_atlas_g():
        n = simple.number_of_nodes()
        if n < 2 or n > max_vertices or simple.number_of_edges() > max_edges:
            continue
        if not nx.is_connected(simple) or not nx.is_bipartite(simple):
            continue
        pairs = sorted(simple.edges())
        for multiplicities in itertools.product(range(1, max_edges + 1), repeat=len(pairs)):
            if sum(multiplicities) > max_edges:
                continue
            choices = [
                list(itertools.combinations_with_replacement(b_values, k)) for k in multiplicities
            ]
            for assignment in itertools.product(*choices):
                yield _assemble(pairs, assignment)


def _assemble(pairs, assignment) -> ConfigGraph:
    edges = []
    valence: Dict[str, int] = {}
    for (x, y), values in zip(pairs, assignment):
        for b in values:
            eid = f"e{len(edges) + 1}"
            edges.append(Edge(id=eid, ends=(f"v{x}", f"v{y}"), b=b))
            valence[f"v{x}"] = valence.get(f"v{x}", 0) + 1
            valence[f"v{y}"] = valence.get(f"v{y}", 0) + 1
    vertices = [Vertex(id=v, chi=_minimal_chi(k)) for v, k in sorted(valence.items())]
    return ConfigGraph(vertices=vertices, edges=edges)


def equivalence_sweep(
    max_vertices: int = 3,
    max_edges: int = 5,
    b_values: Sequence[int] = (-3, -2, -1, 1, 2, 3),
    progress: bool = True,
) -> pd.DataFrame:
    """
    Barrido exhaustivo: factibilidad de la corriente contra supervivencia
    homológica, y suficiencia de los ciclos fundamentales.
    """
    graphs = list(enumerate_configurations(max_vertices, max_edges, b_values))
    rows = []
    for g in tqdm(graphs, desc="Barrido", unit="grafo", disable=not progress):
        point = nondegenerate_point(g)
        report = crosscheck_survival(g)
        cycles_ok = check_all_cycles(g, point) if isinstance(point, CurrentSolution) else True
        rows.append({
            "vertices": len(g.vertices),
            "edges": len(g.edges),
            "b": ",".join(str(g.b(eid)) for eid in g.edge_ids),
            "feasible": report.feasible,
            "all_survive": report.all_survive,
            "agree": report.agree,
            "cycle_sufficiency": cycles_ok,
        })
    logger.info(f"Barrido completado: {len(rows)} configuraciones")
    return pd.DataFrame(rows)
