import json
import logging
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import networkx as nx
from networkx.utils import UnionFind
from pydantic import ValidationError as PydanticValidationError

from .models import (
    AnosovVerdict, ConfigGraph, ConfigValidationError, CoveringMap, CycleBasis,
    Edge, End, NotUnimodular, ValidationIssue, Vertex
)


logger = logging.getLogger(__name__)


def validate_graph(g: ConfigGraph) -> List[ValidationIssue]:
    """
    Revisa todos los invariantes del grafo de configuración

    Returns:
        Lista (posiblemente vacía) de problemas encontrados
    """
    issues: List[ValidationIssue] = []
    vertex_ids = [v.id for v in g.vertices]
    edge_ids = [e.id for e in g.edges]

    for label, ids in (("vértice", vertex_ids), ("arista", edge_ids)):
        duplicated = sorted({i for i in ids if ids.count(i) > 1})
        for item in duplicated:
            issues.append(ValidationIssue(code="MalformedInput", message=f"{label} repetido", subject=item))

    if not g.edges:
        issues.append(ValidationIssue(
            code="EmptyCurveSystem", message="el multitwist necesita al menos una curva"
        ))

    known = set(vertex_ids)
    for edge in g.edges:
        if edge.b == 0:
            issues.append(ValidationIssue(code="ZeroMultiplicity", message="b_e = 0", subject=edge.id))
        missing = [x for x in edge.ends if x not in known]
        if missing:
            issues.append(ValidationIssue(
                code="MalformedInput", message=f"extremos desconocidos {missing}", subject=edge.id
            ))
        elif edge.ends[0] == edge.ends[1]:
            issues.append(ValidationIssue(code="SelfLoop", message="lazo en un vértice", subject=edge.id))

    if any(issue.code == "MalformedInput" for issue in issues):
        return issues

    for vertex in g.vertices:
        if vertex.chi >= 0:
            issues.append(ValidationIssue(
                code="NonNegativeChi", message=f"χ = {vertex.chi} ≥ 0", subject=vertex.id
            ))
        twice_genus = 2 - vertex.chi - g.valence(vertex.id)
        if twice_genus < 0 or twice_genus % 2:
            issues.append(ValidationIssue(
                code="GenusParity",
                message=f"g_v = {twice_genus}/2 no es un entero no negativo",
                subject=vertex.id,
            ))

    if g.vertices and not nx.is_connected(to_networkx(g)):
        issues.append(ValidationIssue(code="Disconnected", message="el grafo no es conexo"))
    return issues


def parse_validate(text: str) -> ConfigGraph:
    """
    Lee un grafo de configuración en JSON y lo valida

    Args:
        text: contenido JSON {"vertices": [...], "edges": [...]}

    Returns:
        ConfigGraph validado

    Raises:
        ConfigValidationError con todos los problemas encontrados
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigValidationError([ValidationIssue(code="MalformedInput", message=f"JSON inválido: {e}")])

    try:
        g = ConfigGraph(
            vertices=[Vertex(**v) for v in data.get("vertices", [])],
            edges=[Edge(id=e["id"], ends=tuple(e["ends"]), b=e["b"]) for e in data.get("edges", [])],
        )
    except (PydanticValidationError, KeyError, TypeError, AttributeError) as e:
        raise ConfigValidationError([ValidationIssue(code="MalformedInput", message=str(e))])

    issues = validate_graph(g)
    if issues:
        logger.error(f"Grafo inválido: {len(issues)} problemas")
        raise ConfigValidationError(issues)
    logger.info(f"Grafo válido: {len(g.vertices)} vértices, {len(g.edges)} aristas")
    return g


def parse_matrix(text: str) -> Optional[List[List[int]]]:
    """Devuelve la matriz si el JSON es una entrada Anosov, None en otro caso"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        return None
    if not isinstance(data, dict) or "matrix" not in data:
        return None
    matrix = data["matrix"]
    if len(matrix) != 2 or any(len(row) != 2 for row in matrix):
        raise ConfigValidationError([ValidationIssue(code="MalformedInput", message="la matriz debe ser 2×2")])
    return [[int(x) for x in row] for row in matrix]


def charges(g: ConfigGraph) -> Dict[str, Fraction]:
    """Carga k_v = Σ 1/b_δ sobre los extremos en v"""
    return {v: sum((Fraction(1, g.b(end)) for end in g.ends_at(v)), Fraction(0)) for v in g.vertex_ids}


def to_networkx(g: ConfigGraph) -> nx.MultiGraph:
    graph = nx.MultiGraph()
    for vertex in g.vertices:
        graph.add_node(vertex.id, chi=vertex.chi)
    for edge in g.edges:
        graph.add_edge(edge.ends[0], edge.ends[1], key=edge.id, b=edge.b)
    return graph


def bicoloring(g: ConfigGraph) -> Optional[Dict[str, int]]:
    """
    2-coloración ±1 con el primer vértice de cada componente en +1, o None
    si hay un ciclo impar
    """
    graph = to_networkx(g)
    if not nx.is_bipartite(graph):
        return None
    order = {v: i for i, v in enumerate(g.vertex_ids)}
    colors: Dict[str, int] = {}
    for component in nx.connected_components(graph):
        root = min(component, key=order.__getitem__)
        sides = nx.bipartite.color(graph.subgraph(component))
        colors.update({v: 1 if sides[v] == sides[root] else -1 for v in component})
    return {v: colors[v] for v in g.vertex_ids}


def bipartite_double_cover(g: ConfigGraph) -> Tuple[ConfigGraph, CoveringMap]:
    """
    Recubrimiento doble dual al homomorfismo "número de aristas mod 2"

    Cada vértice v se levanta a v~0 y v~1 con el mismo χ; cada arista
    e = (x, y) se levanta a e~0 = (x~0, y~1) y e~1 = (x~1, y~0) con
    multiplicidad 2·b_e. Si la entrada ya es bipartita el recubrimiento es
    trivial y se devuelve la componente de min~0.
    """
    input_bipartite = bicoloring(g) is not None
    vertices = [Vertex(id=f"{v.id}~{k}", chi=v.chi) for v in g.vertices for k in (0, 1)]
    edges = []
    for edge in g.edges:
        x, y = edge.ends
        edges.append(Edge(id=f"{edge.id}~0", ends=(f"{x}~0", f"{y}~1"), b=2 * edge.b))
        edges.append(Edge(id=f"{edge.id}~1", ends=(f"{x}~1", f"{y}~0"), b=2 * edge.b))
    cover = ConfigGraph(vertices=vertices, edges=edges)

    if input_bipartite:
        root = f"{g.vertex_ids[0]}~0"
        keep = nx.node_connected_component(to_networkx(cover), root)
        cover = ConfigGraph(
            vertices=[v for v in vertices if v.id in keep],
            edges=[e for e in edges if e.ends[0] in keep],
        )
        logger.info("La entrada ya era bipartita: se devuelve una componente del recubrimiento trivial")

    covering = CoveringMap(
        vertex_map={v.id: v.id.rsplit("~", 1)[0] for v in cover.vertices},
        edge_map={e.id: e.id.rsplit("~", 1)[0] for e in cover.edges},
        input_bipartite=input_bipartite,
    )
    return cover, covering


def spanning_tree(g: ConfigGraph) -> List[str]:
    """Árbol generador de Kruskal en orden lexicográfico de aristas"""
    forest = UnionFind(g.vertex_ids)
    tree = []
    for eid in g.edge_ids:
        x, y = g.edge(eid).ends
        if forest[x] != forest[y]:
            forest.union(x, y)
            tree.append(eid)
    return tree


def tree_path(g: ConfigGraph, tree: List[str], source: str, target: str) -> List[End]:
    """Camino en el árbol de source a target como lista de extremos de salida"""
    graph = nx.Graph()
    graph.add_nodes_from(g.vertex_ids)
    for eid in tree:
        x, y = g.edge(eid).ends
        graph.add_edge(x, y, eid=eid)
    nodes = nx.shortest_path(graph, source, target)
    path = []
    for a, b in zip(nodes, nodes[1:]):
        eid = graph.edges[a, b]["eid"]
        path.append((eid, 0) if g.edge(eid).ends[0] == a else (eid, 1))
    return path


def cycle_basis(g: ConfigGraph) -> CycleBasis:
    """
    Ciclos fundamentales: para e = (x, y) fuera del árbol, [(e, 0)] seguido
    del camino del árbol de y a x. Un extremo δ recorre de v(δ) a v(δ̄).
    """
    tree = spanning_tree(g)
    in_tree = set(tree)
    cycles = {}
    for eid in g.edge_ids:
        if eid in in_tree:
            continue
        x, y = g.edge(eid).ends
        cycles[eid] = [(eid, 0)] + tree_path(g, tree, y, x)
    logger.debug(f"Base de ciclos: {len(cycles)} ciclos fundamentales")
    return CycleBasis(tree_edges=tree, cycles=cycles)


def anosov_classify(matrix: List[List[int]]) -> AnosovVerdict:
    """Anosov si det = 1 y |traza| > 2"""
    (a, b), (c, d) = matrix
    det = a * d - b * c
    if det not in (1, -1):
        raise NotUnimodular(f"det = {det}")
    if det == 1 and abs(a + d) > 2:
        return AnosovVerdict.ANOSOV
    return AnosovVerdict.NOT_ANOSOV


def euler_characteristic_of_fiber(g: ConfigGraph) -> int:
    """χ(F) = Σ χ_v (las curvas tienen χ = 0)"""
    return sum(g.chi(v) for v in g.vertex_ids)


def to_dot(g: ConfigGraph, name: str = "config") -> str:
    lines = [f"graph {name} {{"]
    for v in g.vertex_ids:
        lines.append(f'  "{v}" [label="{v}:{g.chi(v)}"];')
    for eid in g.edge_ids:
        x, y = g.edge(eid).ends
        lines.append(f'  "{x}" -- "{y}" [label="{eid}:{g.b(eid)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
