"""
Sistema de corte y enlace subordinado a (F, σ): pantalones, clase ξ̄, patrones
de arcos de enlace y complejo cuadrado dual de F.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
from networkx.utils import UnionFind
from sympy import Matrix

from .cube_kernel import CubeComplex
from .linalg import dot, gcd_all, generic_combination, lcm_all, primitive
from .models import (
    ArcPattern, BadTriple, ConfigGraph, CurveKind, CutBindSystem, CutCurve, IndexOutOfRange,
    LoopRecord, NoNondegenerateXi, Pants, PantsDecomposition, ShiftSearchFailed, Slot,
    SurfaceModel, SurvivalPreconditionFailed, TemplateSearchExhausted, XiData, end_label
)
from .surface_model import boundary_class, fiber_values, invariant_functionals, survives


logger = logging.getLogger(__name__)

_KIND_RANK = {CurveKind.CHAIN: 0, CurveKind.EDGE: 1, CurveKind.HANDLE: 2}


def _combine(x: Sequence[int], y: Sequence[int], sign: int = 1) -> List[int]:
    return [a + sign * b for a, b in zip(x, y)]


def _sign(value: int) -> int:
    return 1 if value > 0 else -1


def _handle_templates(m: SurfaceModel, v: str, i: int,
                      boundary: List[List[int]]) -> List[Tuple[List[int], List[int]]]:
    """(clase de la curva de asa, clase dual con intersección 1)"""
    a_index, b_index = m.handles[v][i]
    a = m.unit(m.labels[a_index])
    b = m.unit(m.labels[b_index])
    templates = [(a, b), (b, [-x for x in a]), (_combine(a, b), b)]
    templates += [(_combine(a, cls), b) for cls in boundary]
    return templates


def decompose_vertex(
    m: SurfaceModel, g: ConfigGraph, v: str, classes: Dict[str, List[int]]
) -> Tuple[List[CutCurve], List[Pants]]:
    """
    Descompone F_v en pantalones: primero una curva por asa, luego sumas
    encadenadas de dos bordes cuya clase sobreviva.

    Args:
        classes: clases ya conocidas por id de curva; se amplía con las nuevas

    Raises:
        TemplateSearchExhausted si ninguna plantilla sobrevive
    """
    boundary: List[Tuple[str, int]] = [(end[0], m.eps[end_label(end)]) for end in g.ends_at(v)]
    edge_boundary = [boundary_class(m, end) for end in g.ends_at(v)]
    curves: List[CutCurve] = []

    for i in range(g.genus(v)):
        choice = next(
            ((cls, dual) for cls, dual in _handle_templates(m, v, i, edge_boundary) if survives(m, g, cls)),
            None,
        )
        if choice is None:
            raise TemplateSearchExhausted(f"Ninguna curva de asa sobrevive en el asa {i + 1} de {v}")
        hid = f"h{i + 1}[{v}]"
        curves.append(CutCurve(id=hid, cls=choice[0], kind=CurveKind.HANDLE, vertex=v, dual=choice[1]))
        classes[hid] = choice[0]
        boundary += [(hid, 1), (hid, -1)]

    pants: List[Pants] = []
    while len(boundary) > 3:
        merged = None
        for i in range(len(boundary)):
            for j in range(i + 1, len(boundary)):
                (ci, si), (cj, sj) = boundary[i], boundary[j]
                total = _combine([si * x for x in classes[ci]], [sj * x for x in classes[cj]])
                if any(total) and survives(m, g, total):
                    merged = (i, j, total)
                    break
            if merged:
                break
        if merged is None:
            raise TemplateSearchExhausted(f"Ninguna suma de dos bordes sobrevive en {v}: {boundary}")

        i, j, total = merged
        yid = f"y{len(pants) + 1}[{v}]"
        curves.append(CutCurve(id=yid, cls=total, kind=CurveKind.CHAIN, vertex=v))
        classes[yid] = total
        pants.append(Pants(id=f"P{len(pants) + 1}[{v}]", vertex=v,
                           boundaries=[boundary[i], boundary[j], (yid, -1)]))
        boundary = [item for k, item in enumerate(boundary) if k not in (i, j)] + [(yid, 1)]
        logger.debug(f"Curva de cadena {yid} en {v}")

    pants.append(Pants(id=f"P{len(pants) + 1}[{v}]", vertex=v, boundaries=boundary))
    return curves, pants


def pants_subordinate(m: SurfaceModel, g: ConfigGraph) -> PantsDecomposition:
    """
    Descomposición en pantalones con todas las curvas supervivientes

    Raises:
        SurvivalPreconditionFailed si algún z_e muere
        TemplateSearchExhausted si la búsqueda de plantillas se agota
    """
    dead = [eid for eid in g.edge_ids if not survives(m, g, m.curve_classes[eid])]
    if dead:
        raise SurvivalPreconditionFailed(f"Curvas que no sobreviven: {dead}")

    classes: Dict[str, List[int]] = {}
    curves: List[CutCurve] = []
    for eid in g.edge_ids:
        side = 0 if m.eps[end_label((eid, 0))] == 1 else 1
        curves.append(CutCurve(
            id=eid, cls=m.curve_classes[eid], kind=CurveKind.EDGE, vertex=g.v((eid, side)), edge=eid,
        ))
        classes[eid] = m.curve_classes[eid]

    pants: List[Pants] = []
    for v in g.vertex_ids:
        added, local = decompose_vertex(m, g, v, classes)
        curves += added
        pants += local

    decomposition = PantsDecomposition(curves=curves, pants=pants)
    for p in pants:
        for slot, (cid, sign) in enumerate(p.boundaries):
            curve = decomposition.curve(cid)
            if sign > 0:
                curve.plus = (p.id, slot)
            else:
                curve.minus = (p.id, slot)
    logger.info(f"Descomposición: {len(pants)} pantalones, {len(curves)} curvas de corte")
    return decomposition


def xi_select(m: SurfaceModel, g: ConfigGraph, decomposition: PantsDecomposition) -> XiData:
    """
    Clase invariante ξ̄ no nula sobre todas las curvas de corte y clases ξ^j

    Raises:
        NoNondegenerateXi si algún funcional se anula en todo el espacio invariante
    """
    basis = invariant_functionals(m, g)
    functionals = [curve.cls for curve in decomposition.curves]
    point, witness = generic_combination(basis, functionals)
    if witness is not None:
        raise NoNondegenerateXi(f"ξ̄ se anula sobre {decomposition.curves[witness].id}")

    xi = primitive(point)
    if dot(xi, boundary_class(m, (g.edge_ids[0], 0))) < 0:
        xi = [-x for x in xi]

    fiber = fiber_values(m, g, xi)
    values: List[int] = []
    for v in g.vertex_ids:
        if fiber[v] not in values:
            values.append(fiber[v])
    index = {v: values.index(fiber[v]) + 1 for v in g.vertex_ids}
    data = XiData(
        xi=xi,
        fiber=fiber,
        values=values,
        offsets=[-value for value in values],
        index=index,
        n=len(values) - 2,
        curve_values={curve.id: dot(xi, curve.cls) for curve in decomposition.curves},
    )
    logger.info(f"ξ̄ = {xi}; valores de fibra {fiber}; n = {data.n}")
    return data


def canonical_order(values: Sequence[int]) -> List[int]:
    """Posiciones con el borde de signo único primero"""
    positive = [k for k, x in enumerate(values) if x > 0]
    negative = [k for k, x in enumerate(values) if x < 0]
    lone, pair = (positive, negative) if len(positive) == 1 else (negative, positive)
    if len(lone) != 1 or len(pair) != 2:
        raise BadTriple(f"Triple sin un signo aislado: {tuple(values)}")
    return lone + pair


def pants_arc_pattern(triple: Sequence[int]) -> ArcPattern:
    """
    Patrón de arcos: |m'| arcos paralelos de z a z' y |m''| de z a z''

    Acepta el triple en cualquier orden y lo reordena canónicamente.

    Raises:
        BadTriple si la suma no es 0 o algún valor es 0
    """
    if len(triple) != 3 or sum(triple) != 0 or 0 in triple:
        raise BadTriple(f"Triple inválido: {tuple(triple)}")
    m, m1, m2 = (triple[k] for k in canonical_order(triple))
    p, q = abs(m1), abs(m2)

    def u(t: int) -> str:
        return "O" if t in (0, p) else f"U{t}"

    def w(t: int) -> str:
        return "O" if t in (0, q) else f"V{t}"

    arcs = {f"A'{t}": (u(t - 1), u(t)) for t in range(1, p + 1)}
    arcs.update({f"A''{t}": (w(t - 1), w(t)) for t in range(1, q + 1)})
    regions = ["O"] + [f"U{t}" for t in range(1, p)] + [f"V{t}" for t in range(1, q)]

    outer = [f"A'{t}" for t in range(1, p + 1)] + [f"A''{t}" for t in range(1, q + 1)]
    first = [f"A'{t}" for t in range(p, 0, -1)]
    second = [f"A''{t}" for t in range(q, 0, -1)]
    return ArcPattern(
        triple=(m, m1, m2),
        regions=regions,
        arcs=arcs,
        points=[outer, first, second],
        seg_regions=[
            [arcs[name][0] for name in outer],
            [arcs[name][1] for name in first],
            [arcs[name][1] for name in second],
        ],
    )


def region_potentials(pattern: ArcPattern) -> Dict[str, int]:
    """Conteo de W a lo largo del árbol BFS de regiones desde el octógono"""
    adjacency = nx.Graph()
    adjacency.add_node("O")
    for name in sorted(pattern.arcs):
        tail, head = pattern.arcs[name]
        if not adjacency.has_edge(tail, head):
            adjacency.add_edge(tail, head, arc=name)

    potential = {"O": 0}
    for region, other in nx.bfs_edges(adjacency, "O"):
        tail, _ = pattern.arcs[adjacency.edges[region, other]["arc"]]
        potential[other] = potential[region] + (pattern.sign if tail == region else -pattern.sign)
    return potential


def _upsilon_tree(decomposition: PantsDecomposition) -> Tuple[List[str], nx.Graph]:
    """Árbol de Kruskal de Υ: cadenas, luego aristas, luego asas"""
    forest = UnionFind([p.id for p in decomposition.pants])
    tree_graph = nx.Graph()
    tree_graph.add_nodes_from(p.id for p in decomposition.pants)
    tree = []
    for curve in sorted(decomposition.curves, key=lambda c: (_KIND_RANK[c.kind], c.id)):
        a, b = curve.plus[0], curve.minus[0]
        if forest[a] != forest[b]:
            forest.union(a, b)
            tree.append(curve.id)
            tree_graph.add_edge(a, b, curve=curve.id)
    return tree, tree_graph


def _loop_counts(system: CutBindSystem, tree_graph: nx.Graph, curve: CutCurve,
                 potentials: Dict[str, Dict[str, int]]) -> Tuple[int, Dict[str, int]]:
    """
    Lazo dual a una curva fuera del árbol con desplazamiento 0: cruza la
    curva en el segmento 0 y vuelve por el árbol. Devuelve el conteo de W y
    los cruces algebraicos con cada curva.
    """
    decomposition = system.decomposition
    crossings = {curve.id: 1}
    pants_id, region = curve.minus[0], system.seg_region(curve.minus, 1)
    w0 = 0
    path = nx.shortest_path(tree_graph, curve.minus[0], curve.plus[0])
    for a, b in zip(path, path[1:]):
        tree_curve = decomposition.curve(tree_graph.edges[a, b]["curve"])
        if tree_curve.plus[0] == a:
            leave, enter, sign = system.seg_region(tree_curve.plus, 0), system.seg_region(tree_curve.minus, 1), 1
        else:
            leave, enter, sign = system.seg_region(tree_curve.minus, 1), system.seg_region(tree_curve.plus, 0), -1
        w0 += potentials[a][leave] - potentials[a][region]
        crossings[tree_curve.id] = crossings.get(tree_curve.id, 0) + sign
        pants_id, region = b, enter
    w0 += potentials[pants_id][system.seg_region(curve.plus, 0)] - potentials[pants_id][region]
    return w0, crossings


def _natural_dual(m: SurfaceModel, curve: CutCurve) -> List[int]:
    if curve.kind == CurveKind.EDGE:
        return m.unit(f"c[{curve.edge}]")
    if curve.dual is not None:
        return list(curve.dual)
    return [0] * m.dim


def _solve_dual(m: SurfaceModel, decomposition: PantsDecomposition,
                crossings: Dict[str, int]) -> Optional[List[int]]:
    """Clase entera q con I([c], q) = cruces del lazo para toda curva c"""
    rows = [
        [sum(c.cls[a] * m.intersection[a][i] for a in range(m.dim)) for i in range(m.dim)]
        for c in decomposition.curves
    ]
    target = Matrix([crossings.get(c.id, 0) for c in decomposition.curves])
    try:
        solution, params = Matrix(rows).gauss_jordan_solve(target)
    except ValueError:
        return None
    solution = solution.subs({p: 0 for p in params})
    if any(not x.is_integer for x in solution):
        return None
    return [int(x) for x in solution]


def assemble_cut_bind(
    m: SurfaceModel, g: ConfigGraph, decomposition: PantsDecomposition, xi: XiData
) -> CutBindSystem:
    """
    Pega los patrones de arcos con desplazamientos por curva de corte

    Las curvas del árbol de Υ llevan desplazamiento 0. Para cada curva k
    fuera del árbol, con lazo dual ℓ_k de clase q_k, el desplazamiento s es
    el menor no negativo con W(s) ≡ ξ̄(q_k) (mod |m_k|); entonces
    ξ_W(ℓ_k) = ξ̄(q_k + t_k [z_k]) con t_k entero.

    Raises:
        ShiftSearchFailed si un lazo no tiene clase dual coherente
    """
    patterns, order = {}, {}
    for p in decomposition.pants:
        values = [xi.curve_values[cid] * sign for cid, sign in p.boundaries]
        order[p.id] = canonical_order(values)
        patterns[p.id] = pants_arc_pattern([values[k] for k in order[p.id]])

    tree, tree_graph = _upsilon_tree(decomposition)
    system = CutBindSystem(
        decomposition=decomposition,
        patterns=patterns,
        order=order,
        shifts={cid: 0 for cid in decomposition.curve_ids},
        tree_curves=tree,
        loops=[],
        xi=xi,
    )
    potentials = {pid: region_potentials(pattern) for pid, pattern in patterns.items()}

    for curve in decomposition.curves:
        if curve.id in tree:
            continue
        w0, crossings = _loop_counts(system, tree_graph, curve, potentials)
        dual = _natural_dual(m, curve)
        expected = {c.id: m.form(c.cls, dual) for c in decomposition.curves}
        if any(expected[cid] != crossings.get(cid, 0) for cid in expected):
            dual = _solve_dual(m, decomposition, crossings)
            if dual is None:
                raise ShiftSearchFailed(f"Sin clase dual entera para el lazo de {curve.id}: {crossings}")

        value = xi.curve_values[curve.id]
        size, sign = abs(value), _sign(value)
        target = dot(xi.xi, dual)
        shift = ((target - w0) * sign) % size
        realized = w0 + shift * sign
        if (realized - target) % value:
            raise ShiftSearchFailed(f"Desplazamiento sin solución en {curve.id}")
        system.shifts[curve.id] = shift
        system.loops.append(LoopRecord(
            curve=curve.id, shift=shift, w0=w0, realized=realized, dual=dual,
            twist=(realized - target) // value, crossings=crossings,
        ))
        logger.debug(f"Desplazamiento de {curve.id}: s = {shift}, W = {realized}")

    if not dual_check(system):
        raise ShiftSearchFailed("El sistema de enlace no es dual a ξ̄")
    logger.info(f"Sistema de corte y enlace: {intersection_count(system)} puntos de cruce")
    return system


def dual_check(system: CutBindSystem) -> bool:
    """
    ξ_W = ξ̄: en cada borde el conteo de puntos con signo es el valor de ξ̄,
    y en cada lazo dual ξ_W(ℓ_k) = ξ̄(q_k + t_k [z_k]).
    """
    xi = system.xi
    for p in system.decomposition.pants:
        pattern = system.patterns[p.id]
        for slot, (cid, sign) in enumerate(p.boundaries):
            canonical = system.pattern_slot(p.id, slot)
            per_point = pattern.sign if canonical == 0 else -pattern.sign
            if per_point * len(pattern.points[canonical]) != sign * xi.curve_values[cid]:
                return False
    for loop in system.loops:
        curve = system.decomposition.curve(loop.curve)
        realized_class = _combine(loop.dual, [loop.twist * x for x in curve.cls])
        if dot(xi.xi, realized_class) != loop.realized:
            return False
    return True


def intersection_count(system: CutBindSystem) -> int:
    return sum(abs(value) for value in system.xi.curve_values.values())


def surface_square_complex(system: CutBindSystem) -> CubeComplex:
    """
    Complejo cuadrado dual a Z ∪ W

    Vértices (pantalón, región); aristas de enlace ("bind", pantalón, arco)
    de cola a cabeza; aristas de corte ("cut", curva, k) del segmento A_k del
    lado plus al segmento B_{s−k+1} del lado minus; un cuadrado por punto de
    Z ∩ W.
    """
    complex_ = CubeComplex(name="F")
    for pid, pattern in system.patterns.items():
        for region in pattern.regions:
            complex_.add_vertex((pid, region))
        for name, (tail, head) in sorted(pattern.arcs.items()):
            complex_.add_edge(("bind", pid, name), (pid, tail), (pid, head))

    for curve in system.decomposition.curves:
        size = abs(system.xi.curve_values[curve.id])
        shift = system.shifts[curve.id]
        plus, minus = curve.plus, curve.minus
        for k in range(size):
            complex_.add_edge(
                ("cut", curve.id, k),
                (plus[0], system.seg_region(plus, k)),
                (minus[0], system.seg_region(minus, shift - k + 1)),
            )
        plus_outer = system.pattern_slot(*plus) == 0
        minus_outer = system.pattern_slot(*minus) == 0
        for k in range(size):
            complex_.add_cube({
                (0, 0): (("bind", plus[0], system.point_arc(plus, k)), 1 if plus_outer else -1),
                (2, 0): (("bind", minus[0], system.point_arc(minus, shift - k)), -1 if minus_outer else 1),
                (0, 1): (("cut", curve.id, k), 1),
                (1, 1): (("cut", curve.id, (k + 1) % size), 1),
            })
    return complex_


def divisibilities(xi: XiData, system: CutBindSystem, j: int, target: str, name: Optional[str] = None) -> int:
    """
    Divisibilidades de ξ^j

    Args:
        target: "curve" (name = id de curva), "pants" (name = id de
            pantalón), "global" o "l" (mcm sobre las curvas)

    Raises:
        IndexOutOfRange si j no está en 1..n+2
    """
    if not 1 <= j <= xi.n + 2:
        raise IndexOutOfRange(f"j = {j} fuera de 1..{xi.n + 2}")
    decomposition = system.decomposition

    def curve_div(cid: str) -> int:
        curve = decomposition.curve(cid)
        return gcd_all([xi.curve_values[cid], xi.xi_fiber(j, curve.vertex)])

    if target == "curve":
        return curve_div(name)
    if target == "pants":
        p = decomposition.pants_by_id(name)
        return gcd_all([xi.curve_values[cid] for cid, _ in p.boundaries] + [xi.xi_fiber(j, p.vertex)])
    if target == "global":
        return gcd_all(list(xi.xi) + [xi.xi_fiber(j, v) for v in xi.fiber])
    if target == "l":
        return lcm_all([curve_div(cid) for cid in decomposition.curve_ids])
    raise ValueError(f"Objetivo desconocido: {target}")
