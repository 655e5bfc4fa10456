"""
Complejos cúbicos finitos: validación, links, hiperplanos, especialidad,
mapa característico a la RAAG y recubrimientos por permutaciones.

Un cubo de dimensión d se guarda como un mapa de aristas
{(esquina, eje): (arista, signo)}, con el bit `eje` de `esquina` a 0; el signo
es +1 si la arista va de `esquina` a `esquina | (1 << eje)`.
"""

import logging
from collections import defaultdict
from itertools import combinations
from typing import Any, Dict, FrozenSet, Hashable, Iterator, List, Optional, Sequence, Set, Tuple

import networkx as nx
from networkx.algorithms import isomorphism
from networkx.utils import UnionFind
from pydantic import BaseModel, ConfigDict, Field

from .models import BadAttachment, NonSimplicialLink, NotSpecial, RelatorViolation


EdgeMap = Dict[Tuple[int, int], Tuple[Hashable, int]]
EdgeEnd = Tuple[Hashable, int]

logger = logging.getLogger(__name__)


class ComplexReport(BaseModel):
    """Resultado de validate: conteos y condiciones sobre los links"""
    f_vector: List[int]
    simple: bool
    flag: bool
    non_simplicial: List[str] = Field(default_factory=list)
    non_flag: List[str] = Field(default_factory=list)


class Link(BaseModel):
    """Link de un vértice: extremos de arista y un símplice por esquina de cubo"""
    vertices: List[Any]
    simplices: List[Tuple[Any, ...]]


class Hyperplane(BaseModel):
    id: int
    edges: List[Any]
    two_sided: bool
    kind: str = "untyped"


class SpecialnessReport(BaseModel):
    """
    Testigos por condición. Las autoosculaciones indirectas se listan
    aparte y no afectan al veredicto.
    """
    one_sided: List[str] = Field(default_factory=list)
    self_intersections: List[str] = Field(default_factory=list)
    direct_self_osculations: List[str] = Field(default_factory=list)
    indirect_self_osculations: List[str] = Field(default_factory=list)
    inter_osculations: List[str] = Field(default_factory=list)

    @property
    def witnesses(self) -> List[str]:
        return (self.one_sided + self.self_intersections
                + self.direct_self_osculations + self.inter_osculations)

    @property
    def special(self) -> bool:
        return not self.witnesses


class CharacteristicMap(BaseModel):
    """Grafo de cruces Γ, presentación de A(Γ) y mapa de aristas a generadores"""
    model_config = ConfigDict(arbitrary_types_allowed=True)
    graph: Any
    generators: List[int]
    relators: List[Tuple[int, int]]
    edge_images: Dict[Any, Tuple[int, int]]
    local_isometry: bool
    failures: List[str] = Field(default_factory=list)


class HyperplaneIndex:
    """Hiperplano y orientación transversal de cada arista"""

    def __init__(self, edge_h: Dict[Hashable, int], orientation: Dict[Hashable, int],
                 one_sided: Set[int], count: int):
        self.edge_h = edge_h
        self.orientation = orientation
        self.one_sided = one_sided
        self.count = count

    def members(self) -> Dict[int, List[Hashable]]:
        groups: Dict[int, List[Hashable]] = defaultdict(list)
        for eid, hid in self.edge_h.items():
            groups[hid].append(eid)
        return groups

    def direction(self, end: EdgeEnd) -> int:
        """+1 si el extremo sale hacia el lado positivo del hiperplano"""
        eid, side = end
        return self.orientation[eid] * (1 if side == 0 else -1)


def cube_dim(edge_map: EdgeMap) -> int:
    return max(axis for _, axis in edge_map) + 1


def corner_ends(edge_map: EdgeMap, corner: int, dim: int) -> Tuple[EdgeEnd, ...]:
    """Extremos de arista (arista, 0 cola / 1 cabeza) en una esquina del cubo"""
    ends = []
    for axis in range(dim):
        bit = 1 << axis
        if corner & bit:
            eid, sign = edge_map[(corner ^ bit, axis)]
            ends.append((eid, 1 if sign > 0 else 0))
        else:
            eid, sign = edge_map[(corner, axis)]
            ends.append((eid, 0 if sign > 0 else 1))
    return tuple(ends)


class CubeComplex:
    """Complejo cúbico finito con cubos dados por mapas de aristas"""

    def __init__(self, name: str = "X"):
        self.name = name
        self.logger = logging.getLogger(__name__)
        self.vertices: Dict[Hashable, None] = {}
        self.edges: Dict[Hashable, Tuple[Hashable, Hashable]] = {}
        self.cubes: List[EdgeMap] = []
        self._index: Optional[HyperplaneIndex] = None
        self._spans: Optional[Set[FrozenSet[EdgeEnd]]] = None

    def add_vertex(self, vertex: Hashable) -> None:
        self.vertices[vertex] = None

    def add_edge(self, eid: Hashable, tail: Hashable, head: Hashable) -> None:
        if eid in self.edges:
            raise BadAttachment(f"Arista repetida: {eid}")
        self.edges[eid] = (tail, head)
        self._index = None

    def add_cube(self, edge_map: EdgeMap) -> int:
        self.cubes.append(dict(edge_map))
        self._index = None
        self._spans = None
        return len(self.cubes) - 1

    def end_vertex(self, end: EdgeEnd) -> Hashable:
        tail, head = self.edges[end[0]]
        return tail if end[1] == 0 else head

    def corner_vertex(self, cube: EdgeMap, corner: int) -> Hashable:
        return self.end_vertex(corner_ends(cube, corner, cube_dim(cube))[0])

    def f_vector(self) -> List[int]:
        counts = [len(self.vertices), len(self.edges)]
        for cube in self.cubes:
            d = cube_dim(cube)
            while len(counts) <= d:
                counts.append(0)
            counts[d] += 1
        return counts

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * n for k, n in enumerate(self.f_vector()))

    def cell_count(self) -> int:
        return sum(self.f_vector())

    # validación y links

    def _check_cube(self, k: int, cube: EdgeMap, squares: Set[FrozenSet]) -> None:
        d = cube_dim(cube)
        expected = {(c, a) for c in range(1 << d) for a in range(d) if not c >> a & 1}
        if set(cube) != expected:
            raise BadAttachment(f"Cubo {k}: entradas {sorted(set(cube) ^ expected)} incorrectas")
        for eid, _ in cube.values():
            if eid not in self.edges:
                raise BadAttachment(f"Cubo {k}: arista inexistente {eid}")
        for c in range(1 << d):
            found = {self.end_vertex(end) for end in corner_ends(cube, c, d)}
            if len(found) != 1:
                raise BadAttachment(f"Cubo {k}: esquina {c} incoherente {found}")
        if d < 3:
            return
        for a, b in combinations(range(d), 2):
            for c in range(1 << d):
                if c >> a & 1 or c >> b & 1:
                    continue
                face = frozenset((
                    cube[(c, a)][0], cube[(c, b)][0],
                    cube[(c | 1 << b, a)][0], cube[(c | 1 << a, b)][0],
                ))
                if face not in squares:
                    raise BadAttachment(f"Cubo {k}: la cara ({a},{b}) en la esquina {c} no es un cuadrado")

    def corner_simplices(self) -> Iterator[Tuple[Hashable, Tuple[EdgeEnd, ...]]]:
        for cube in self.cubes:
            d = cube_dim(cube)
            for c in range(1 << d):
                ends = corner_ends(cube, c, d)
                yield self.end_vertex(ends[0]), ends

    def links(self, vertex: Hashable) -> Link:
        ends = [(eid, 0) for eid, (tail, _) in self.edges.items() if tail == vertex]
        ends += [(eid, 1) for eid, (_, head) in self.edges.items() if head == vertex]
        simplices = [s for v, s in self.corner_simplices() if v == vertex]
        return Link(vertices=ends, simplices=simplices)

    def flags(self) -> Dict[str, bool]:
        report = self._link_report()
        return {"simple": not report[0], "flag": not report[1]}

    def _link_report(self) -> Tuple[List[str], List[str]]:
        by_vertex: Dict[Hashable, List[Tuple[EdgeEnd, ...]]] = defaultdict(list)
        for vertex, simplex in self.corner_simplices():
            by_vertex[vertex].append(simplex)

        non_simplicial, non_flag = [], []
        for vertex, simplices in by_vertex.items():
            seen = set()
            simple = True
            for simplex in simplices:
                key = frozenset(simplex)
                if len(key) < len(simplex) or key in seen:
                    simple = False
                seen.add(key)
            if not simple:
                non_simplicial.append(str(vertex))
                continue
            graph = nx.Graph()
            graph.add_edges_from(s for s in seen if len(s) == 2)
            for clique in nx.enumerate_all_cliques(graph):
                if len(clique) >= 3 and frozenset(clique) not in seen:
                    non_flag.append(str(vertex))
                    break
        return non_simplicial, non_flag

    def validate(self, strict: bool = False) -> ComplexReport:
        """
        Comprueba las entradas de cada cubo, la coherencia de esquinas y que
        las caras de los cubos de dimensión ≥ 3 sean cuadrados del complejo.

        Raises:
            BadAttachment si la estructura es inválida
            NonSimplicialLink si strict y algún link no es simplicial
        """
        for eid, (tail, head) in self.edges.items():
            if tail not in self.vertices or head not in self.vertices:
                raise BadAttachment(f"Arista {eid} con extremo desconocido")
        squares = {frozenset(eid for eid, _ in cube.values()) for cube in self.cubes if cube_dim(cube) == 2}
        for k, cube in enumerate(self.cubes):
            self._check_cube(k, cube, squares)

        non_simplicial, non_flag = self._link_report()
        if strict and non_simplicial:
            raise NonSimplicialLink(f"Links no simpliciales en {non_simplicial[:5]}")
        self.logger.debug(f"Complejo {self.name} válido: f = {self.f_vector()}")
        return ComplexReport(
            f_vector=self.f_vector(),
            simple=not non_simplicial,
            flag=not non_simplicial and not non_flag,
            non_simplicial=non_simplicial,
            non_flag=non_flag,
        )

    # hiperplanos

    def hyperplane_index(self) -> HyperplaneIndex:
        """
        Clases de paralelismo de aristas con paridad: dos aristas paralelas
        en un cubo quedan unidas con la paridad del producto de sus signos.
        """
        if self._index is not None:
            return self._index
        classes = UnionFind()
        for cube in self.cubes:
            d = cube_dim(cube)
            if d < 2:
                continue
            for axis in range(d):
                parallel = [cube[(c, axis)] for c in range(1 << d) if not c >> axis & 1]
                first, first_sign = parallel[0]
                for eid, sign in parallel[1:]:
                    parity = sign * first_sign
                    classes.union((first, 1), (eid, parity))
                    classes.union((first, -1), (eid, -parity))

        edge_h: Dict[Hashable, int] = {}
        orientation: Dict[Hashable, int] = {}
        positive: Dict[FrozenSet, Tuple[int, Any]] = {}
        one_sided: Set[int] = set()
        for eid in self.edges:
            plus, minus = classes[(eid, 1)], classes[(eid, -1)]
            key = frozenset((plus, minus))
            if key not in positive:
                positive[key] = (len(positive), plus)
                if plus == minus:
                    one_sided.add(len(positive) - 1)
            hid, root = positive[key]
            edge_h[eid] = hid
            orientation[eid] = 1 if plus == root else -1
        self._index = HyperplaneIndex(edge_h, orientation, one_sided, len(positive))
        return self._index

    def hyperplanes(self) -> List[Hyperplane]:
        index = self.hyperplane_index()
        return [
            Hyperplane(id=hid, edges=edges, two_sided=hid not in index.one_sided)
            for hid, edges in sorted(index.members().items())
        ]

    def edge_ends_at(self) -> Dict[Hashable, List[EdgeEnd]]:
        ends: Dict[Hashable, List[EdgeEnd]] = defaultdict(list)
        for eid, (tail, head) in self.edges.items():
            ends[tail].append((eid, 0))
            ends[head].append((eid, 1))
        return ends

    def spanning_pairs(self) -> Set[FrozenSet[EdgeEnd]]:
        """Pares de extremos que abarcan un cuadrado en una esquina"""
        if self._spans is None:
            spans = set()
            for cube in self.cubes:
                d = cube_dim(cube)
                if d != 2:
                    continue
                for c in range(4):
                    spans.add(frozenset(corner_ends(cube, c, 2)))
            self._spans = spans
        return self._spans

    def crossing_pairs(self) -> Tuple[Set[Tuple[int, int]], List[str]]:
        """Pares de hiperplanos que se cruzan y testigos de autointersección"""
        index = self.hyperplane_index()
        crossing, selfint = set(), []
        for k, cube in enumerate(self.cubes):
            if cube_dim(cube) != 2:
                continue
            h0 = index.edge_h[cube[(0, 0)][0]]
            h1 = index.edge_h[cube[(0, 1)][0]]
            if h0 == h1:
                selfint.append(f"H{h0}@Q{k}")
            else:
                crossing.add((min(h0, h1), max(h0, h1)))
        return crossing, selfint

    def osculations(
        self,
        vertices: Optional[Sequence[Hashable]] = None,
        hyperplanes: Optional[Set[int]] = None,
    ) -> Tuple[List[Tuple[Hashable, int, bool]], Dict[Tuple[int, int], Hashable]]:
        """
        Autoosculaciones (vértice, hiperplano, directa) y pares de hiperplanos
        distintos que osculan, con un vértice testigo.
        """
        index = self.hyperplane_index()
        spans = self.spanning_pairs()
        ends_at = self.edge_ends_at()
        scope = ends_at.keys() if vertices is None else vertices

        selfosc: List[Tuple[Hashable, int, bool]] = []
        pairs: Dict[Tuple[int, int], Hashable] = {}
        for vertex in scope:
            for first, second in combinations(ends_at.get(vertex, []), 2):
                if first[0] == second[0]:
                    continue
                if frozenset((first, second)) in spans:
                    continue
                h1, h2 = index.edge_h[first[0]], index.edge_h[second[0]]
                if hyperplanes is not None and h1 not in hyperplanes and h2 not in hyperplanes:
                    continue
                if h1 == h2:
                    direct = index.direction(first) == index.direction(second)
                    selfosc.append((vertex, h1, direct))
                else:
                    pairs.setdefault((min(h1, h2), max(h1, h2)), vertex)
        return selfosc, pairs

    def specialness(self) -> SpecialnessReport:
        """Dos lados, sin autointersección, sin autoosculación directa ni interosculación"""
        index = self.hyperplane_index()
        crossing, selfint = self.crossing_pairs()
        selfosc, osculating = self.osculations()

        report = SpecialnessReport(
            one_sided=[f"H{h}" for h in sorted(index.one_sided)],
            self_intersections=selfint,
            direct_self_osculations=[f"H{h}@{v}" for v, h, direct in selfosc if direct],
            indirect_self_osculations=[f"H{h}@{v}" for v, h, direct in selfosc if not direct],
            inter_osculations=[
                f"H{a}/H{b}@{osculating[(a, b)]}" for a, b in sorted(osculating) if (a, b) in crossing
            ],
        )
        self.logger.info(
            f"Especialidad de {self.name}: {'SPECIAL' if report.special else 'NO'} "
            f"({len(report.witnesses)} testigos, {index.count} hiperplanos)"
        )
        return report

    def crossing_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.hyperplane_index().count))
        graph.add_edges_from(self.crossing_pairs()[0])
        return graph

    def raag_and_char_map(self) -> CharacteristicMap:
        """
        Mapa característico al complejo de Salvetti de A(Γ), comprobado link a
        link: inyectivo y con imagen llena.

        Raises:
            NotSpecial si el complejo no es especial
            RelatorViolation si un cuadrado no va a un conmutador de Γ
        """
        report = self.specialness()
        if not report.special:
            raise NotSpecial(f"{len(report.witnesses)} testigos: {report.witnesses[:5]}")
        index = self.hyperplane_index()
        graph = self.crossing_graph()
        images = {eid: (index.edge_h[eid], index.orientation[eid]) for eid in self.edges}

        for k, cube in enumerate(self.cubes):
            if cube_dim(cube) != 2:
                continue
            for axis in (0, 1):
                parallel = [cube[(c, axis)] for c in range(4) if not c >> axis & 1]
                letters = {(images[eid][0], images[eid][1] * sign) for eid, sign in parallel}
                if len(letters) != 1:
                    raise RelatorViolation(f"Cuadrado {k}: lados opuestos con letras {letters}")
            h0, h1 = index.edge_h[cube[(0, 0)][0]], index.edge_h[cube[(0, 1)][0]]
            if not graph.has_edge(h0, h1):
                raise RelatorViolation(f"Cuadrado {k}: [x{h0}, x{h1}] no es relator")

        failures = []
        spans = self.spanning_pairs()
        for vertex, ends in self.edge_ends_at().items():
            seen: Dict[Tuple[int, int], EdgeEnd] = {}
            for end in ends:
                letter = (index.edge_h[end[0]], index.direction(end))
                if letter in seen and seen[letter][0] != end[0]:
                    failures.append(f"no inyectivo en {vertex}: x{letter[0]}")
                seen.setdefault(letter, end)
            for first, second in combinations(ends, 2):
                h1, h2 = index.edge_h[first[0]], index.edge_h[second[0]]
                if h1 != h2 and graph.has_edge(h1, h2) and frozenset((first, second)) not in spans:
                    failures.append(f"imagen no llena en {vertex}: x{h1}, x{h2}")

        return CharacteristicMap(
            graph=graph,
            generators=sorted(graph.nodes),
            relators=sorted((min(a, b), max(a, b)) for a, b in graph.edges),
            edge_images=images,
            local_isometry=not failures,
            failures=failures,
        )

    # exportación

    def incidence_graph(self) -> nx.MultiGraph:
        graph = nx.MultiGraph()
        for vertex in self.vertices:
            graph.add_node(("v", vertex), kind="vertex")
        for eid, (tail, head) in self.edges.items():
            graph.add_node(("e", eid), kind="edge")
            graph.add_edge(("e", eid), ("v", tail), role="tail")
            graph.add_edge(("e", eid), ("v", head), role="head")
        for k, cube in enumerate(self.cubes):
            graph.add_node(("c", k), kind=f"cube{cube_dim(cube)}")
            for eid, _ in cube.values():
                graph.add_edge(("c", k), ("e", eid), role="face")
        return graph

    def to_json(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "f_vector": self.f_vector(),
            "vertices": [str(v) for v in self.vertices],
            "edges": [{"id": str(eid), "tail": str(t), "head": str(h)} for eid, (t, h) in self.edges.items()],
            "cubes": [
                {"dim": cube_dim(cube),
                 "edges": [[c, a, str(eid), sign] for (c, a), (eid, sign) in sorted(cube.items())]}
                for cube in self.cubes
            ],
        }


def salvetti_complex(graph: nx.Graph, dim_cap: int = 3) -> CubeComplex:
    """
    Complejo de Salvetti de A(Γ): un vértice, un lazo por generador y un
    k-cubo por k-clique, hasta dimensión dim_cap.
    """
    complex_ = CubeComplex(name="Salvetti")
    complex_.add_vertex("*")
    for node in sorted(graph.nodes, key=str):
        complex_.add_edge(node, "*", "*")
    for clique in nx.enumerate_all_cliques(graph):
        k = len(clique)
        if k < 2:
            continue
        if k > dim_cap:
            break
        clique = sorted(clique, key=str)
        complex_.add_cube({
            (c, a): (clique[a], 1) for c in range(1 << k) for a in range(k) if not c >> a & 1
        })
    return complex_


def is_isomorphic(first: CubeComplex, second: CubeComplex) -> bool:
    """Isomorfismo del grafo de incidencia etiquetado (vértices, aristas, cubos)"""
    if first.f_vector() != second.f_vector():
        return False
    return nx.is_isomorphic(
        first.incidence_graph(),
        second.incidence_graph(),
        node_match=isomorphism.categorical_node_match("kind", None),
        edge_match=isomorphism.categorical_multiedge_match("role", None),
    )


def crossing_graph_dot(graph: nx.Graph, name: str = "crossing") -> str:
    lines = [f"graph {name} {{"]
    for node in sorted(graph.nodes):
        lines.append(f'  "H{node}";')
    for a, b in sorted((min(a, b), max(a, b)) for a, b in graph.edges):
        lines.append(f'  "H{a}" -- "H{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


class CubeCovering:
    """Mapa de recubrimiento total → base por vértices, aristas y cubos"""

    def __init__(self, total: CubeComplex, base: CubeComplex,
                 vertex_proj: Dict[Hashable, Hashable], edge_proj: Dict[Hashable, Hashable],
                 cube_proj: List[int]):
        self.total = total
        self.base = base
        self.vertex_proj = vertex_proj
        self.edge_proj = edge_proj
        self.cube_proj = cube_proj
        self.logger = logging.getLogger(__name__)

    @property
    def degree(self) -> int:
        if not self.base.vertices:
            return 0
        root = next(iter(self.base.vertices))
        return sum(1 for v in self.total.vertices if self.vertex_proj[v] == root)

    def compose(self, lower: "CubeCovering") -> "CubeCovering":
        """self: Y → X̃ compuesto con lower: X̃ → X"""
        return CubeCovering(
            self.total,
            lower.base,
            {v: lower.vertex_proj[x] for v, x in self.vertex_proj.items()},
            {e: lower.edge_proj[x] for e, x in self.edge_proj.items()},
            [lower.cube_proj[k] for k in self.cube_proj],
        )

    def skeleton(self) -> nx.Graph:
        """1-esqueleto del espacio total"""
        graph = nx.Graph()
        graph.add_nodes_from(self.total.vertices)
        graph.add_edges_from(self.total.edges.values())
        return graph

    def components(self) -> List["CubeCovering"]:
        order = {v: i for i, v in enumerate(self.total.vertices)}
        parts = sorted(
            nx.connected_components(self.skeleton()), key=lambda part: min(order[v] for v in part)
        )
        label = {v: k for k, part in enumerate(parts) for v in part}
        return [self._restrict(label, k) for k in range(len(parts))]

    def component(self, root: Optional[Hashable] = None) -> "CubeCovering":
        """Componente que contiene a root (por defecto, el primer vértice)"""
        if root is None:
            root = next(iter(self.total.vertices))
        label = {v: 0 for v in nx.node_connected_component(self.skeleton(), root)}
        return self._restrict(label, 0)

    def _restrict(self, label: Dict[Hashable, int], k: int) -> "CubeCovering":
        total = CubeComplex(name=f"{self.total.name}[{k}]")
        vertex_proj, edge_proj, cube_proj = {}, {}, []
        for v in self.total.vertices:
            if label.get(v) == k:
                total.add_vertex(v)
                vertex_proj[v] = self.vertex_proj[v]
        for eid, (tail, head) in self.total.edges.items():
            if label.get(tail) == k:
                total.add_edge(eid, tail, head)
                edge_proj[eid] = self.edge_proj[eid]
        for cube, base_index in zip(self.total.cubes, self.cube_proj):
            if label.get(self.total.corner_vertex(cube, 0)) == k:
                total.add_cube(cube)
                cube_proj.append(base_index)
        return CubeCovering(total, self.base, vertex_proj, edge_proj, cube_proj)


class PermutationCover(BaseModel):
    """Fibra {0..d−1} y una permutación por arista (identidad si falta)"""
    model_config = ConfigDict(arbitrary_types_allowed=True)
    degree: int
    perms: Dict[Any, List[int]] = Field(default_factory=dict)

    def perm(self, eid: Hashable) -> List[int]:
        return self.perms.get(eid) or list(range(self.degree))


def _inverse(perm: Sequence[int]) -> List[int]:
    inverse = [0] * len(perm)
    for i, image in enumerate(perm):
        inverse[image] = i
    return inverse


def cover(base: CubeComplex, pc: PermutationCover) -> CubeCovering:
    """
    Complejo derivado de un recubrimiento por permutaciones

    Raises:
        RelatorViolation si alguna permutación no es biyectiva o si el
        producto alrededor de un cuadrado no es la identidad
    """
    d = pc.degree
    perms = {eid: pc.perm(eid) for eid in base.edges}
    for eid, perm in perms.items():
        if sorted(perm) != list(range(d)):
            raise RelatorViolation(f"La etiqueta de {eid} no es una permutación de {d} hojas")
    inverses = {eid: _inverse(perm) for eid, perm in perms.items()}

    total = CubeComplex(name=f"{base.name}~{d}")
    vertex_proj, edge_proj, cube_proj = {}, {}, []
    for vertex in base.vertices:
        for i in range(d):
            total.add_vertex((vertex, i))
            vertex_proj[(vertex, i)] = vertex
    for eid, (tail, head) in base.edges.items():
        for i in range(d):
            total.add_edge((eid, i), (tail, i), (head, perms[eid][i]))
            edge_proj[(eid, i)] = eid

    for k, cube in enumerate(base.cubes):
        dim = cube_dim(cube)
        for start in range(d):
            sheet = {0: start}
            lifted = {}
            for c in range(1 << dim):
                for axis in range(dim):
                    if c >> axis & 1:
                        continue
                    eid, sign = cube[(c, axis)]
                    target = c | 1 << axis
                    if sign > 0:
                        lift, other = (eid, sheet[c]), perms[eid][sheet[c]]
                    else:
                        other = inverses[eid][sheet[c]]
                        lift = (eid, other)
                    if sheet.setdefault(target, other) != other:
                        raise RelatorViolation(f"Cubo {k}: las permutaciones no conmutan en la hoja {start}")
                    lifted[(c, axis)] = (lift, sign)
            total.add_cube(lifted)
            cube_proj.append(k)

    logger.debug(f"Recubrimiento de grado {d}: f = {total.f_vector()}")
    return CubeCovering(total, base, vertex_proj, edge_proj, cube_proj)


def fiber_product(first: CubeCovering, second: CubeCovering) -> CubeCovering:
    """Producto fibrado sobre la base común; use components() para separarlo"""
    total = CubeComplex(name=f"{first.total.name}x{second.total.name}")
    vertex_proj, edge_proj, cube_proj = {}, {}, []

    fibers: Dict[Hashable, List[Hashable]] = defaultdict(list)
    for v, x in second.vertex_proj.items():
        fibers[x].append(v)
    for v, x in first.vertex_proj.items():
        for w in fibers[x]:
            total.add_vertex((v, w))
            vertex_proj[(v, w)] = x

    edge_fibers: Dict[Hashable, List[Hashable]] = defaultdict(list)
    for e, x in second.edge_proj.items():
        edge_fibers[x].append(e)
    for e, x in first.edge_proj.items():
        t1, h1 = first.total.edges[e]
        for f in edge_fibers[x]:
            t2, h2 = second.total.edges[f]
            total.add_edge((e, f), (t1, t2), (h1, h2))
            edge_proj[(e, f)] = x

    cube_fibers: Dict[int, List[EdgeMap]] = defaultdict(list)
    for cube, k in zip(second.total.cubes, second.cube_proj):
        cube_fibers[k].append(cube)
    for cube, k in zip(first.total.cubes, first.cube_proj):
        for other in cube_fibers[k]:
            total.add_cube({key: ((eid, other[key][0]), sign) for key, (eid, sign) in cube.items()})
            cube_proj.append(k)

    return CubeCovering(total, first.base, vertex_proj, edge_proj, cube_proj)
