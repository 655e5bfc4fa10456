"""
Cubulación de M_σ × Rⁿ

Piezas X_v como complejos de voltajes, pegado canónico a lo largo de los
toros de corte, censo de hiperplanos, grafos de descomposición y la torre
de recubrimientos que termina en un complejo especial.

Para n = 0 el complejo se materializa: vértices (pantalón, región, a) con
a ∈ Z/N_v, N_v = |ξ^j(f_v)| para el índice j ≠ i(v).
"""

import logging
from collections import defaultdict, deque
from typing import Any, Dict, FrozenSet, Hashable, Iterable, List, Optional, Set, Tuple

import networkx as nx
from networkx.utils import UnionFind
from pydantic import BaseModel, ConfigDict, Field
from tqdm import tqdm

from .cube_kernel import (
    CubeComplex, CubeCovering, PermutationCover, crossing_graph_dot, cube_dim, cover,
    fiber_product, is_isomorphic, salvetti_complex
)
from .cutbind import divisibilities, surface_square_complex
from .linalg import lattice_invariants, quotient_order
from .models import (
    BoundaryMismatch, CensusMismatch, Certificate, CoverPostcheckFailed, CurveKind,
    CutBindSystem, CutCurve, IotaKind, NotImmersion, NotSpecialAfterTower, TowerBlowup,
    TowerStage, XiData
)


logger = logging.getLogger(__name__)

Coord = Tuple[int, int]


def _sign(value: int) -> int:
    return 1 if value > 0 else -1


def directions(xi: XiData, v: str) -> List[int]:
    """Índices j ≠ i(v): direcciones de fibra de la pieza"""
    return [j for j in range(1, xi.n + 3) if j != xi.index[v]]


class VoltageComplex(BaseModel):
    """
    Pieza X_v: base finita con voltajes en Z^{n+1} y el retículo que los
    reduce. La base tiene un lazo de fibra por región y dirección.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    vertex: str
    index: int
    directions: List[int]
    pants: List[str]
    base: Any
    voltages: Dict[Any, List[int]]
    fiber_lattice: List[List[int]]
    homology_lattice: List[List[int]]

    @property
    def rank(self) -> int:
        return len(self.directions)

    @property
    def order(self) -> Optional[int]:
        """|Z^{n+1}/L'| con L' generado por ξ⃗(f_v); None si es infinito"""
        return quotient_order(self.fiber_lattice, self.rank)

    @property
    def homology_order(self) -> Optional[int]:
        return quotient_order(self.homology_lattice, self.rank)

    @property
    def invariants(self) -> List[int]:
        return lattice_invariants(self.homology_lattice, self.rank)

    @property
    def finite(self) -> bool:
        return self.order is not None

    def square_condition(self) -> bool:
        """La suma de voltajes alrededor de cada cuadrado es nula"""
        for cube in self.base.cubes:
            if cube_dim(cube) != 2:
                continue
            total = [0] * self.rank
            for key, direction in (((0, 0), 1), ((1, 1), 1), ((2, 0), -1), ((0, 1), -1)):
                eid, sign = cube[key]
                for k, value in enumerate(self.voltages[eid]):
                    total[k] += direction * sign * value
            if any(total):
                return False
        return True


def _unit(size: int, position: int) -> List[int]:
    return [1 if k == position else 0 for k in range(size)]


def _internal_curves(system: CutBindSystem, v: str) -> List[CutCurve]:
    decomposition = system.decomposition
    return [
        c for c in decomposition.curves
        if decomposition.pants_by_id(c.plus[0]).vertex == v
        and decomposition.pants_by_id(c.minus[0]).vertex == v
    ]


def build_piece(v: str, xi: XiData, system: CutBindSystem) -> VoltageComplex:
    """
    Complejo de voltajes de la pieza sobre v

    Voltajes: arista de enlace −c_P·Δ, lazo de fibra j el vector unitario,
    arista de corte interna 0. Retículo de homología generado por ξ⃗(f_v),
    las clases de asa y las curvas de corte que tocan F_v.
    """
    dirs = directions(xi, v)
    size = len(dirs)
    position = {j: k for k, j in enumerate(dirs)}
    decomposition = system.decomposition
    pants = decomposition.pants_at(v)

    base = CubeComplex(name=f"X[{v}]")
    voltages: Dict[Any, List[int]] = {}
    for p in pants:
        pattern = system.patterns[p.id]
        for region in pattern.regions:
            base.add_vertex((p.id, region))
            for j in dirs:
                fid = ("fiber", p.id, region, j)
                base.add_edge(fid, (p.id, region), (p.id, region))
                voltages[fid] = _unit(size, position[j])
        for name, (tail, head) in sorted(pattern.arcs.items()):
            bid = ("bind", p.id, name)
            base.add_edge(bid, (p.id, tail), (p.id, head))
            voltages[bid] = [-pattern.sign] * size

    for p in pants:
        pattern = system.patterns[p.id]
        for name, (tail, head) in sorted(pattern.arcs.items()):
            for j in dirs:
                base.add_cube({
                    (0, 0): (("bind", p.id, name), 1),
                    (2, 0): (("bind", p.id, name), 1),
                    (0, 1): (("fiber", p.id, tail, j), 1),
                    (1, 1): (("fiber", p.id, head, j), 1),
                })
        for region in pattern.regions:
            for a, j in enumerate(dirs):
                for k in dirs[a + 1:]:
                    base.add_cube({
                        (0, 0): (("fiber", p.id, region, j), 1),
                        (2, 0): (("fiber", p.id, region, j), 1),
                        (0, 1): (("fiber", p.id, region, k), 1),
                        (1, 1): (("fiber", p.id, region, k), 1),
                    })

    internal = {c.id for c in _internal_curves(system, v)}
    if internal:
        surface = surface_square_complex(system)
        for eid, (tail, head) in surface.edges.items():
            if eid[0] == "cut" and eid[1] in internal:
                base.add_edge(eid, tail, head)
                voltages[eid] = [0] * size
                for j in dirs:
                    base.add_cube({
                        (0, 0): (eid, 1),
                        (2, 0): (eid, 1),
                        (0, 1): (("fiber", tail[0], tail[1], j), 1),
                        (1, 1): (("fiber", head[0], head[1], j), 1),
                    })
        for cube in surface.cubes:
            if cube[(0, 1)][0][1] in internal:
                base.add_cube(cube)

    fiber_lattice = [[xi.xi_fiber(j, v) for j in dirs]]
    homology = list(fiber_lattice)
    for c in decomposition.curves:
        touches = any(decomposition.pants_by_id(slot[0]).vertex == v for slot in (c.plus, c.minus))
        if touches:
            homology.append([xi.curve_values[c.id]] * size)
        if c.kind == CurveKind.HANDLE and c.vertex == v and c.dual is not None:
            dual_value = sum(x * y for x, y in zip(xi.xi, c.dual))
            homology.append([dual_value] * size)

    piece = VoltageComplex(
        vertex=v, index=xi.index[v], directions=dirs, pants=[p.id for p in pants],
        base=base, voltages=voltages, fiber_lattice=fiber_lattice, homology_lattice=homology,
    )
    logger.info(
        f"Pieza {v}: i = {piece.index}, |A'| = {piece.order or '∞'}, "
        f"|A| = {piece.homology_order or '∞'}, f = {base.f_vector()}"
    )
    return piece


def build_pieces(xi: XiData, system: CutBindSystem) -> Dict[str, VoltageComplex]:
    return {v: build_piece(v, xi, system) for v in sorted(xi.index)}


class _Side:
    """Un lado de un toro de corte en coordenadas (segmento, nivel)"""

    def __init__(self, glued: "GluedComplex", curve: CutCurve, plus: bool):
        system = glued.system
        self.system = system
        self.slot = curve.plus if plus else curve.minus
        self.pants = self.slot[0]
        self.vertex = system.decomposition.pants_by_id(self.pants).vertex
        self.i = glued.xi.index[self.vertex]
        self.j = 3 - self.i
        self.size = glued.level_count(self.vertex)
        self.value = glued.xi.curve_values[curve.id]
        self.length = abs(self.value)
        self.sgn = _sign(self.value)
        self.outer = system.pattern_slot(*self.slot) == 0
        self.forward = self.sgn > 0 if plus else self.sgn < 0
        self.offset = glued.offsets.get(self.vertex, 0)

    def vertex_at(self, coord: Coord) -> Tuple[str, str, int]:
        seg, a = coord
        return (self.pants, self.system.seg_region(self.slot, seg), a % self.size)

    def move(self, coord: Coord, d: int) -> Tuple[Tuple, int, Coord]:
        """
        Paso positivo en la dirección d: (arista, signo, coordenada nueva).
        En la dirección i del lado es un paso de enlace con Q → Q + 1 y el
        nivel baja en 1; en otra dirección es un paso de fibra.
        """
        seg, a = coord
        if d == self.i:
            if self.forward:
                point, new, sign = seg, seg + 1, 1 if self.outer else -1
            else:
                point, new, sign = seg - 1, seg - 1, -1 if self.outer else 1
            arc = self.system.point_arc(self.slot, point)
            level = (a - 1) % self.size
            eid = ("bind", self.pants, arc, a % self.size if sign > 0 else level)
            return eid, sign, (new % self.length, level)
        region = self.system.seg_region(self.slot, seg)
        return ("fiber", self.pants, region, a % self.size), 1, (seg, (a + 1) % self.size)


class GluedComplex:
    """
    Pegado canónico de las piezas. `complex` es None cuando alguna pieza
    tiene grupo de fibra infinito (n > 0): sólo hay datos de voltaje.
    """

    def __init__(self, pieces: Dict[str, VoltageComplex], system: CutBindSystem, xi: XiData,
                 offsets: Optional[Dict[str, int]] = None):
        self.pieces = pieces
        self.system = system
        self.xi = xi
        self.offsets = dict(offsets or {})
        self.complex: Optional[CubeComplex] = None
        self.piece_squares: List[Tuple[str, int]] = []
        self.torus_next: Dict[str, Dict[Coord, Dict[int, Coord]]] = {}
        self.cut_squares: Dict[Tuple[str, Coord, int], Tuple[Hashable, Hashable]] = {}
        self.logger = logging.getLogger(__name__)

    @property
    def materialized(self) -> bool:
        return self.complex is not None

    def level_count(self, v: str) -> int:
        return abs(self.xi.xi_fiber(3 - self.xi.index[v], v))

    def vertex_of(self, pants_id: str) -> str:
        return self.system.decomposition.pants_by_id(pants_id).vertex

    def kind(self, eid: Hashable) -> str:
        """Tipo de la arista en X: "cut" o "bind(j)" """
        tag, pants_id = eid[0], eid[1]
        if tag == "cut":
            return "cut"
        i = self.xi.index[self.vertex_of(pants_id)]
        return f"bind({i})" if tag == "bind" else f"bind({3 - i})"

    def psi(self, j: int, eid: Hashable) -> int:
        """Cociclo ψ^j dual a ξ^j"""
        tag = eid[0]
        if tag == "cut":
            return 0
        i = self.xi.index[self.vertex_of(eid[1])]
        if tag == "bind":
            return self.system.patterns[eid[1]].sign if i == j else 0
        return 1 if 3 - i == j else 0

    def sides(self, curve: CutCurve) -> Tuple[_Side, _Side]:
        return _Side(self, curve, True), _Side(self, curve, False)

    def image(self, plus: _Side, minus: _Side, shift: int, coord: Coord) -> Coord:
        """Coordenada del lado minus pegada a `coord` del lado plus"""
        k, a = coord
        q = k * plus.sgn
        rho = {plus.i: q, plus.j: a + plus.offset + q}
        r = rho[minus.i]
        t = (r * plus.sgn) % plus.length
        q_minus = t * plus.sgn
        lam = (r - q_minus) // plus.value
        reduced = {idx: value - lam * plus.value for idx, value in rho.items()}
        level = reduced[minus.j] - q_minus - minus.offset
        return ((shift + 1 - t) % plus.length, level % minus.size)

    def materialize(self) -> CubeComplex:
        """
        Construye X para n = 0

        Raises:
            BoundaryMismatch si algún pegado no es un isomorfismo de toros
        """
        X = CubeComplex(name="X")
        for p in self.system.decomposition.pants:
            size = self.level_count(p.vertex)
            pattern = self.system.patterns[p.id]
            c = pattern.sign
            for region in pattern.regions:
                for a in range(size):
                    X.add_vertex((p.id, region, a))
            for name, (tail, head) in sorted(pattern.arcs.items()):
                for a in range(size):
                    X.add_edge(("bind", p.id, name, a), (p.id, tail, a), (p.id, head, (a - c) % size))
            for region in pattern.regions:
                for a in range(size):
                    X.add_edge(("fiber", p.id, region, a), (p.id, region, a), (p.id, region, (a + 1) % size))
            for name, (tail, head) in sorted(pattern.arcs.items()):
                for a in range(size):
                    k = X.add_cube({
                        (0, 0): (("bind", p.id, name, a), 1),
                        (2, 0): (("bind", p.id, name, (a + 1) % size), 1),
                        (0, 1): (("fiber", p.id, tail, a), 1),
                        (1, 1): (("fiber", p.id, head, (a - c) % size), 1),
                    })
                    self.piece_squares.append((p.id, k))

        for curve in self.system.decomposition.curves:
            self._glue_curve(X, curve)

        self.complex = X
        self.logger.info(f"Complejo X materializado: f = {X.f_vector()}, χ = {X.euler_characteristic()}")
        return X

    def _glue_curve(self, X: CubeComplex, curve: CutCurve) -> None:
        plus, minus = self.sides(curve)
        shift = self.system.shifts[curve.id]
        if plus.size != minus.size:
            raise BoundaryMismatch(
                f"Toro de {curve.id}: {plus.length}·{plus.size} ≠ {minus.length}·{minus.size}"
            )
        coords = [(k, a) for k in range(plus.length) for a in range(plus.size)]
        image = {c: self.image(plus, minus, shift, c) for c in coords}
        if len(set(image.values())) != len(coords):
            raise BoundaryMismatch(f"El pegado de {curve.id} no es biyectivo")

        def cut(coord: Coord) -> Tuple:
            return ("cut", curve.id, coord[0], coord[1])

        for c in coords:
            X.add_edge(cut(c), plus.vertex_at(c), minus.vertex_at(image[c]))

        following: Dict[Coord, Dict[int, Coord]] = defaultdict(dict)
        for c in coords:
            for d in (1, 2):
                ea, sa, c2 = plus.move(c, d)
                eb, sb, b2 = minus.move(image[c], d)
                if b2 != image[c2]:
                    raise BoundaryMismatch(f"{curve.id}: el paso {d} desde {c} no conmuta con el pegado")
                X.add_cube({(0, 0): (ea, sa), (2, 0): (eb, sb), (0, 1): (cut(c), 1), (1, 1): (cut(c2), 1)})
                following[c][d] = c2
                self.cut_squares[(curve.id, c, d)] = (ea, eb)
        self.torus_next[curve.id] = dict(following)

        for c in coords:
            e1, s1, c1 = plus.move(c, 1)
            e2, s2, c2 = plus.move(c, 2)
            e12, s12, c12 = plus.move(c1, 2)
            e21, s21, c21 = plus.move(c2, 1)
            if c12 != c21:
                raise BoundaryMismatch(f"{curve.id}: los pasos no conmutan en {c}")
            b = image[c]
            f1, t1, b1 = minus.move(b, 1)
            f2, t2, b2 = minus.move(b, 2)
            f12, t12, _ = minus.move(b1, 2)
            f21, t21, _ = minus.move(b2, 1)
            X.add_cube({
                (0, 0): (e1, s1), (2, 0): (e21, s21), (0, 1): (e2, s2), (1, 1): (e12, s12),
                (4, 0): (f1, t1), (6, 0): (f21, t21), (4, 1): (f2, t2), (5, 1): (f12, t12),
                (0, 2): (cut(c), 1), (1, 2): (cut(c1), 1), (2, 2): (cut(c2), 1), (3, 2): (cut(c12), 1),
            })

    def identity_covering(self) -> CubeCovering:
        X = self.complex
        return CubeCovering(
            X, X, {v: v for v in X.vertices}, {e: e for e in X.edges}, list(range(len(X.cubes)))
        )


def glue_canonical(
    pieces: Dict[str, VoltageComplex],
    system: CutBindSystem,
    xi: XiData,
    offsets: Optional[Dict[str, int]] = None,
) -> GluedComplex:
    """
    Pega las piezas por los isomorfismos canónicos de toros. `offsets`
    desplaza el nivel de referencia de cada pieza (otro levantamiento).
    """
    glued = GluedComplex(pieces, system, xi, offsets)
    if xi.n > 0 or not all(piece.finite for piece in pieces.values()):
        logger.warning("Grupo de fibra infinito: sólo se conservan los datos de voltaje")
        return glued
    glued.materialize()
    return glued


class PantsCensus(BaseModel):
    pants: str
    index: int
    vertical: int
    horizontal: Dict[int, int]
    boundary: Dict[str, List[int]] = Field(default_factory=dict)


class CensusReport(BaseModel):
    """Recuento de hiperplanos frente a las divisibilidades de ξ"""
    cut: int
    curves: int
    pants: List[PantsCensus]
    single_type: bool
    duality: Dict[int, bool] = Field(default_factory=dict)
    materialized: bool

    @property
    def ok(self) -> bool:
        return self.cut == self.curves and self.single_type and all(self.duality.values())


def _voltage_quotient(piece: VoltageComplex, extra: Iterable[List[int]]) -> Optional[int]:
    return quotient_order(piece.fiber_lattice + list(extra), piece.rank)


def _voltage_census(glued: GluedComplex) -> List[PantsCensus]:
    system, xi = glued.system, glued.xi
    rows = []
    for p in system.decomposition.pants:
        piece = glued.pieces[p.vertex]
        pattern = system.patterns[p.id]
        loops = [[value] * piece.rank for value in pattern.triple]
        horizontal = {}
        boundary: Dict[str, List[int]] = {}
        for position, j in enumerate(piece.directions):
            others = [_unit(piece.rank, k) for k in range(piece.rank) if k != position]
            count = _voltage_quotient(piece, loops + others)
            expected = divisibilities(xi, system, j, "pants", p.id)
            if count != expected:
                raise CensusMismatch(f"{p.id}: {count} horizontales de índice {j}, se esperaban {expected}")
            horizontal[j] = count
            for cid, _ in p.boundaries:
                torus = _voltage_quotient(piece, [[xi.curve_values[cid]] * piece.rank] + others)
                expected_torus = divisibilities(xi, system, j, "curve", cid)
                if torus != expected_torus:
                    raise CensusMismatch(f"{p.id}/{cid}: {torus} circunferencias, se esperaban {expected_torus}")
                boundary.setdefault(cid, []).append(torus // count)
        rows.append(PantsCensus(
            pants=p.id, index=piece.index, vertical=len(pattern.arcs),
            horizontal=horizontal, boundary=boundary,
        ))
    return rows


def _walk_psi(glued: GluedComplex, steps: List[Tuple[Hashable, int]]) -> Dict[int, int]:
    return {j: sum(glued.psi(j, eid) * sign for eid, sign in steps) for j in (1, 2)}


def _duality(glued: GluedComplex) -> Dict[int, bool]:
    """ψ^j sobre lazos de fibra y lazos de borde levantados coincide con ξ^j"""
    ok = {1: True, 2: True}
    xi = glued.xi
    for v in sorted(xi.index):
        p = glued.system.decomposition.pants_at(v)[0]
        size = glued.level_count(v)
        steps = [(("fiber", p.id, "O", a), 1) for a in range(size)]
        values = _walk_psi(glued, steps)
        for j in (1, 2):
            ok[j] &= values[j] == abs(xi.xi_fiber(j, v)) * (1 if j != xi.index[v] else 0)
    for curve in glued.system.decomposition.curves:
        plus, _ = glued.sides(curve)
        coord, steps = (0, 0), []
        for _ in range(plus.length):
            eid, sign, coord = plus.move(coord, plus.i)
            steps.append((eid, sign))
        for _ in range(plus.length):
            eid, sign, coord = plus.move(coord, plus.j)
            steps.append((eid, sign))
        values = _walk_psi(glued, steps)
        for j in (1, 2):
            ok[j] &= coord == (0, 0) and values[j] == plus.length
    return ok


def hyperplane_census(glued: GluedComplex) -> CensusReport:
    """
    Censo de hiperplanos

    Con datos de voltaje: horizontales por pantalón, circunferencias de
    borde por horizontal y verticales. Si X está materializado, además
    cuenta las clases reales en X y comprueba la dualidad de ψ.

    Raises:
        CensusMismatch si algún recuento difiere de su fórmula
    """
    rows = _voltage_census(glued)
    curves = len(glued.system.decomposition.curves)
    if not glued.materialized:
        return CensusReport(cut=curves, curves=curves, pants=rows, single_type=True, materialized=False)

    X = glued.complex
    index = X.hyperplane_index()
    kinds: Dict[int, Set[str]] = defaultdict(set)
    for eid, hid in index.edge_h.items():
        kinds[hid].add(glued.kind(eid))
    single = all(len(k) == 1 for k in kinds.values())
    cut = sum(1 for k in kinds.values() if k == {"cut"})

    vertical: Dict[str, UnionFind] = defaultdict(UnionFind)
    horizontal: Dict[str, UnionFind] = defaultdict(UnionFind)
    for pid, k in glued.piece_squares:
        cube = X.cubes[k]
        vertical[pid].union(cube[(0, 0)][0], cube[(2, 0)][0])
        horizontal[pid].union(cube[(0, 1)][0], cube[(1, 1)][0])

    for row in rows:
        pid = row.pants
        if len(list(vertical[pid].to_sets())) != row.vertical:
            raise CensusMismatch(f"{pid}: verticales en X ≠ arcos de enlace")
        (j,) = row.horizontal
        classes = list(horizontal[pid].to_sets())
        if len(classes) != row.horizontal[j]:
            raise CensusMismatch(f"{pid}: {len(classes)} horizontales en X, se esperaban {row.horizontal[j]}")
        _boundary_components(glued, row, horizontal[pid])

    report = CensusReport(
        cut=cut, curves=curves, pants=rows, single_type=single, duality=_duality(glued),
        materialized=True,
    )
    if not report.ok:
        raise CensusMismatch(f"Censo de X inconsistente: {report.model_dump()}")
    logger.info(f"Censo: {cut} hiperplanos de corte, {len(rows)} pantalones verificados")
    return report


def _boundary_components(glued: GluedComplex, row: PantsCensus, horizontal: UnionFind) -> None:
    """Circunferencias de H ∩ toro de corte por horizontal H del pantalón"""
    p = glued.system.decomposition.pants_by_id(row.pants)
    for cid, _ in p.boundaries:
        curve = glued.system.decomposition.curve(cid)
        plus, minus = glued.sides(curve)
        side, position = (plus, 0) if curve.plus[0] == p.id else (minus, 1)
        following = glued.torus_next[cid]
        torus = UnionFind(following)
        for coord, moves in following.items():
            torus.union(coord, moves[side.i])
        per_class: Dict[Hashable, Set[Hashable]] = defaultdict(set)
        for coord in following:
            edge = glued.cut_squares[(cid, coord, side.j)][position]
            per_class[horizontal[edge]].add(torus[coord])
        expected = row.boundary[cid][0]
        for components in per_class.values():
            if len(components) != expected:
                raise CensusMismatch(
                    f"{row.pants}/{cid}: {len(components)} circunferencias en una horizontal, "
                    f"se esperaban {expected}"
                )


class HyperplaneGraph(BaseModel):
    """Υ_H con ι_H: Υ_H → Υ y su clasificación"""
    hyperplane: int
    kind: str
    vertices: List[int]
    edges: List[Tuple[int, int, int]]
    vertex_map: Dict[int, int]
    classification: IotaKind


class DecompositionGraphs(BaseModel):
    """Υ (piezas y toros de corte) y un Υ_H por hiperplano de enlace"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    upsilon: Any
    piece_of: Dict[Any, int]
    graphs: Dict[int, HyperplaneGraph]

    def counts(self) -> Dict[str, int]:
        tally = {kind.value: 0 for kind in IotaKind}
        for graph in self.graphs.values():
            tally[graph.classification.value] += 1
        return tally


def _edge_kinds(cov: CubeCovering, glued: GluedComplex) -> Dict[Hashable, str]:
    return {e: glued.kind(cov.edge_proj[e]) for e in cov.total.edges}


def _classify(graph_edges: List[Tuple[int, int, int]], vertex_map: Dict[int, int]) -> IotaKind:
    half_edges: Set[Tuple[int, int, int]] = set()
    for tail, head, hc in graph_edges:
        for vertex, side in ((tail, 1), (head, -1)):
            if (vertex, hc, side) in half_edges:
                return IotaKind.NOT_IMMERSION
            half_edges.add((vertex, hc, side))
    injective_vertices = len(set(vertex_map.values())) == len(vertex_map)
    injective_edges = len({hc for _, _, hc in graph_edges}) == len(graph_edges)
    return IotaKind.EMBEDDING if injective_vertices and injective_edges else IotaKind.IMMERSION


def decomposition_graphs(
    cov: CubeCovering, glued: GluedComplex, kinds: Optional[Set[str]] = None
) -> DecompositionGraphs:
    """
    Grafo de descomposición Υ de un recubrimiento Y → X y, para cada
    hiperplano de enlace H (filtrado por tipo), el grafo Υ_H con ι_H

    Las piezas de Y son las componentes tras quitar las aristas de corte;
    las aristas de Υ son los hiperplanos de corte, del lado negativo al
    positivo. Los vértices de Υ_H son componentes de H ∩ pieza y sus aristas
    componentes de H ∩ hiperplano de corte.
    """
    Y = cov.total
    kind = _edge_kinds(cov, glued)
    index = Y.hyperplane_index()

    pieces = UnionFind(Y.vertices)
    for eid, (tail, head) in Y.edges.items():
        if kind[eid] != "cut":
            pieces.union(tail, head)
    roots: Dict[Hashable, int] = {}
    piece_of = {v: roots.setdefault(pieces[v], len(roots)) for v in Y.vertices}

    h_kind = {index.edge_h[e]: kind[e] for e in Y.edges}
    upsilon = nx.MultiDiGraph()
    upsilon.add_nodes_from(range(len(roots)))
    for hid, members in sorted(index.members().items()):
        if h_kind[hid] != "cut":
            continue
        e = members[0]
        tail, head = Y.edges[e]
        neg, pos = (tail, head) if index.orientation[e] > 0 else (head, tail)
        upsilon.add_edge(piece_of[neg], piece_of[pos], key=hid)

    targets = {h for h, k in h_kind.items() if k != "cut" and (kinds is None or k in kinds)}
    inside = UnionFind(e for e in Y.edges if index.edge_h[e] in targets)
    mixed: Dict[FrozenSet, int] = {}
    for k, cube in enumerate(Y.cubes):
        if cube_dim(cube) != 2:
            continue
        axis0 = (cube[(0, 0)][0], cube[(2, 0)][0])
        axis1 = (cube[(0, 1)][0], cube[(1, 1)][0])
        for parallel, other in ((axis0, axis1), (axis1, axis0)):
            if index.edge_h[parallel[0]] not in targets:
                continue
            if kind[other[0]] == "cut":
                mixed[frozenset(axis0 + axis1)] = k
            else:
                inside.union(*parallel)

    meets = UnionFind(mixed.values())
    for cube in Y.cubes:
        if cube_dim(cube) != 3:
            continue
        for a, b, c in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
            faces = []
            for base in (0, 1 << c):
                edges = frozenset((
                    cube[(base, a)][0], cube[(base, b)][0],
                    cube[(base | 1 << b, a)][0], cube[(base | 1 << a, b)][0],
                ))
                faces.append(mixed.get(edges))
            if None not in faces:
                meets.union(*faces)

    per_h_edges: Dict[int, List[Tuple[Hashable, Hashable, int]]] = defaultdict(list)
    for members in meets.to_sets():
        k = next(iter(members))
        cube = Y.cubes[k]
        bind_axis = 0 if index.edge_h[cube[(0, 0)][0]] in targets and kind[cube[(0, 0)][0]] != "cut" else 1
        cut_axis = 1 - bind_axis
        e_cut, s_cut = cube[(0, cut_axis)]
        neg_bit = 0 if (s_cut > 0) == (index.orientation[e_cut] > 0) else 1
        neg_edge = cube[(neg_bit << cut_axis, bind_axis)][0]
        pos_edge = cube[((1 - neg_bit) << cut_axis, bind_axis)][0]
        hid = index.edge_h[neg_edge]
        per_h_edges[hid].append((inside[neg_edge], inside[pos_edge], index.edge_h[e_cut]))

    per_h_vertices: Dict[int, Set[Hashable]] = defaultdict(set)
    component_piece: Dict[Hashable, int] = {}
    for e in inside:
        root = inside[e]
        per_h_vertices[index.edge_h[e]].add(root)
        component_piece.setdefault(root, piece_of[Y.edges[e][0]])

    graphs: Dict[int, HyperplaneGraph] = {}
    for hid in sorted(targets):
        numbering = {root: k for k, root in enumerate(sorted(per_h_vertices[hid], key=repr))}
        edges = [(numbering[t], numbering[h], hc) for t, h, hc in per_h_edges[hid]]
        vertex_map = {numbering[root]: component_piece[root] for root in numbering}
        graphs[hid] = HyperplaneGraph(
            hyperplane=hid, kind=h_kind[hid], vertices=sorted(numbering.values()),
            edges=edges, vertex_map=vertex_map, classification=_classify(edges, vertex_map),
        )
    return DecompositionGraphs(upsilon=upsilon, piece_of=piece_of, graphs=graphs)


class PathologyReport(BaseModel):
    """Patologías de especialidad separadas por tipo de hiperplano"""
    cut_self_osculations: List[str] = Field(default_factory=list)
    bind_self_osculations: List[str] = Field(default_factory=list)
    cut_bind_inter_osculations: List[str] = Field(default_factory=list)
    bind_inter_osculations: List[str] = Field(default_factory=list)
    basic: Dict[str, bool] = Field(default_factory=dict)
    special: bool


def pathologies(cov: CubeCovering, glued: GluedComplex) -> PathologyReport:
    """
    Clasifica autoosculaciones e interosculaciones por tipo y comprueba lo
    que el pegado garantiza siempre: sin autointersecciones, hiperplanos del
    mismo tipo que no se cruzan y enlaces de índices distintos que no osculan.
    """
    Y = cov.total
    kind = _edge_kinds(cov, glued)
    index = Y.hyperplane_index()
    h_kind = {index.edge_h[e]: kind[e] for e in Y.edges}
    crossing, selfint = Y.crossing_pairs()
    selfosc, osculating = Y.osculations()
    report = Y.specialness()

    def label(h: int) -> str:
        return f"H{h}[{h_kind[h]}]"

    cut_self = [f"{label(h)}@{v}" for v, h, _ in selfosc if h_kind[h] == "cut"]
    bind_self = [f"{label(h)}@{v}" for v, h, _ in selfosc if h_kind[h] != "cut"]
    inter = [(a, b) for a, b in sorted(osculating) if (a, b) in crossing]
    cut_bind = [
        f"{label(a)}/{label(b)}@{osculating[(a, b)]}" for a, b in inter
        if "cut" in (h_kind[a], h_kind[b]) and h_kind[a] != h_kind[b]
    ]
    bind_bind = [
        f"{label(a)}/{label(b)}@{osculating[(a, b)]}" for a, b in inter
        if h_kind[a] == h_kind[b] != "cut"
    ]
    basic = {
        "no_self_intersection": not selfint,
        "same_type_disjoint": all(h_kind[a] != h_kind[b] for a, b in crossing),
        "distinct_bind_no_osculation": not any(
            h_kind[a] != h_kind[b] and "cut" not in (h_kind[a], h_kind[b]) and (a, b) not in crossing
            for a, b in osculating
        ),
    }
    return PathologyReport(
        cut_self_osculations=cut_self,
        bind_self_osculations=bind_self,
        cut_bind_inter_osculations=cut_bind,
        bind_inter_osculations=bind_bind,
        basic=basic,
        special=report.special,
    )


class CyclicCover(BaseModel):
    """X̃^j → X asociado a ψ^j mod l^j"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    index: int
    l: int
    divisibility: int
    covering: Any
    graphs: Any

    @property
    def degree(self) -> int:
        return self.covering.degree


def cyclic_cover(glued: GluedComplex, j: int) -> CyclicCover:
    """
    Recubrimiento cíclico de X por ψ^j mod l^j (componente de la hoja 0)

    Raises:
        CoverPostcheckFailed si un hiperplano de corte autoosculta en una
        pieza de índice j, o si algún ι_H de índice j no es inmersión
    """
    X = glued.complex
    xi, system = glued.xi, glued.system
    l = divisibilities(xi, system, j, "l")
    divisibility = divisibilities(xi, system, j, "global")
    perms = {}
    for eid in X.edges:
        shift = glued.psi(j, eid) % l
        if shift:
            perms[eid] = [(k + shift) % l for k in range(l)]
    full = cover(X, PermutationCover(degree=l, perms=perms))
    covering = full.component((next(iter(X.vertices)), 0))
    covering.total.name = f"X~{j}"

    Y = covering.total
    index = Y.hyperplane_index()
    kind = _edge_kinds(covering, glued)
    cut_h = {index.edge_h[e] for e in Y.edges if kind[e] == "cut"}
    scope = [y for y in Y.vertices if xi.index[glued.vertex_of(covering.vertex_proj[y][0])] == j]
    selfosc, _ = Y.osculations(vertices=scope, hyperplanes=cut_h)
    bad = [f"H{h}@{v}" for v, h, _ in selfosc if h in cut_h]
    if bad:
        raise CoverPostcheckFailed(f"X~{j}: autoosculación de corte en {bad[:5]}")

    graphs = decomposition_graphs(covering, glued, kinds={f"bind({j})"})
    failing = [h for h, g in graphs.graphs.items() if g.classification == IotaKind.NOT_IMMERSION]
    if failing:
        raise CoverPostcheckFailed(f"X~{j}: ι_H no es inmersión para {failing[:5]}")

    logger.info(
        f"Recubrimiento cíclico j = {j}: l = {l}, div = {divisibility}, "
        f"grado = {covering.degree}, {len(graphs.graphs)} hiperplanos de índice {j}"
    )
    return CyclicCover(index=j, l=l, divisibility=divisibility, covering=covering, graphs=graphs)


Perm = Tuple[int, ...]


def stallings_completion(graph: HyperplaneGraph, upsilon: nx.MultiDiGraph) -> Tuple[int, Dict[int, List[int]]]:
    """
    Completa la inmersión ι_H: Υ_H → Υ a un recubrimiento finito

    Las fibras se rellenan hasta el tamaño máximo y cada biyección parcial se
    extiende emparejando en orden los puntos libres.

    Returns:
        (grado, {arista de Υ: biyección fibra(cola) → fibra(cabeza)})

    Raises:
        NotImmersion si dos aristas de Υ_H con el mismo extremo caen sobre
        la misma arista de Υ
    """
    fibers: Dict[int, List[int]] = {y: [] for y in upsilon.nodes}
    for eta in sorted(graph.vertex_map):
        fibers[graph.vertex_map[eta]].append(eta)
    degree = max(len(f) for f in fibers.values())
    position = {eta: k for f in fibers.values() for k, eta in enumerate(f)}

    bijections: Dict[int, List[int]] = {}
    for _, _, h in upsilon.edges(keys=True):
        partial: Dict[int, int] = {}
        for tail, head, hc in graph.edges:
            if hc != h:
                continue
            source, target = position[tail], position[head]
            if source in partial or target in partial.values():
                raise NotImmersion(f"H{graph.hyperplane}: dos aristas sobre el toro {h} desde un mismo extremo")
            partial[source] = target
        free = iter(k for k in range(degree) if k not in partial.values())
        bijections[h] = [partial[k] if k in partial else next(free) for k in range(degree)]
    return degree, bijections


class NormalCore(BaseModel):
    """Recubrimiento regular de Υ con grupo G y voltajes por arista"""
    order: int
    elements: List[Perm]
    voltages: Dict[int, int]
    tree: List[int]
    completions: Dict[int, int]

    def left(self, h: int) -> List[int]:
        """Acción de la arista h sobre G por multiplicación a izquierda"""
        sigma = self.elements[self.voltages[h]]
        lookup = {g: k for k, g in enumerate(self.elements)}
        return [lookup[tuple(sigma[x] for x in g)] for g in self.elements]


def _closure(generators: List[Perm], size: int, limit: int) -> List[Perm]:
    identity = tuple(range(size))
    elements = [identity]
    seen = {identity}
    queue = deque([identity])
    while queue:
        g = queue.popleft()
        for s in generators:
            product = tuple(s[x] for x in g)
            if product in seen:
                continue
            seen.add(product)
            elements.append(product)
            queue.append(product)
            if len(elements) > limit:
                raise TowerBlowup(f"El grupo de monodromía supera {limit} elementos")
    return elements


def normal_core(
    upsilon: nx.MultiDiGraph, completions: Dict[int, Tuple[int, Dict[int, List[int]]]], limit: int
) -> NormalCore:
    """
    Núcleo normal común de las compleciones: monodromía de la unión disjunta
    de los recubrimientos, con las aristas de un árbol generador de Υ
    normalizadas a la identidad.
    """
    blocks = [(hid, d, bij) for hid, (d, bij) in sorted(completions.items()) if d > 1]
    size = sum(d for _, d, _ in blocks)

    def combined(h: int) -> List[int]:
        perm, offset = [], 0
        for _, d, bij in blocks:
            perm.extend(offset + x for x in bij[h])
            offset += d
        return perm

    perms = {h: combined(h) for _, _, h in upsilon.edges(keys=True)}
    root = min(upsilon.nodes)
    phi: Dict[int, List[int]] = {root: list(range(size))}
    tree: List[int] = []
    for y, other in nx.bfs_edges(upsilon.to_undirected(as_view=True), root):
        if other in upsilon[y]:
            h = min(upsilon[y][other])
            phi[other] = [0] * size
            for s in range(size):
                phi[other][perms[h][s]] = phi[y][s]
        else:
            h = min(upsilon[other][y])
            phi[other] = [phi[y][perms[h][s]] for s in range(size)]
        tree.append(h)

    sigmas: Dict[int, Perm] = {}
    for tail, head, h in upsilon.edges(keys=True):
        sigma = [0] * size
        for s in range(size):
            sigma[phi[tail][s]] = phi[head][perms[h][s]]
        sigmas[h] = tuple(sigma)

    generators = sorted({s for h, s in sigmas.items() if h not in tree})
    elements = _closure(generators, size, limit)
    lookup = {g: k for k, g in enumerate(elements)}
    return NormalCore(
        order=len(elements),
        elements=elements,
        voltages={h: lookup[s] for h, s in sigmas.items()},
        tree=sorted(tree),
        completions={hid: d for hid, (d, _) in completions.items()},
    )


def elevations_embed(graph: HyperplaneGraph, core: NormalCore) -> bool:
    """Cada elevación de ι_H al recubrimiento regular es inyectiva"""
    actions = {hc: core.left(hc) for _, _, hc in graph.edges}
    components = UnionFind((eta, g) for eta in graph.vertices for g in range(core.order))
    for tail, head, hc in graph.edges:
        for g in range(core.order):
            components.union((tail, g), (head, actions[hc][g]))
    vertex_images: Dict[Hashable, Set] = defaultdict(set)
    for eta in graph.vertices:
        for g in range(core.order):
            seen = vertex_images[components[(eta, g)]]
            image = (graph.vertex_map[eta], g)
            if image in seen:
                return False
            seen.add(image)
    edge_images: Dict[Hashable, Set] = defaultdict(set)
    for tail, _, hc in graph.edges:
        for g in range(core.order):
            seen = edge_images[components[(tail, g)]]
            if (hc, g) in seen:
                return False
            seen.add((hc, g))
    return True


def _pull_back(cyclic: CyclicCover, core: NormalCore, glued: GluedComplex) -> CubeCovering:
    """X̃ con las aristas de corte etiquetadas por G; compuesto hasta X"""
    covering = cyclic.covering
    Y = covering.total
    index = Y.hyperplane_index()
    kind = _edge_kinds(covering, glued)
    perms, actions = {}, {}
    for e in Y.edges:
        if kind[e] != "cut":
            continue
        hid = index.edge_h[e]
        if hid not in actions:
            actions[hid] = core.left(hid)
        action = actions[hid]
        if index.orientation[e] < 0:
            inverse = [0] * core.order
            for g, image in enumerate(action):
                inverse[image] = g
            action = inverse
        perms[e] = action
    lifted = cover(Y, PermutationCover(degree=core.order, perms=perms))
    return lifted.component((next(iter(Y.vertices)), 0)).compose(covering)


def _stage(glued: GluedComplex, j: int, budget: int) -> Tuple[CubeCovering, TowerStage]:
    cyclic = cyclic_cover(glued, j)
    graphs = cyclic.graphs
    completions = {hid: stallings_completion(g, graphs.upsilon) for hid, g in graphs.graphs.items()}
    cells = cyclic.covering.total.cell_count()
    core = normal_core(graphs.upsilon, completions, limit=max(1, budget // max(cells, 1)))
    for hid, graph in graphs.graphs.items():
        if not elevations_embed(graph, core):
            raise NotImmersion(f"X~{j}: una elevación de H{hid} no es un encaje")
    stage_cover = _pull_back(cyclic, core, glued)
    stage = TowerStage(
        index=j,
        l=cyclic.l,
        divisibility=cyclic.divisibility,
        cyclic_degree=cyclic.degree,
        completed_hyperplanes=sum(1 for d, _ in completions.values() if d > 1),
        core_order=core.order,
        degree=stage_cover.degree,
    )
    logger.info(f"Piso j = {j}: |G| = {core.order}, grado total {stage.degree}")
    return stage_cover, stage


def lerf_tower_and_certify(
    glued: GluedComplex,
    budget: int = 1_000_000,
    dim_cap: int = 3,
    classify: bool = True,
    progress: bool = False,
) -> Certificate:
    """
    Torre de recubrimientos finitos de X y certificado de especialidad

    Para cada j: recubrimiento cíclico, compleción de cada ι_H de índice j,
    núcleo normal común y su pullback a X̃^j. El último piso es una
    componente del producto fibrado de los pisos sobre X.

    Raises:
        TowerBlowup si algún tamaño intermedio supera `budget` celdas
        NotSpecialAfterTower si el complejo final no es especial
    """
    if not glued.materialized:
        raise TowerBlowup("La torre requiere el complejo materializado (n = 0)")
    X = glued.complex
    stages: List[TowerStage] = []
    top: Optional[CubeCovering] = None
    for j in tqdm(range(1, glued.xi.n + 3), desc="Torre", unit="piso", disable=not progress):
        stage_cover, stage = _stage(glued, j, budget)
        stages.append(stage)
        if top is None:
            top = stage_cover
            continue
        estimate = X.cell_count() * top.degree * stage_cover.degree
        if estimate > budget:
            raise TowerBlowup(f"Producto fibrado estimado en {estimate} celdas (presupuesto {budget})")
        top = fiber_product(top, stage_cover).component()

    Y = top.total
    Y.name = "X^"
    report = Y.specialness()
    if not report.special:
        raise NotSpecialAfterTower(f"El último piso no es especial: {report.witnesses[:5]}")
    char_map = Y.raag_and_char_map()
    classification = decomposition_graphs(top, glued).counts() if classify else {}

    certificate = Certificate(
        verdict="SPECIAL",
        stages=stages,
        degree=top.degree,
        f_vector=Y.f_vector(),
        hyperplanes=Y.hyperplane_index().count,
        crossing_edges=char_map.graph.number_of_edges(),
        local_isometry=char_map.local_isometry,
        classification=classification,
        witnesses=report.witnesses,
        crossing_dot=crossing_graph_dot(char_map.graph, name="special"),
        salvetti_f_vector=salvetti_complex(char_map.graph, dim_cap=dim_cap).f_vector(),
    )
    logger.info(f"Certificado: grado {certificate.degree}, f = {certificate.f_vector}")
    return certificate


def reference_independence(
    pieces: Dict[str, VoltageComplex], system: CutBindSystem, xi: XiData, offsets: Dict[str, int]
) -> bool:
    """El pegado con otro levantamiento de referencia da un complejo isomorfo"""
    first = glue_canonical(pieces, system, xi)
    second = glue_canonical(pieces, system, xi, offsets=offsets)
    if not (first.materialized and second.materialized):
        return True
    return is_isomorphic(first.complex, second.complex)
