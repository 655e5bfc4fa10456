from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import math

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator


End = Tuple[str, int]


def end_label(end: End) -> str:
    """Etiqueta textual de un extremo de arista: 'e1:0'"""
    return f"{end[0]}:{end[1]}"


def parse_end_label(label: str) -> End:
    """Inverso de end_label"""
    eid, side = label.rsplit(":", 1)
    return eid, int(side)


def bar(end: End) -> End:
    """Involución que cambia de lado el extremo"""
    return end[0], 1 - end[1]


class Vertex(BaseModel):
    """Pieza JSJ: vértice del grafo de configuración"""
    model_config = ConfigDict(frozen=True)

    id: str
    chi: int


class Edge(BaseModel):
    """Curva del multitwist: arista con multiplicidad b"""
    model_config = ConfigDict(frozen=True)

    id: str
    ends: Tuple[str, str]
    b: int


class ConfigGraph(BaseModel):
    """
    Grafo de configuración (Λ, {χ_v}, {b_e}) de un multitwist.

    No valida los invariantes al construirse: eso lo hace
    config_graph.parse_validate, que reúne todos los problemas a la vez.
    """
    model_config = ConfigDict(frozen=True)

    vertices: List[Vertex]
    edges: List[Edge]

    _vertex_index: Dict[str, Vertex] = PrivateAttr(default_factory=dict)
    _edge_index: Dict[str, Edge] = PrivateAttr(default_factory=dict)

    def model_post_init(self, __context) -> None:
        self._vertex_index = {v.id: v for v in self.vertices}
        self._edge_index = {e.id: e for e in self.edges}

    @property
    def vertex_ids(self) -> List[str]:
        return sorted(self._vertex_index)

    @property
    def edge_ids(self) -> List[str]:
        return sorted(self._edge_index)

    @property
    def ends(self) -> List[End]:
        return [(eid, side) for eid in self.edge_ids for side in (0, 1)]

    def chi(self, vertex: str) -> int:
        return self._vertex_index[vertex].chi

    def edge(self, eid: str) -> Edge:
        return self._edge_index[eid]

    def b(self, end_or_edge) -> int:
        """Multiplicidad b_δ = b_e (acepta extremo o id de arista)"""
        eid = end_or_edge[0] if isinstance(end_or_edge, tuple) else end_or_edge
        return self._edge_index[eid].b

    def v(self, end: End) -> str:
        """Vértice v(δ) en el que incide el extremo"""
        return self._edge_index[end[0]].ends[end[1]]

    def ends_at(self, vertex: str) -> List[End]:
        return [end for end in self.ends if self.v(end) == vertex]

    def valence(self, vertex: str) -> int:
        return len(self.ends_at(vertex))

    def genus(self, vertex: str) -> int:
        """g_v = (2 − χ_v − val(v)) / 2; solo tiene sentido si la paridad es correcta"""
        return (2 - self.chi(vertex) - self.valence(vertex)) // 2

    @property
    def total_genus(self) -> int:
        """Género de la fibra F: Σ g_v + β₁(Λ)"""
        betti = len(self.edges) - len(self.vertices) + 1
        return sum(self.genus(v) for v in self.vertex_ids) + betti


class CycleBasis(BaseModel):
    """Árbol generador y ciclos fundamentales (uno por arista fuera del árbol)"""
    tree_edges: List[str]
    cycles: Dict[str, List[End]] = Field(default_factory=dict)

    @property
    def rank(self) -> int:
        return len(self.cycles)


class CoveringMap(BaseModel):
    """Datos del recubrimiento doble Λ̃ → Λ"""
    vertex_map: Dict[str, str]
    edge_map: Dict[str, str]
    input_bipartite: bool = False


class AnosovVerdict(str, Enum):
    """Clasificación de una monodromía 2×2"""
    ANOSOV = "Anosov"
    NOT_ANOSOV = "NotAnosov"


class SurfaceModel(BaseModel):
    """
    Modelo simpléctico entero de H₁(F).

    La base son pares de asas (a_i^v, b_i^v) por vértice y pares (z_e, c_e)
    por arista fuera del árbol; la forma de intersección es la estándar.
    """
    labels: List[str]
    intersection: List[List[int]]
    curve_classes: Dict[str, List[int]]
    eps: Dict[str, int]
    tree_edges: List[str]
    nontree_edges: List[str]
    handles: Dict[str, List[Tuple[int, int]]] = Field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def unit(self, label: str) -> List[int]:
        vec = [0] * self.dim
        vec[self.index(label)] = 1
        return vec

    def form(self, x: List, y: List):
        """I(x, y) en la base del modelo"""
        return sum(
            x[i] * self.intersection[i][j] * y[j]
            for i in range(self.dim) for j in range(self.dim)
            if self.intersection[i][j]
        )


class CurrentSolution(BaseModel):
    """Solución simétrica de las ecuaciones de corriente (x_δ por extremo)"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    x: Dict[str, Fraction]

    @property
    def nondegenerate(self) -> bool:
        return all(value != 0 for value in self.x.values())

    def at(self, end: End) -> Fraction:
        return self.x[end_label(end)]


class InfeasibilityWitness(BaseModel):
    """Extremo cuya coordenada se anula en todo el espacio simétrico"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    end: End
    basis: List[List[Fraction]] = Field(default_factory=list)


class SurvivalCrosscheck(BaseModel):
    """Comparación corriente no degenerada contra supervivencia homológica"""
    feasible: bool
    survival: Dict[str, bool]
    agree: bool

    @property
    def all_survive(self) -> bool:
        return all(self.survival.values())


def cos_sqrt(w: float) -> float:
    """cos(√W) como función entera de W (serie par cerca de 0, cosh para W < 0)"""
    if abs(w) < 1e-4:
        return 1.0 - w / 2.0 + w * w / 24.0 - w ** 3 / 720.0
    if w < 0:
        return math.cosh(math.sqrt(-w))
    return math.cos(math.sqrt(w))


def sinc_sqrt(w: float) -> float:
    """sin(√W)/√W, también entera en W"""
    if abs(w) < 1e-4:
        return 1.0 - w / 6.0 + w * w / 120.0 - w ** 3 / 5040.0
    if w < 0:
        r = math.sqrt(-w)
        return math.sinh(r) / r
    r = math.sqrt(w)
    return math.sin(r) / r


class BknCandidate(BaseModel):
    """
    Candidato (t_v, ω_δ) para las ecuaciones BKN.

    γ por arista es un caché derivado de ω_δ + ω_δ̄; si viene informado
    debe coincidir con el valor derivado.
    """
    t: Dict[str, float]
    omega: Dict[str, float]
    gamma: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _derive_gamma(self) -> "BknCandidate":
        edges = sorted({parse_end_label(label)[0] for label in self.omega})
        for eid in edges:
            labels = (f"{eid}:0", f"{eid}:1")
            if any(label not in self.omega for label in labels):
                raise MalformedCandidate(f"Falta ω en algún extremo de {eid}")
            if any(self.omega[label] < 0 for label in labels):
                raise MalformedCandidate(f"ω negativo en la arista {eid}")
            derived = cos_sqrt(self.omega[labels[0]] + self.omega[labels[1]])
            if eid in self.gamma:
                if abs(self.gamma[eid] - derived) > 1e-9:
                    raise MalformedCandidate(
                        f"γ de {eid} no coincide con ω: {self.gamma[eid]} vs {derived}"
                    )
            else:
                self.gamma[eid] = derived
        return self

    @classmethod
    def from_gamma(cls, t: Dict[str, float], gamma: Dict[str, float]) -> "BknCandidate":
        """Construye ω repartiendo arccos²(γ) a partes iguales entre ambos extremos"""
        omega = {}
        for eid, value in gamma.items():
            if not -1.0 <= value <= 1.0:
                raise MalformedCandidate(f"γ fuera de [−1, 1] en {eid}")
            half = math.acos(value) ** 2 / 2.0
            omega[f"{eid}:0"] = half
            omega[f"{eid}:1"] = half
        return cls(t=t, omega=omega, gamma=dict(gamma))

    def omega_sum(self, eid: str) -> float:
        return self.omega[f"{eid}:0"] + self.omega[f"{eid}:1"]

    @property
    def margin(self) -> float:
        """min(1 − |γ|): positivo si el candidato es no degenerado"""
        if not self.gamma:
            return 1.0
        return min(1.0 - abs(value) for value in self.gamma.values())


class CheckStatus(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"


class VerificationReport(BaseModel):
    """Residuos de un candidato BKN"""
    status: CheckStatus
    vertex_residuals: Dict[str, float]
    cycle_residuals: Dict[str, float]
    symmetric: bool
    margin: float
    tol: float

    @property
    def max_residual(self) -> float:
        values = list(self.vertex_residuals.values()) + list(self.cycle_residuals.values())
        return max(values) if values else 0.0

    @property
    def passed(self) -> bool:
        return self.status == CheckStatus.PASS


class ThetaClasses(BaseModel):
    """Clases θ± por extremo en coordenadas (f, z)"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    theta_plus: Dict[str, Tuple[object, object]]
    theta_minus: Dict[str, Tuple[object, object]]
    gluing: Dict[str, List[List[int]]]


class ThetaReport(BaseModel):
    """Identidades de las clases θ con su error máximo"""
    positive_pairing: bool
    unit_pairing_error: float
    charge_error: float
    ratio_error: float
    independent: bool
    gluing_involution: bool
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.positive_pairing
            and self.independent
            and self.gluing_involution
            and max(self.unit_pairing_error, self.charge_error, self.ratio_error) <= self.tol
        )


class Verdict(str, Enum):
    """Veredicto de curvatura no positiva"""
    NPC_CERTIFIED = "NPC_CERTIFIED"
    NOT_NPC = "NOT_NPC"
    UNKNOWN = "UNKNOWN"


class Provenance(str, Enum):
    CURRENT = "current+perturbation"
    NUMERIC = "numeric-search"
    ALL_POSITIVE = "all-positive-rule"
    ANOSOV = "anosov-rule"


class Decision(BaseModel):
    """Resultado de decide_npc"""
    verdict: Verdict
    provenance: Optional[Provenance] = None
    candidate: Optional[BknCandidate] = None
    verification: Optional[VerificationReport] = None
    reason: str = ""
    diagnostics: Dict[str, object] = Field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return {Verdict.NPC_CERTIFIED: 0, Verdict.NOT_NPC: 1, Verdict.UNKNOWN: 2}[self.verdict]


class DecisionReport(BaseModel):
    """
    Informe autoverificable de decide: el candidato va serializado como
    cadenas decimales y basta para repetir la verificación.
    """
    digest: str
    verdict: Verdict
    provenance: Optional[Provenance] = None
    tol: float = 1e-10
    graph: Optional[ConfigGraph] = None
    matrix: Optional[List[List[int]]] = None
    double_cover: bool = False
    solution: Dict[str, Dict[str, str]] = Field(default_factory=dict)
    residuals: Dict[str, float] = Field(default_factory=dict)
    margin: Optional[float] = None
    current: Dict[str, str] = Field(default_factory=dict)
    reason: str = ""
    diagnostics: Dict[str, Any] = Field(default_factory=dict)
    certificate: Optional[str] = None

    @property
    def exit_code(self) -> int:
        return {Verdict.NPC_CERTIFIED: 0, Verdict.NOT_NPC: 1, Verdict.UNKNOWN: 2}[self.verdict]


class CurveKind(str, Enum):
    """Origen de una curva de corte"""
    EDGE = "edge"
    HANDLE = "handle"
    CHAIN = "chain"


Slot = Tuple[str, int]


class CutCurve(BaseModel):
    """
    Curva de corte con su clase en H₁(F), orientada como borde del pantalón
    del lado positivo (plus); en el lado minus aparece con signo −1.
    """
    id: str
    cls: List[int]
    kind: CurveKind
    vertex: str
    edge: Optional[str] = None
    dual: Optional[List[int]] = None
    plus: Optional[Slot] = None
    minus: Optional[Slot] = None


class Pants(BaseModel):
    """Pantalón con tres bordes (curva, signo); clase de borde = signo·cls"""
    id: str
    vertex: str
    boundaries: List[Tuple[str, int]]


class PantsDecomposition(BaseModel):
    curves: List[CutCurve]
    pants: List[Pants]

    def curve(self, curve_id: str) -> CutCurve:
        return next(c for c in self.curves if c.id == curve_id)

    def pants_by_id(self, pants_id: str) -> Pants:
        return next(p for p in self.pants if p.id == pants_id)

    def pants_at(self, vertex: str) -> List[Pants]:
        return [p for p in self.pants if p.vertex == vertex]

    @property
    def curve_ids(self) -> List[str]:
        return [c.id for c in self.curves]


class XiData(BaseModel):
    """Clase invariante ξ̄, valores de fibra ξ⁰ e índices verticales"""
    xi: List[int]
    fiber: Dict[str, int]
    values: List[int]
    offsets: List[int]
    index: Dict[str, int]
    n: int
    curve_values: Dict[str, int]

    def xi_fiber(self, j: int, vertex: str) -> int:
        """ξ^j([f_v]) = ξ⁰([f_v]) − φ_j"""
        return self.fiber[vertex] - self.values[j - 1]

    def fiber_vector(self, vertex: str) -> List[int]:
        return [self.xi_fiber(j, vertex) for j in range(1, self.n + 3)]


class ArcPattern(BaseModel):
    """
    Patrón de arcos de enlace en un pantalón con triple canónico (m, m', m'').

    Regiones: O, U1..U(p−1), V1..V(q−1). El arco A't va de U(t−1) a Ut y
    A''t de V(t−1) a Vt, con U0 = Up = V0 = Vq = O.
    """
    triple: Tuple[int, int, int]
    regions: List[str]
    arcs: Dict[str, Tuple[str, str]]
    points: List[List[str]]
    seg_regions: List[List[str]]

    @property
    def sign(self) -> int:
        return 1 if self.triple[0] > 0 else -1

    @property
    def octagons(self) -> int:
        return 1

    @property
    def bands(self) -> int:
        return len(self.regions) - 1


class LoopRecord(BaseModel):
    """Lazo dual a una curva fuera del árbol de Υ"""
    curve: str
    shift: int
    w0: int
    realized: int
    dual: List[int]
    twist: int
    crossings: Dict[str, int]


class CutBindSystem(BaseModel):
    decomposition: PantsDecomposition
    patterns: Dict[str, ArcPattern]
    order: Dict[str, List[int]]
    shifts: Dict[str, int]
    tree_curves: List[str]
    loops: List[LoopRecord]
    xi: XiData

    def pattern_slot(self, pants_id: str, slot: int) -> int:
        """Índice canónico (0, 1, 2) del borde `slot`"""
        return self.order[pants_id].index(slot)

    def seg_region(self, side: Slot, seg: int) -> str:
        pants_id, slot = side
        canonical = self.pattern_slot(pants_id, slot)
        regions = self.patterns[pants_id].seg_regions[canonical]
        return regions[seg % len(regions)]

    def point_arc(self, side: Slot, point: int) -> str:
        pants_id, slot = side
        canonical = self.pattern_slot(pants_id, slot)
        points = self.patterns[pants_id].points[canonical]
        return points[point % len(points)]


class IotaKind(str, Enum):
    EMBEDDING = "embedding"
    IMMERSION = "immersion"
    NOT_IMMERSION = "not-immersion"


class TowerStage(BaseModel):
    """Un índice j de la torre: recubrimiento cíclico y núcleo normal"""
    index: int
    l: int
    divisibility: int
    cyclic_degree: int
    completed_hyperplanes: int
    core_order: int
    degree: int


class Certificate(BaseModel):
    """Certificado de especialidad del último piso de la torre"""
    verdict: str
    stages: List[TowerStage]
    degree: int
    f_vector: List[int]
    hyperplanes: int
    crossing_edges: int
    local_isometry: bool
    classification: Dict[str, int] = Field(default_factory=dict)
    witnesses: List[str] = Field(default_factory=list)
    crossing_dot: str = ""
    salvetti_f_vector: List[int] = Field(default_factory=list)


class ConversionDirection(str, Enum):
    GENERAL_TO_AFFINE = "general->affine"
    AFFINE_TO_GENERAL = "affine->general"


class GeneralBkn(BaseModel):
    """Forma general: pesos a_v por vértice y γ_e por arista"""
    a: Dict[str, Any]
    gamma: Dict[str, Any]


class AffineBkn(BaseModel):
    """Forma afín: (u_δ, γ_δ) por extremo"""
    u: Dict[str, Any]
    gamma: Dict[str, Any]


class ValidationIssue(BaseModel):
    """Problema de validación con código estable"""
    code: str
    message: str
    subject: Optional[str] = None


class MultitwistError(Exception):
    """Excepción base del proyecto"""
    pass


class InternalConsistencyError(MultitwistError):
    """Fallo de construcción que no debería ocurrir con datos válidos"""
    pass


class ConfigurationError(MultitwistError):
    """Valor de configuración inválido"""
    pass


class ConfigValidationError(MultitwistError):
    """Errores de validación del grafo de configuración"""

    def __init__(self, issues: List[ValidationIssue]):
        self.issues = issues
        super().__init__("; ".join(f"{i.code}: {i.message}" for i in issues))

    @property
    def codes(self) -> List[str]:
        return [issue.code for issue in self.issues]


class NotUnimodular(MultitwistError):
    pass


class InconsistentCycle(InternalConsistencyError):
    pass


class NotBipartite(MultitwistError):
    pass


class MalformedCandidate(MultitwistError):
    """Candidato mal formado; no hereda de ValueError para atravesar pydantic"""
    pass


class DegenerateInput(MultitwistError):
    pass


class PotentialInconsistency(InternalConsistencyError):
    pass


class NoConvergence(MultitwistError):
    """Newton sin convergencia; conserva el mejor iterado"""

    def __init__(self, message: str, best: Optional[BknCandidate] = None,
                 history: Optional[List[float]] = None):
        super().__init__(message)
        self.best = best
        self.history = history or []


class MarginLoss(MultitwistError):
    pass


class ZeroVertexWeight(MultitwistError):
    pass


class CycleInconsistent(MultitwistError):
    pass


class DegenerateCandidate(MultitwistError):
    pass


class SurvivalPreconditionFailed(MultitwistError):
    """Alguna curva z_e no sobrevive"""
    pass


class TemplateSearchExhausted(MultitwistError):
    pass


class NoNondegenerateXi(MultitwistError):
    pass


class BadTriple(MultitwistError):
    pass


class ShiftSearchFailed(InternalConsistencyError):
    pass


class IndexOutOfRange(MultitwistError):
    pass


class BadAttachment(MultitwistError):
    """Cubo con una cara o arista inexistente"""
    pass


class NotSpecial(MultitwistError):
    pass


class RelatorViolation(MultitwistError):
    pass


class BoundaryMismatch(InternalConsistencyError):
    pass


class CensusMismatch(InternalConsistencyError):
    pass


class NotImmersion(InternalConsistencyError):
    pass


class TowerBlowup(MultitwistError):
    """El tamaño de la torre de recubrimientos supera el presupuesto"""
    pass


class NotSpecialAfterTower(InternalConsistencyError):
    pass


class NonSimplicialLink(MultitwistError):
    """Algún link de vértice no es simplicial"""
    pass


class CoverPostcheckFailed(InternalConsistencyError):
    """Un recubrimiento cíclico no elimina las patologías esperadas"""
    pass


class CubulationRefused(MultitwistError):
    """La cubulación requiere una solución de corriente no degenerada"""
    pass


class ArtifactMissing(MultitwistError):
    """No hay artefactos previos en el directorio de trabajo"""
    pass
