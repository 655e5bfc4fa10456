import itertools
import logging
import math
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np
import sympy
from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt

from .config_graph import (
    anosov_classify, bicoloring, charges, cycle_basis, spanning_tree, to_networkx, tree_path
)
from .current_solver import nondegenerate_point
from .models import (
    AffineBkn, AnosovVerdict, BknCandidate, CheckStatus, ConfigGraph, ConversionDirection, CurrentSolution,
    CycleInconsistent, Decision, DecisionReport, DegenerateCandidate, DegenerateInput, GeneralBkn,
    MalformedCandidate, MarginLoss, NoConvergence, NotBipartite, PotentialInconsistency,
    Provenance, ThetaClasses, ThetaReport, VerificationReport, Verdict, ZeroVertexWeight, bar, cos_sqrt,
    end_label, sinc_sqrt
)


logger = logging.getLogger(__name__)

W_MAX = math.pi ** 2
T_GRID = (0.0, -0.5, 0.5, -1.0, 1.0)
GAMMA_GRID = (0.0, -0.5, 0.5, -0.9, 0.9)
MAX_STARTS = 625


def _check_shape(g: ConfigGraph, cand: BknCandidate) -> None:
    missing_t = [v for v in g.vertex_ids if v not in cand.t]
    missing_gamma = [eid for eid in g.edge_ids if eid not in cand.gamma]
    extra = [eid for eid in cand.gamma if eid not in set(g.edge_ids)]
    if missing_t or missing_gamma or extra:
        raise MalformedCandidate(
            f"Candidato incompatible con el grafo: t sin {missing_t}, γ sin {missing_gamma}, sobran {extra}"
        )


def u_value(g: ConfigGraph, cand: BknCandidate, end) -> float:
    """u_δ = exp(t_v(δ) − t_v(δ̄))"""
    return math.exp(cand.t[g.v(end)] - cand.t[g.v(bar(end))])


def vertex_residuals(
    g: ConfigGraph, cand: BknCandidate, k: Optional[Dict[str, Fraction]] = None
) -> Dict[str, float]:
    """r_v = Σ (1 − u_δ γ_δ)/b_δ = k_v − Σ u_δ γ_δ / b_δ (con signo)"""
    k = charges(g) if k is None else k
    return {
        v: float(k[v]) - sum(u_value(g, cand, end) * cand.gamma[end[0]] / g.b(end) for end in g.ends_at(v))
        for v in g.vertex_ids
    }


def cycle_residuals(g: ConfigGraph, cand: BknCandidate) -> Dict[str, float]:
    """
    Σ log u_δ por ciclo fundamental, evaluado simbólicamente: en la
    parametrización por t la suma telescópica es idénticamente 0.
    """
    symbols = {v: sympy.Symbol(f"t_{v}") for v in g.vertex_ids}
    residuals = {}
    for eid, cycle in cycle_basis(g).cycles.items():
        expr = sympy.simplify(sum(symbols[g.v(end)] - symbols[g.v(bar(end))] for end in cycle))
        if expr == 0:
            residuals[eid] = 0.0
        else:
            residuals[eid] = abs(float(expr.subs({symbols[v]: cand.t[v] for v in g.vertex_ids})))
    return residuals


def verify(g: ConfigGraph, cand: BknCandidate, tol: float = 1e-10) -> VerificationReport:
    """
    Verifica un candidato BKN

    Args:
        g: grafo de configuración
        cand: candidato (t, ω)
        tol: tolerancia de los residuos

    Returns:
        VerificationReport con residuos, simetría y margen
    """
    _check_shape(g, cand)
    vertex = {v: abs(r) for v, r in vertex_residuals(g, cand).items()}
    cycles = cycle_residuals(g, cand)
    symmetric = all(
        abs(u_value(g, cand, (eid, 0)) * u_value(g, cand, (eid, 1)) - 1.0) <= 1e-12
        for eid in g.edge_ids
    )
    margin = cand.margin
    worst = max(list(vertex.values()) + list(cycles.values()) + [0.0])
    passed = worst <= tol and margin > 0 and symmetric
    return VerificationReport(
        status=CheckStatus.PASS if passed else CheckStatus.FAIL,
        vertex_residuals=vertex,
        cycle_residuals=cycles,
        symmetric=symmetric,
        margin=margin,
        tol=tol,
    )


def trivial_candidate(g: ConfigGraph) -> BknCandidate:
    """u ≡ 1, γ ≡ 0 (ω_δ + ω_δ̄ = π²/4)"""
    return BknCandidate.from_gamma(t={v: 0.0 for v in g.vertex_ids}, gamma={eid: 0.0 for eid in g.edge_ids})


def potentials(g: ConfigGraph, x: CurrentSolution) -> Dict[str, Fraction]:
    """l_v con b_δ x_δ = l_v(δ) − l_v(δ̄), l = 0 en el primer vértice"""
    first = g.vertex_ids[0]
    values = {first: Fraction(0)}
    for parent, child in nx.bfs_edges(to_networkx(g), first):
        end = next(end for end in g.ends_at(parent) if g.v(bar(end)) == child)
        values[child] = values[parent] - g.b(end) * x.at(end)
    for end in g.ends:
        if values[g.v(bar(end))] != values[g.v(end)] - g.b(end) * x.at(end):
            raise PotentialInconsistency(f"Potencial inconsistente a través de {end[0]}")
    return values


def from_current(g: ConfigGraph, x: CurrentSolution, s: float) -> BknCandidate:
    """
    Candidato sobre la curva α(s): t_v = l_v s y γ_e = 1/cosh(b_δ x_δ s)

    ω_δ = ½·arccos²(sech y) = ½·arctan²(|sinh y|), estable para y pequeño.
    """
    if not x.nondegenerate:
        raise DegenerateInput("La solución de corriente tiene coordenadas nulas")
    levels = potentials(g, x)
    t = {v: float(levels[v]) * s for v in g.vertex_ids}
    omega: Dict[str, float] = {}
    gamma: Dict[str, float] = {}
    for eid in g.edge_ids:
        y = float(g.b(eid) * x.at((eid, 0))) * s
        half = math.atan(abs(math.sinh(y))) ** 2 / 2.0
        omega[f"{eid}:0"] = half
        omega[f"{eid}:1"] = half
        gamma[eid] = 1.0 / math.cosh(y)
    return BknCandidate(t=t, omega=omega, gamma=gamma)


def residual_series_coefficient(g: ConfigGraph, x: CurrentSolution) -> Dict[str, Fraction]:
    """
    Coeficiente exacto de s³ en Σ u_δγ_δ/b_δ − k_v sobre la curva α(s):
    −Σ (b_δ x_δ)³ / (3 b_δ)
    """
    return {
        v: -sum((Fraction(g.b(end)) * x.at(end)) ** 3 / (3 * g.b(end)) for end in g.ends_at(v))
        for v in g.vertex_ids
    }


def _jacobian(g: ConfigGraph, w: np.ndarray, t: np.ndarray) -> np.ndarray:
    vertices = g.vertex_ids
    edges = g.edge_ids
    v_index = {v: i for i, v in enumerate(vertices)}
    e_index = {e: i for i, e in enumerate(edges)}
    jac = np.zeros((len(vertices), len(edges) + len(vertices)))
    for v in vertices:
        row = v_index[v]
        for end in g.ends_at(v):
            k = e_index[end[0]]
            b = g.b(end)
            u = math.exp(t[v_index[g.v(end)]] - t[v_index[g.v(bar(end))]])
            jac[row, k] += -u * (-0.5 * sinc_sqrt(w[k])) / b
            term = -cos_sqrt(w[k]) * u / b
            jac[row, len(edges) + v_index[g.v(end)]] += term
            jac[row, len(edges) + v_index[g.v(bar(end))]] -= term
    return jac


def _residual_vector(g: ConfigGraph, w: np.ndarray, t: np.ndarray, k: Dict[str, Fraction]) -> np.ndarray:
    return np.array(list(vertex_residuals(g, _candidate(g, w, t), k).values()))


def _candidate(g: ConfigGraph, w: np.ndarray, t: np.ndarray) -> BknCandidate:
    omega = {}
    gamma = {}
    for k, eid in enumerate(g.edge_ids):
        omega[f"{eid}:0"] = float(w[k]) / 2.0
        omega[f"{eid}:1"] = float(w[k]) / 2.0
        gamma[eid] = cos_sqrt(float(w[k]))
    return BknCandidate(t={v: float(t[i]) for i, v in enumerate(g.vertex_ids)}, omega=omega, gamma=gamma)


def newton_refine(
    g: ConfigGraph,
    cand: BknCandidate,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> BknCandidate:
    """
    Gauss-Newton amortiguado sobre W_e = ω_δ + ω_δ̄ y t_v a la vez

    Cada paso es el de norma mínima (numpy.linalg.lstsq); el retroceso mantiene
    W en (0, π²) y exige que baje la norma del residuo. Las ecuaciones de
    ciclo siguen exactas porque u se deriva de t. Con t fijo el sistema en W
    suele ser de rango deficiente y no converge (ya en el ciclo de longitud 4),
    por eso t siempre se mueve.

    Raises:
        MarginLoss: el candidato de entrada ya es degenerado
        NoConvergence: tras max_iter iteraciones (conserva el mejor iterado)
    """
    _check_shape(g, cand)
    if cand.margin <= 0:
        raise MarginLoss(f"Margen de no degeneración {cand.margin:.3e} ≤ 0")

    w = np.array([cand.omega_sum(eid) for eid in g.edge_ids], dtype=float)
    t = np.array([cand.t[v] for v in g.vertex_ids], dtype=float)
    k = charges(g)
    r = _residual_vector(g, w, t, k)
    if np.max(np.abs(r), initial=0.0) <= tol:
        return cand

    history = [float(np.max(np.abs(r)))]
    for iteration in range(max_iter):
        jac = _jacobian(g, w, t)
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        d_w = step[:len(w)]
        d_t = step[len(w):]

        alpha = 1.0
        accepted = False
        for _ in range(40):
            w_new = w + alpha * d_w
            if np.all(w_new > 0) and np.all(w_new < W_MAX):
                t_new = t + alpha * d_t
                r_new = _residual_vector(g, w_new, t_new, k)
                if np.linalg.norm(r_new) < np.linalg.norm(r):
                    accepted = True
                    break
            alpha /= 2.0
        if not accepted:
            break
        w, t, r = w_new, t_new, r_new
        history.append(float(np.max(np.abs(r))))
        logger.debug(f"Newton iteración {iteration + 1}: residuo {history[-1]:.3e}, paso {alpha}")
        if history[-1] <= tol:
            logger.info(f"Newton convergió en {iteration + 1} iteraciones")
            return _candidate(g, w, t)

    best = _candidate(g, w, t)
    raise NoConvergence(
        f"Newton sin convergencia: residuo {history[-1]:.3e} > {tol:.1e}", best=best, history=history
    )


def _current_route(g: ConfigGraph, x: CurrentSolution, tol: float, max_iter: int) -> BknCandidate:
    s0 = 1.0 / (4.0 * max(abs(float(g.b(end) * x.at(end))) for end in g.ends))
    for attempt in Retrying(
        stop=stop_after_attempt(12),
        retry=retry_if_exception_type((NoConvergence, MarginLoss)),
        reraise=True,
    ):
        with attempt:
            s = s0 / 2 ** (attempt.retry_state.attempt_number - 1)
            logger.debug(f"Perturbación con s = {s}")
            cand = from_current(g, x, s)
            return newton_refine(g, cand, tol=tol, max_iter=max_iter)


def grid_starts(g: ConfigGraph, max_starts: int = MAX_STARTS) -> List[Tuple[Dict[str, float], float]]:
    """
    Arranques (t, γ0) de la búsqueda numérica

    t recorre T_GRID en cada vértice salvo el primero (fijo en 0, solo importan
    las diferencias) y γ0 recorre GAMMA_GRID. Si el producto supera max_starts
    se recorta la rejilla de t a sus valores más pequeños. Orden: t más
    cercano a 0 primero.
    """
    free = len(g.vertex_ids) - 1
    levels = len(T_GRID)
    while levels > 1 and levels ** free * len(GAMMA_GRID) > max_starts:
        levels -= 1
    lattice = sorted(
        itertools.product(T_GRID[:levels], repeat=free),
        key=lambda point: (sum(abs(x) for x in point), max((abs(x) for x in point), default=0.0)),
    )
    first = g.vertex_ids[0]
    starts = []
    for point in lattice:
        t = {first: 0.0, **dict(zip(g.vertex_ids[1:], point))}
        starts.extend((t, gamma0) for gamma0 in GAMMA_GRID)
    return starts[:max_starts]


def _describe_start(t: Dict[str, float], gamma0: float) -> str:
    return f"t=({', '.join(f'{x:g}' for x in t.values())}) γ0={gamma0:g}"


def _numeric_route(
    g: ConfigGraph, tol: float, max_iter: int, max_starts: int = MAX_STARTS
) -> Tuple[Optional[BknCandidate], List[str]]:
    attempts = []
    starts = grid_starts(g, max_starts)
    logger.info(f"Búsqueda numérica con {len(starts)} arranques")
    for t, gamma0 in starts:
        label = _describe_start(t, gamma0)
        start = BknCandidate.from_gamma(t=dict(t), gamma={eid: gamma0 for eid in g.edge_ids})
        try:
            cand = newton_refine(g, start, tol=tol, max_iter=max_iter)
        except (NoConvergence, MarginLoss) as e:
            attempts.append(f"{label}: {e}")
            continue
        if verify(g, cand, tol).passed:
            attempts.append(f"{label}: certificado")
            logger.debug(f"Arranque {label} certificado")
            return cand, attempts
        attempts.append(f"{label}: candidato sin verificar")
    return None, attempts


def decide_npc(
    g: ConfigGraph, tol: float = 1e-10, max_iter: int = 50, max_starts: int = MAX_STARTS
) -> Decision:
    """
    Decide si el toro de aplicación del multitwist es de curvatura no positiva

    Orden: regla de signos, ruta de corriente + perturbación, búsqueda
    numérica sobre la rejilla de grid_starts; si nada funciona, UNKNOWN con
    cada arranque probado en diagnostics["numeric_attempts"].
    """
    if bicoloring(g) is None:
        raise NotBipartite("decide_npc requiere un grafo bipartito")

    signs = {1 if g.b(eid) > 0 else -1 for eid in g.edge_ids}
    if len(signs) == 1:
        logger.info("Todas las multiplicidades tienen el mismo signo: no NPC")
        return Decision(
            verdict=Verdict.NOT_NPC,
            provenance=Provenance.ALL_POSITIVE,
            reason="todos los b_e tienen el mismo signo estricto",
        )

    diagnostics: Dict[str, object] = {}
    point = nondegenerate_point(g)
    if isinstance(point, CurrentSolution):
        try:
            cand = _current_route(g, point, tol, max_iter)
            report = verify(g, cand, tol)
            if report.passed:
                logger.info("NPC certificado por la ruta de corriente")
                return Decision(
                    verdict=Verdict.NPC_CERTIFIED, provenance=Provenance.CURRENT,
                    candidate=cand, verification=report,
                )
        except (NoConvergence, MarginLoss, RetryError) as e:
            diagnostics["current_route"] = str(e)
            logger.warning(f"La ruta de corriente falló: {e}")
    else:
        diagnostics["current_witness"] = end_label(point.end)

    cand, attempts = _numeric_route(g, tol, max_iter, max_starts)
    diagnostics["numeric_attempts"] = attempts
    if cand is not None:
        logger.info("NPC certificado por búsqueda numérica")
        return Decision(
            verdict=Verdict.NPC_CERTIFIED, provenance=Provenance.NUMERIC,
            candidate=cand, verification=verify(g, cand, tol), diagnostics=diagnostics,
        )

    logger.info("Sin certificado: veredicto UNKNOWN")
    return Decision(verdict=Verdict.UNKNOWN, reason="sin solución BKN encontrada", diagnostics=diagnostics)


def recheck(report: DecisionReport) -> bool:
    """
    Repite la verificación de un informe serializado

    NPC: el candidato (t, ω) del informe vuelve a pasar verify con la
    tolerancia declarada. NOT_NPC: la regla citada sigue aplicándose.
    """
    if report.provenance == Provenance.ANOSOV:
        return (
            report.verdict == Verdict.NOT_NPC and report.matrix is not None
            and anosov_classify(report.matrix) == AnosovVerdict.ANOSOV
        )
    if report.graph is None:
        return report.verdict == Verdict.UNKNOWN
    g = report.graph
    if report.provenance == Provenance.ALL_POSITIVE:
        signs = {1 if g.b(eid) > 0 else -1 for eid in g.edge_ids}
        return report.verdict == Verdict.NOT_NPC and len(signs) == 1
    if report.verdict != Verdict.NPC_CERTIFIED:
        return True
    try:
        cand = BknCandidate(
            t={v: float(x) for v, x in report.solution["t"].items()},
            omega={label: float(x) for label, x in report.solution["omega"].items()},
        )
        result = verify(g, cand, report.tol)
    except (KeyError, ValueError, MalformedCandidate, DegenerateCandidate) as e:
        logger.error(f"Informe no reverificable: {e}")
        return False
    logger.info(f"Reverificación: residuo máximo {result.max_residual:.3e}")
    return result.passed


def _sign(value: int) -> int:
    return 1 if value > 0 else -1


def affine_general_convert(g: ConfigGraph, direction: ConversionDirection, data):
    """
    Conversión entre la forma general (a_v, γ_e) y la afín (u_δ, γ_δ)

    Trabaja con cualquier aritmética (Fraction para conversiones exactas).

    Args:
        g: grafo de configuración
        direction: sentido de la conversión
        data: GeneralBkn o AffineBkn

    Returns:
        AffineBkn o GeneralBkn
    """
    if direction == ConversionDirection.GENERAL_TO_AFFINE:
        zero = [v for v, a in data.a.items() if a == 0]
        if zero:
            raise ZeroVertexWeight(f"a_v = 0 en {zero}")
        u = {}
        gamma = {}
        for end in g.ends:
            u[end_label(end)] = data.a[g.v(bar(end))] / data.a[g.v(end)]
            gamma[end_label(end)] = _sign(g.b(end)) * data.gamma[end[0]]
        return AffineBkn(u=u, gamma=gamma)

    tree = spanning_tree(g)
    first = g.vertex_ids[0]
    one = data.u[end_label(g.ends[0])] ** 0
    weights = {first: one}
    for v in g.vertex_ids[1:]:
        weight = one
        for end in tree_path(g, tree, first, v):
            weight = weight * data.u[end_label(end)]
        weights[v] = weight

    for end in g.ends:
        expected = weights[g.v(bar(end))] / weights[g.v(end)]
        actual = data.u[end_label(end)]
        if abs(actual - expected) > 1e-12 * max(1, abs(expected)):
            raise CycleInconsistent(f"u incompatible con un potencial en {end[0]}")
        if abs(actual * data.u[end_label(bar(end))] - 1) > 1e-12:
            raise CycleInconsistent(f"u_δ·u_δ̄ ≠ 1 en {end[0]}")

    gamma = {}
    for eid in g.edge_ids:
        g0, g1 = data.gamma[f"{eid}:0"], data.gamma[f"{eid}:1"]
        if abs(g0 - g1) > 1e-12:
            raise CycleInconsistent(f"γ_δ ≠ γ_δ̄ en {eid}")
        gamma[eid] = _sign(g.b(eid)) * g0
    return GeneralBkn(a=weights, gamma=gamma)


def theta_for_end(b, u, gamma):
    """
    θ± en coordenadas (f, z) de un extremo: (1 ± γ)/(2b) · (1 ± u, b)

    Acepta Fraction o float.
    """
    plus_coef = (1 + gamma) / (2 * b)
    minus_coef = (1 - gamma) / (2 * b)
    theta_plus = (plus_coef * (1 + u), plus_coef * b)
    theta_minus = (minus_coef * (1 - u), minus_coef * b)
    return theta_plus, theta_minus


def pairing(x, y):
    """I(x, y) = x_f y_z − x_z y_f, con I(f, z) = 1"""
    return x[0] * y[1] - x[1] * y[0]


def gluing_matrix(b: int) -> List[List[int]]:
    """Φ_δ = [[1, 0], [b, −1]] sobre coordenadas (f, z)"""
    return [[1, 0], [b, -1]]


def theta_classes(g: ConfigGraph, cand: BknCandidate, tol: float = 1e-10) -> Tuple[ThetaClasses, ThetaReport]:
    """
    Clases θ± por extremo y comprobación de sus identidades

    Raises:
        DegenerateCandidate: si el candidato no verifica
    """
    if not verify(g, cand, tol).passed:
        raise DegenerateCandidate("theta_classes requiere un candidato verificado")

    plus, minus, gluing = {}, {}, {}
    positive = True
    independent = True
    involution = True
    unit_error = ratio_error = 0.0
    for end in g.ends:
        b = g.b(end)
        u = u_value(g, cand, end)
        gamma = cand.gamma[end[0]]
        theta_plus, theta_minus = theta_for_end(b, u, gamma)
        label = end_label(end)
        plus[label], minus[label] = theta_plus, theta_minus
        gluing[label] = gluing_matrix(b)

        f = (1, 0)
        image = (1, b)
        positive &= pairing(f, theta_plus) > 0 and pairing(f, theta_minus) > 0
        theta = (theta_plus[0] + theta_minus[0], theta_plus[1] + theta_minus[1])
        unit_error = max(unit_error, abs(pairing(f, theta) - 1))
        for part in (theta_plus, theta_minus):
            ratio = abs(pairing(image, part) / pairing(f, part))
            ratio_error = max(ratio_error, abs(ratio - u))
        independent &= abs(pairing(theta_plus, theta_minus)) > 0
        phi = np.array(gluing_matrix(b))
        involution &= bool(np.array_equal(phi @ phi, np.eye(2, dtype=int)))

    k = charges(g)
    charge_error = 0.0
    for v in g.vertex_ids:
        total = 0.0
        for end in g.ends_at(v):
            theta = [a + c for a, c in zip(plus[end_label(end)], minus[end_label(end)])]
            b = g.b(end)
            total += pairing(theta, (1 / b, 1))
        charge_error = max(charge_error, abs(total - float(k[v])))

    report = ThetaReport(
        positive_pairing=positive,
        unit_pairing_error=unit_error,
        charge_error=charge_error,
        ratio_error=ratio_error,
        independent=independent,
        gluing_involution=involution,
        tol=tol,
    )
    logger.info(f"Identidades θ: {'OK' if report.passed else 'FALLO'}")
    return ThetaClasses(theta_plus=plus, theta_minus=minus, gluing=gluing), report
