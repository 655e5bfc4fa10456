"""
Modelo simpléctico entero de H₁(F) y acción del multitwist
"""

import logging
from typing import Dict, List, Sequence

import networkx as nx
from sympy import Matrix, eye

from .config_graph import bicoloring, spanning_tree, to_networkx
from .linalg import dot, in_row_space, nullspace_basis
from .models import ConfigGraph, End, InconsistentCycle, SurfaceModel, bar, end_label


logger = logging.getLogger(__name__)


def boundary_signs(g: ConfigGraph) -> Dict[str, int]:
    """
    ε_δ: +1 en el extremo del vértice positivo de la bicoloración; sin
    bicoloración, +1 en el extremo del vértice lexicográficamente menor.
    """
    colors = bicoloring(g)
    signs = {}
    for eid in g.edge_ids:
        x, y = g.edge(eid).ends
        if colors is not None:
            positive_side = 0 if colors[x] == 1 else 1
        else:
            positive_side = 0 if x < y else 1
        signs[end_label((eid, positive_side))] = 1
        signs[end_label((eid, 1 - positive_side))] = -1
    return signs


def build_model(g: ConfigGraph) -> SurfaceModel:
    """
    Construye la base simpléctica y las clases [z_e]

    Las aristas fuera del árbol son elementos z_e de la base. Para una arista
    del árbol, S es la componente de T − e que contiene a v(δ) con ε_δ = +1, y
    [z_e] = −Σ ε_δ'[z_e'] sobre las aristas e' que cruzan el corte con δ' en S.
    """
    eps = boundary_signs(g)
    tree = spanning_tree(g)
    nontree = [eid for eid in g.edge_ids if eid not in set(tree)]

    labels: List[str] = []
    handles: Dict[str, List] = {}
    for v in g.vertex_ids:
        handles[v] = []
        for i in range(g.genus(v)):
            labels.extend([f"a{i + 1}[{v}]", f"b{i + 1}[{v}]"])
            handles[v].append((len(labels) - 2, len(labels) - 1))
    for eid in nontree:
        labels.extend([f"z[{eid}]", f"c[{eid}]"])

    dim = len(labels)
    intersection = [[0] * dim for _ in range(dim)]
    for k in range(0, dim, 2):
        intersection[k][k + 1] = 1
        intersection[k + 1][k] = -1

    classes: Dict[str, List[int]] = {}
    for eid in nontree:
        vec = [0] * dim
        vec[labels.index(f"z[{eid}]")] = 1
        classes[eid] = vec

    forest = nx.Graph()
    forest.add_nodes_from(g.vertex_ids)
    forest.add_edges_from(g.edge(eid).ends for eid in tree)
    for eid in tree:
        side = 0 if eps[end_label((eid, 0))] == 1 else 1
        x, y = g.edge(eid).ends
        forest.remove_edge(x, y)
        component = nx.node_connected_component(forest, g.v((eid, side)))
        forest.add_edge(x, y)

        vec = [0] * dim
        for other in nontree:
            a, b = g.edge(other).ends
            if (a in component) == (b in component):
                continue
            inside = 0 if a in component else 1
            sign = eps[end_label((other, inside))]
            vec[labels.index(f"z[{other}]")] -= sign
        classes[eid] = vec

    logger.debug(f"Modelo de superficie: género {dim // 2}, {len(tree)} aristas en el árbol")
    return SurfaceModel(
        labels=labels,
        intersection=intersection,
        curve_classes=classes,
        eps=eps,
        tree_edges=tree,
        nontree_edges=nontree,
        handles=handles,
    )


def boundary_class(m: SurfaceModel, end: End) -> List[int]:
    """ε_δ [z_e(δ)]: la curva orientada como borde de F_v(δ)"""
    sign = m.eps[end_label(end)]
    return [sign * x for x in m.curve_classes[end[0]]]


def twist_matrix(m: SurfaceModel, eid: str, power: int = 1) -> Matrix:
    """T_e^power = Id + power·z zᵀ I (z zᵀ I es nilpotente)"""
    z = Matrix(m.curve_classes[eid])
    return eye(m.dim) + power * z * z.T * Matrix(m.intersection)


def sigma_star(m: SurfaceModel, g: ConfigGraph) -> Matrix:
    """σ_* = Π_e T_e^{b_e}"""
    sigma = eye(m.dim)
    for eid in g.edge_ids:
        sigma = sigma * twist_matrix(m, eid, g.b(eid))
    return sigma


def _image_rows(m: SurfaceModel, g: ConfigGraph) -> List[List[int]]:
    """Columnas de σ_* − Id como filas"""
    delta = sigma_star(m, g) - eye(m.dim)
    return [[int(delta[i, j]) for i in range(m.dim)] for j in range(m.dim)]


def survives(m: SurfaceModel, g: ConfigGraph, cls: Sequence[int]) -> bool:
    """True si la clase no está en Im(σ_* − Id) sobre Q"""
    if all(x == 0 for x in cls):
        return False
    return not in_row_space(_image_rows(m, g), cls)


def invariant_functionals(m: SurfaceModel, g: ConfigGraph) -> List[List[int]]:
    """Base entera de {ξ̄ : ξ̄ σ_* = ξ̄}"""
    delta = sigma_star(m, g) - eye(m.dim)
    rows = [[int(delta[i, j]) for i in range(m.dim)] for j in range(m.dim)]
    return nullspace_basis(rows, m.dim)


def edge_values(m: SurfaceModel, xi: Sequence[int]) -> Dict[str, int]:
    """m_e = ξ̄([z_e])"""
    return {eid: dot(xi, cls) for eid, cls in m.curve_classes.items()}


def fiber_values(m: SurfaceModel, g: ConfigGraph, xi: Sequence[int]) -> Dict[str, int]:
    """
    ξ⁰([f_v]) con valor 0 en el primer vértice

    Propaga φ(v(δ̄)) − φ(v(δ)) = b_δ · ξ̄(ε_δ[z_e]) y verifica cada ciclo.
    """
    def jump(end: End) -> int:
        return g.b(end) * dot(xi, boundary_class(m, end))

    first = g.vertex_ids[0]
    values = {first: 0}
    for parent, child in nx.bfs_edges(to_networkx(g), first):
        end = next(end for end in g.ends_at(parent) if g.v(bar(end)) == child)
        values[child] = values[parent] + jump(end)
    for end in g.ends:
        expected = values[g.v(end)] + jump(end)
        if values[g.v(bar(end))] != expected:
            raise InconsistentCycle(
                f"Valores de fibra inconsistentes en {end[0]}: {values[g.v(bar(end))]} ≠ {expected}"
            )
    return values


def check_model(m: SurfaceModel, g: ConfigGraph) -> Dict[str, bool]:
    """Invariantes del modelo y preservación de la forma por σ_*"""
    form = Matrix(m.intersection)
    sigma = sigma_star(m, g)
    classes = m.curve_classes
    vertex_relations = all(
        all(x == 0 for x in [sum(col) for col in zip(*[boundary_class(m, end) for end in g.ends_at(v)])])
        for v in g.vertex_ids
    )
    return {
        "skew_symmetric": form.T == -form,
        "unimodular": m.dim == 0 or abs(form.det()) == 1,
        "isotropic": all(m.form(classes[a], classes[b]) == 0 for a in classes for b in classes),
        "vertex_relations": vertex_relations,
        "sigma_symplectic": sigma.T * form * sigma == form,
    }
