"""
Grafos de configuración compartidos por los tests
"""

import json

import pytest

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from src.models import ConfigGraph, Edge, Vertex


def make_graph(vertices, edges) -> ConfigGraph:
    """vertices: {id: χ}; edges: [(id, x, y, b)]"""
    return ConfigGraph(
        vertices=[Vertex(id=v, chi=chi) for v, chi in vertices.items()],
        edges=[Edge(id=eid, ends=(x, y), b=b) for eid, x, y, b in edges],
    )


def graph_json(g: ConfigGraph) -> str:
    return json.dumps({
        "vertices": [{"id": v.id, "chi": v.chi} for v in g.vertices],
        "edges": [{"id": e.id, "ends": list(e.ends), "b": e.b} for e in g.edges],
    })


@pytest.fixture
def pants_pair():
    """Dos pantalones pegados por tres curvas, b = (2, −3, −6)"""
    return make_graph(
        {"u": -1, "w": -1},
        [("e1", "u", "w", 2), ("e2", "u", "w", -3), ("e3", "u", "w", -6)],
    )


@pytest.fixture
def all_positive():
    return make_graph(
        {"u": -1, "w": -1},
        [("e1", "u", "w", 1), ("e2", "u", "w", 1), ("e3", "u", "w", 1)],
    )


@pytest.fixture
def mixed_pair():
    """Corriente infactible con signos mezclados, b = (1, 1, −1)"""
    return make_graph(
        {"u": -1, "w": -1},
        [("e1", "u", "w", 1), ("e2", "u", "w", 1), ("e3", "u", "w", -1)],
    )


@pytest.fixture
def four_cycle():
    """Ciclo de longitud 4 con b = (1, 2, −1, −2) y vértices de género 1"""
    return make_graph(
        {"v1": -2, "v2": -2, "v3": -2, "v4": -2},
        [("e1", "v1", "v2", 1), ("e2", "v2", "v3", 2), ("e3", "v3", "v4", -1), ("e4", "v4", "v1", -2)],
    )


@pytest.fixture
def triangle():
    return make_graph(
        {"a": -2, "b": -2, "c": -2},
        [("e1", "a", "b", 1), ("e2", "b", "c", 1), ("e3", "c", "a", 1)],
    )


@pytest.fixture
def separating_edge():
    """Una arista entre dos vértices de género 1: la curva separa"""
    return make_graph({"u": -1, "w": -1}, [("e1", "u", "w", 1)])


@pytest.fixture
def pants_pair_file(tmp_path, pants_pair):
    path = tmp_path / "pants_pair.json"
    path.write_text(graph_json(pants_pair), encoding="utf-8")
    return path


@pytest.fixture
def all_positive_file(tmp_path, all_positive):
    path = tmp_path / "all_positive.json"
    path.write_text(graph_json(all_positive), encoding="utf-8")
    return path


@pytest.fixture
def anosov_file(tmp_path):
    path = tmp_path / "anosov.json"
    path.write_text(json.dumps({"matrix": [[2, 1], [1, 1]]}), encoding="utf-8")
    return path
