"""
Álgebra lineal exacta sobre Q y Z (sympy)
"""

import logging
from fractions import Fraction
from functools import reduce
from math import gcd
from typing import List, Optional, Sequence, Tuple

from sympy import Matrix, Rational, ZZ, lcm as sym_lcm
from sympy.matrices.normalforms import smith_normal_form


logger = logging.getLogger(__name__)


def to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    rational = Rational(value)
    return Fraction(int(rational.p), int(rational.q))


def to_matrix(rows: Sequence[Sequence], ncols: Optional[int] = None) -> Matrix:
    """Matriz sympy exacta a partir de enteros o Fractions"""
    if not rows:
        return Matrix.zeros(0, ncols or 0)
    return Matrix([[Rational(x.numerator, x.denominator) if isinstance(x, Fraction) else x
                    for x in row] for row in rows])


def primitive(vector: Sequence) -> List[int]:
    """Múltiplo entero primitivo de un vector racional (mismo sentido)"""
    fracs = [to_fraction(x) for x in vector]
    denominator = reduce(lambda a, b: a * b // gcd(a, b), (f.denominator for f in fracs), 1)
    ints = [int(f * denominator) for f in fracs]
    divisor = reduce(gcd, (abs(x) for x in ints), 0)
    if divisor == 0:
        return ints
    return [x // divisor for x in ints]


def normalize_sign(vector: List[int]) -> List[int]:
    """Primera entrada no nula positiva"""
    for x in vector:
        if x != 0:
            return vector if x > 0 else [-y for y in vector]
    return vector


def nullspace_basis(rows: Sequence[Sequence], ncols: int) -> List[List[int]]:
    """Base entera primitiva del núcleo derecho {x : M x = 0}"""
    if not rows:
        return [[1 if i == j else 0 for i in range(ncols)] for j in range(ncols)]
    matrix = to_matrix(rows)
    return [normalize_sign(primitive(list(v))) for v in matrix.nullspace()]


def rank(rows: Sequence[Sequence]) -> int:
    if not rows:
        return 0
    return to_matrix(rows).rank()


def in_row_space(rows: Sequence[Sequence], vector: Sequence) -> bool:
    """¿Pertenece el vector al subespacio racional generado por las filas?"""
    if all(x == 0 for x in vector):
        return True
    if not rows:
        return False
    return rank(list(rows) + [list(vector)]) == rank(rows)


def dot(u: Sequence, v: Sequence):
    return sum(a * b for a, b in zip(u, v))


def generic_combination(
    basis: Sequence[Sequence], functionals: Sequence[Sequence]
) -> Tuple[List[Fraction], Optional[int]]:
    """
    Punto w del espacio generado por `basis` donde no se anula ningún
    funcional que no se anule en todo el espacio.

    w := w + λ·v_i con el menor entero λ ≥ 1 que no cancele un funcional ya
    no nulo. Devuelve además el índice del primer funcional idénticamente
    nulo sobre el espacio (None si no hay).

    Args:
        basis: vectores generadores
        functionals: funcionales lineales como vectores fila

    Returns:
        (w, índice testigo o None)
    """
    size = len(functionals[0]) if functionals else (len(basis[0]) if basis else 0)
    w = [Fraction(0)] * size
    for vector in basis:
        vector = [to_fraction(x) for x in vector]
        forbidden = set()
        for functional in functionals:
            current = dot(functional, w)
            step = dot(functional, vector)
            if current != 0 and step != 0:
                forbidden.add(Fraction(-current, 1) / step)
        lam = 1
        while Fraction(lam) in forbidden:
            lam += 1
        logger.debug(f"Combinación genérica: λ = {lam}")
        w = [a + lam * b for a, b in zip(w, vector)]

    witness = None
    for index, functional in enumerate(functionals):
        if all(dot(functional, vector) == 0 for vector in basis):
            witness = index
            break
    return w, witness


def gcd_all(values) -> int:
    return reduce(gcd, (abs(int(v)) for v in values), 0)


def lcm_all(values) -> int:
    return int(reduce(lambda a, b: sym_lcm(a, b), [int(v) for v in values if v], 1))


def lattice_invariants(generators: Sequence[Sequence[int]], dim: int) -> List[int]:
    """
    Factores invariantes de Z^dim / L, L generado por las filas dadas.

    Devuelve una lista de longitud dim: d_i > 1 para factores cíclicos
    finitos, 1 para factores triviales y 0 para factores libres.
    """
    rows = [list(row) for row in generators if any(row)]
    if not rows:
        return [0] * dim
    form = smith_normal_form(Matrix(rows), domain=ZZ)
    diagonal = [abs(int(form[i, i])) for i in range(min(form.shape))]
    diagonal += [0] * (dim - len(diagonal))
    return diagonal[:dim]


def quotient_order(generators: Sequence[Sequence[int]], dim: int) -> Optional[int]:
    """Orden de Z^dim / L, o None si es infinito"""
    invariants = lattice_invariants(generators, dim)
    if any(d == 0 for d in invariants):
        return None
    order = 1
    for d in invariants:
        order *= d
    return order
