# -*- coding: utf-8 -*-
"""
Compilation des expressions de coefficients personnalisées

Grammaire: + - * /, sin, cos, exp, abs, pi, constantes numériques,
variables t, x1, x2, y1, y2. L'expression est analysée par sympy,
contrôlée nœud par nœud puis vectorisée par lambdify.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from core.errors import ExpressionError

KERNEL_VARIABLES = ("t", "x1", "x2", "y1", "y2")
POTENTIAL_VARIABLES = ("t", "x1", "x2")
DATUM_VARIABLES = ("x1", "x2")

_FUNCTIONS = {"sin": sp.sin, "cos": sp.cos, "exp": sp.exp, "abs": sp.Abs}
_ALLOWED_FUNCS = (sp.sin, sp.cos, sp.exp, sp.Abs)


def _check_node(node, symbols):
    if node.is_Number or node is sp.pi or node in (sp.E,):
        return
    if node.is_Symbol:
        if node not in symbols:
            raise ExpressionError(f"Variable inconnue: {node}")
        return
    if isinstance(node, (sp.Add, sp.Mul)):
        pass
    elif isinstance(node, sp.Pow):
        # puissances entières issues de x*x ou de la division
        if not node.exp.is_Integer:
            raise ExpressionError(f"Puissance non autorisée: {node}")
    elif isinstance(node, _ALLOWED_FUNCS):
        pass
    else:
        raise ExpressionError(f"Construction non autorisée: {type(node).__name__}")
    for arg in node.args:
        _check_node(arg, symbols)


@dataclass(frozen=True, eq=False)
class CompiledExpression:
    """Expression validée et sa version vectorisée"""
    source: str
    expr: sp.Expr
    variables: Tuple[str, ...]
    func: Callable

    def __call__(self, **values):
        arrays = [np.asarray(values.get(name, 0.0), dtype=float) for name in self.variables]
        shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
        result = np.asarray(self.func(*arrays), dtype=float)
        return np.array(np.broadcast_to(result, shape), dtype=float)

    def depends_on(self, name):
        return sp.Symbol(name) in self.expr.free_symbols

    @property
    def time_dependent(self):
        return self.depends_on("t")

    @property
    def spatially_constant(self):
        return not any(self.depends_on(v) for v in self.variables if v != "t")

    def time_factorization(self) -> Optional[Tuple["CompiledExpression", "CompiledExpression"]]:
        """Décomposition f(t)·g(x, y) si elle existe (sinon None)"""
        t = sp.Symbol("t")
        spatial, temporal = self.expr.as_independent(t, as_Add=False)
        if temporal.free_symbols - {t}:
            return None
        return (_build(str(temporal), temporal, self.variables),
                _build(str(spatial), spatial, self.variables))


def _build(source, expr, variables):
    symbols = [sp.Symbol(v) for v in variables]
    return CompiledExpression(source, expr, tuple(variables), sp.lambdify(symbols, expr, "numpy"))


def compile_expression(source: str, variables=KERNEL_VARIABLES) -> CompiledExpression:
    """Analyse et valide une expression textuelle"""
    if not isinstance(source, str) or not source.strip():
        raise ExpressionError("Expression vide")
    if "**" in source or "^" in source:
        raise ExpressionError("Les puissances ne font pas partie de la grammaire")

    symbols = {v: sp.Symbol(v) for v in variables}
    local_dict = {**symbols, **_FUNCTIONS, "pi": sp.pi}
    try:
        expr = parse_expr(source, local_dict=local_dict, global_dict={"Integer": sp.Integer,
                                                                      "Float": sp.Float,
                                                                      "Rational": sp.Rational,
                                                                      "Symbol": sp.Symbol},
                          transformations=standard_transformations, evaluate=True)
    except Exception as e:
        raise ExpressionError(f"Expression illisible '{source}': {e}")

    if not isinstance(expr, sp.Expr):
        raise ExpressionError(f"'{source}' n'est pas une expression numérique")
    _check_node(expr, set(symbols.values()))
    return _build(source, expr, variables)
