"""Tiny whitelisted arithmetic grammar for density and metric entries.

Accepts +, -, *, /, unary minus, cos, sin, numeric literals and the names
x, y, pi, e.  Everything else is rejected at parse time, so strings coming
from the command line never reach eval with interesting power.
"""

import ast
import math

import numpy as np

_FUNCS = {"cos": np.cos, "sin": np.sin}
_CONSTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
}


class ExpressionError(ValueError):
    pass


def _compile(node, variables):
    if isinstance(node, ast.Expression):
        return _compile(node.body, variables)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            val = float(node.value)
            return lambda env: val
        raise ExpressionError("only numeric literals are allowed")
    if isinstance(node, ast.Name):
        if node.id in variables:
            name = node.id
            return lambda env: env[name]
        if node.id in _CONSTS:
            val = _CONSTS[node.id]
            return lambda env: val
        raise ExpressionError("unknown name %r" % node.id)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left = _compile(node.left, variables)
        right = _compile(node.right, variables)
        return lambda env: op(left(env), right(env))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile(node.operand, variables)
        if isinstance(node.op, ast.USub):
            return lambda env: -inner(env)
        return inner
    if isinstance(node, ast.Call):
        if (isinstance(node.func, ast.Name) and node.func.id in _FUNCS
                and not node.keywords and len(node.args) == 1):
            fn = _FUNCS[node.func.id]
            arg = _compile(node.args[0], variables)
            return lambda env: fn(arg(env))
        raise ExpressionError("only cos(...) and sin(...) calls are allowed")
    raise ExpressionError("disallowed syntax: %s" % type(node).__name__)


def parse_expression(source, variables=("x", "y")):
    """Compile a restricted arithmetic expression to a vectorized callable.

    The result takes keyword arguments named by `variables` and broadcasts
    over numpy arrays.
    """
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError("cannot parse %r: %s" % (source, exc)) from exc
    fn = _compile(tree, frozenset(variables))
    names = tuple(variables)

    def evaluate(**kwargs):
        missing = [n for n in names if n not in kwargs]
        if missing:
            raise ExpressionError("missing variables: %s" % ", ".join(missing))
        return fn(kwargs)

    evaluate.source = source
    return evaluate
