"""
expressions.py

The small expression language of structural equations: a tokenizer, a
recursive-descent parser with static type checks, a pure evaluator, a
canonical pretty-printer and a sympy view for rendering.
"""
import math
import re
import numpy as np
import sympy
from dataclasses import dataclass
from sympy.printing.latex import latex
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union
from . import activations
from .errors import (ExpressionSyntaxError, TypeMismatchError,
                     UndeclaredVariableError, UnknownFunctionError)


Value = Union[bool, float, str]

BOOL = "bool"
REAL = "real"
LABEL = "label"
ANY = "any"

# name: (minimum arity, maximum arity); None means variadic
FUNCTIONS: Dict[str, Tuple[int, Optional[int]]] = {
    "relu": (1, 1),
    "logistic": (1, 1),
    "tanh": (1, 1),
    "abs": (1, 1),
    "min": (2, 2),
    "max": (2, 2),
    "ite": (3, 3),
    "and": (2, None),
    "or": (2, None),
}

KEYWORDS = {"true", "false", "not", "and", "or"}
COMPARISONS = ("==", "!=", "<=", ">=", "<", ">")


@dataclass(frozen=True)
class Const:
    value: Value


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Expr", ...]


Expr = Union[Const, Var, Unary, Binary, Call]


def negate(operand: Expr) -> Expr:
    """
    Unary minus, folded into real literals so that printing and
    re-parsing gives the same tree.

    >>> negate(Const(3.0))
    Const(value=-3.0)
    >>> negate(Var("x"))
    Unary(op='-', operand=Var(name='x'))
    """
    if (isinstance(operand, Const) and isinstance(operand.value, float)):
        return Const(-operand.value)
    return Unary("-", operand)


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>'[^']*'|"[^"]*")
  | (?P<op>==|!=|<=|>=|<|>|\+|-|\*|\(|\)|,)
""", re.VERBOSE)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def tokenize(text: str) -> List[_Token]:
    """
    Split an expression into tokens. The final token has kind 'eof'.

    >>> [t.text for t in tokenize("relu(x1 + 2.5)")]
    ['relu', '(', 'x1', '+', '2.5', ')', '']
    """
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ExpressionSyntaxError(text, pos, "a token")
        kind = match.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, match.group(), pos))
        pos = match.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


class _Parser:
    """
    Recursive descent over the precedence levels
    or < and < comparisons < +,- < * < unary < call.
    """

    def __init__(self, text: str) -> None:
        self._text = text
        self._tokens = tokenize(text)
        self._i = 0

    def _peek(self) -> _Token:
        return self._tokens[self._i]

    def _advance(self) -> _Token:
        token = self._tokens[self._i]
        self._i += 1
        return token

    def _expect(self, text: str, expected: Optional[str] = None) -> _Token:
        token = self._peek()
        if token.kind != "op" or token.text != text:
            raise ExpressionSyntaxError(self._text, token.offset,
                                        expected or "'%s'" % text)
        return self._advance()

    def parse(self) -> Expr:
        expr = self._or()
        token = self._peek()
        if token.kind != "eof":
            raise ExpressionSyntaxError(self._text, token.offset,
                                        "end of expression")
        return expr

    def _or(self) -> Expr:
        left = self._and()
        while self._is_infix("or"):
            self._advance()
            left = Binary("or", left, self._and())
        return left

    def _and(self) -> Expr:
        left = self._comparison()
        while self._is_infix("and"):
            self._advance()
            left = Binary("and", left, self._comparison())
        return left

    def _is_infix(self, word: str) -> bool:
        token = self._peek()
        return token.kind == "ident" and token.text == word

    def _comparison(self) -> Expr:
        left = self._additive()
        while self._peek().kind == "op" and self._peek().text in COMPARISONS:
            op = self._advance().text
            left = Binary(op, left, self._additive())
        return left

    def _additive(self) -> Expr:
        left = self._multiplicative()
        while self._peek().kind == "op" and self._peek().text in ("+", "-"):
            op = self._advance().text
            left = Binary(op, left, self._multiplicative())
        return left

    def _multiplicative(self) -> Expr:
        left = self._unary()
        while self._peek().kind == "op" and self._peek().text == "*":
            self._advance()
            left = Binary("*", left, self._unary())
        return left

    def _unary(self) -> Expr:
        token = self._peek()
        if token.kind == "op" and token.text == "-":
            self._advance()
            return negate(self._unary())
        if token.kind == "ident" and token.text == "not":
            self._advance()
            return Unary("not", self._unary())
        return self._primary()

    def _primary(self) -> Expr:
        token = self._peek()
        if token.kind == "number":
            value = float(token.text)
            if not math.isfinite(value):
                raise ExpressionSyntaxError(self._text, token.offset,
                                            "a finite number")
            self._advance()
            return Const(value)
        if token.kind == "string":
            self._advance()
            return Const(token.text[1:-1])
        if token.kind == "ident":
            self._advance()
            if token.text == "true":
                return Const(True)
            if token.text == "false":
                return Const(False)
            if self._peek().text == "(" and self._peek().kind == "op":
                return self._call(token)
            if token.text in FUNCTIONS:
                raise ExpressionSyntaxError(self._text, self._peek().offset,
                                            "'('")
            if token.text in KEYWORDS:
                raise ExpressionSyntaxError(self._text, token.offset,
                                            "an operand")
            return Var(token.text)
        if token.kind == "op" and token.text == "(":
            self._advance()
            expr = self._or()
            self._expect(")")
            return expr
        raise ExpressionSyntaxError(self._text, token.offset, "an operand")

    def _call(self, name_token: _Token) -> Expr:
        name = name_token.text
        if name not in FUNCTIONS:
            raise UnknownFunctionError(name, name_token.offset)
        low, high = FUNCTIONS[name]
        self._expect("(")
        args = [self._or()]
        while True:
            token = self._peek()
            if token.kind == "op" and token.text == ")":
                if len(args) < low:
                    raise ExpressionSyntaxError(self._text, token.offset,
                                                "','")
                self._advance()
                break
            if high is not None and len(args) >= high:
                self._expect(")")
            self._expect(",", "',' or ')'")
            args.append(self._or())
        if name in ("and", "or"):
            expr = args[0]
            for arg in args[1:]:
                expr = Binary(name, expr, arg)
            return expr
        return Call(name, tuple(args))


def parse_expression(text: str) -> Expr:
    """
    Parse an expression string into a tree.

    >>> parse_expression("or(not(A), B)")
    Binary(op='or', left=Unary(op='not', operand=Var(name='A')), right=Var(name='B'))
    >>> parse_expression("relu(x")
    Traceback (most recent call last):
    ...
    causal_probe.errors.ExpressionSyntaxError: syntax error at offset 6, expected ')'
    """
    return _Parser(text).parse()


def free_variables(expr: Expr) -> List[str]:
    """
    Variable names in order of first appearance.

    >>> free_variables(parse_expression("logistic(6*(A1 + A2) - 3)"))
    ['A1', 'A2']
    """
    names: List[str] = []

    def visit(node: Expr) -> None:
        if isinstance(node, Var):
            if node.name not in names:
                names.append(node.name)
        elif isinstance(node, Unary):
            visit(node.operand)
        elif isinstance(node, Binary):
            visit(node.left)
            visit(node.right)
        elif isinstance(node, Call):
            for arg in node.args:
                visit(arg)

    visit(expr)
    return names


def infer_type(expr: Expr, var_types: Optional[Mapping[str, str]] = None
               ) -> str:
    """
    Static type of an expression. Identifiers without a declared type
    are 'any'. Booleans coerce to reals in arithmetic, but reals never
    coerce to booleans.

    >>> infer_type(parse_expression("A < 0.5 and B"))
    'bool'
    >>> infer_type(parse_expression("and(x + 1, B)"))
    Traceback (most recent call last):
    ...
    causal_probe.errors.TypeMismatchError: 'and' applied to real operand
    """
    var_types = var_types or {}

    def numeric(kind: str, what: str) -> None:
        if kind == LABEL:
            raise TypeMismatchError("'%s' applied to label operand" % what)

    def boolean(kind: str, what: str) -> None:
        if kind not in (BOOL, ANY):
            raise TypeMismatchError("'%s' applied to %s operand" % (what, kind))

    def visit(node: Expr) -> str:
        if isinstance(node, Const):
            if isinstance(node.value, bool):
                return BOOL
            if isinstance(node.value, str):
                return LABEL
            return REAL
        if isinstance(node, Var):
            return var_types.get(node.name, ANY)
        if isinstance(node, Unary):
            kind = visit(node.operand)
            if node.op == "not":
                boolean(kind, "not")
                return BOOL
            numeric(kind, "-")
            return REAL
        if isinstance(node, Binary):
            left, right = visit(node.left), visit(node.right)
            if node.op in ("and", "or"):
                boolean(left, node.op)
                boolean(right, node.op)
                return BOOL
            if node.op in ("==", "!="):
                if LABEL in (left, right) and {left, right} - {LABEL, ANY}:
                    raise TypeMismatchError(
                        "'%s' compares a label with a %s" % (
                            node.op, (({left, right} - {LABEL, ANY})).pop()))
                return BOOL
            numeric(left, node.op)
            numeric(right, node.op)
            return BOOL if node.op in COMPARISONS else REAL
        kinds = [visit(arg) for arg in node.args]
        if node.name == "ite":
            boolean(kinds[0], "ite")
            branches = set(kinds[1:])
            if len(branches) == 1:
                return branches.pop()
            if ANY in branches:
                return ANY
            if LABEL in branches:
                raise TypeMismatchError("'ite' mixes label and %s branches"
                                        % (branches - {LABEL}).pop())
            return REAL
        for kind in kinds:
            numeric(kind, node.name)
        return REAL

    return visit(expr)


def _as_real(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return 1.0 if value else 0.0
    if isinstance(value, str):
        raise TypeMismatchError("label '%s' used as a number" % value)
    return value


def _as_bool(value: Any, what: str) -> bool:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    raise TypeMismatchError("'%s' applied to non-boolean value %r"
                            % (what, value))


_ARITHMETIC = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a*b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}

_UNARY_FUNCTIONS = {
    "relu": activations.relu,
    "logistic": activations.logistic,
    "tanh": activations.tanh,
    "abs": np.abs,
}


def evaluate_expression(expr: Expr, values: Mapping[str, Value]) -> Value:
    """
    Evaluate an expression tree against a mapping of variable values.

    >>> evaluate_expression(parse_expression("or(not(A), B)"),
    ...                     {"A": True, "B": False})
    False
    >>> evaluate_expression(parse_expression("ite(A, 2*x, -x)"),
    ...                     {"A": False, "x": 1.5})
    -1.5
    """
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        try:
            return values[expr.name]
        except KeyError:
            raise UndeclaredVariableError(expr.name) from None
    if isinstance(expr, Unary):
        operand = evaluate_expression(expr.operand, values)
        if expr.op == "not":
            return not _as_bool(operand, "not")
        return -_as_real(operand)
    if isinstance(expr, Binary):
        if expr.op == "and":
            return (_as_bool(evaluate_expression(expr.left, values), "and")
                    and _as_bool(evaluate_expression(expr.right, values),
                                 "and"))
        if expr.op == "or":
            return (_as_bool(evaluate_expression(expr.left, values), "or")
                    or _as_bool(evaluate_expression(expr.right, values),
                                "or"))
        left = evaluate_expression(expr.left, values)
        right = evaluate_expression(expr.right, values)
        if expr.op in ("==", "!="):
            if not (isinstance(left, str) or isinstance(right, str)):
                left, right = _as_real(left), _as_real(right)
            equal = bool(left == right)
            return equal if expr.op == "==" else not equal
        result = _ARITHMETIC[expr.op](_as_real(left), _as_real(right))
        if expr.op in COMPARISONS:
            return bool(result)
        return result
    if expr.name == "ite":
        condition = _as_bool(evaluate_expression(expr.args[0], values), "ite")
        return evaluate_expression(expr.args[1 if condition else 2], values)
    args = [_as_real(evaluate_expression(arg, values)) for arg in expr.args]
    if expr.name == "min":
        return np.minimum(args[0], args[1])
    if expr.name == "max":
        return np.maximum(args[0], args[1])
    return _UNARY_FUNCTIONS[expr.name](args[0])


def _quote_label(label: str) -> str:
    if "'" not in label:
        return "'%s'" % label
    if '"' not in label:
        return '"%s"' % label
    raise TypeMismatchError("label %r holds both quote characters" % label)


def format_expression(expr: Expr) -> str:
    """
    Canonical text for an expression; parsing the text gives back an
    identical tree.

    >>> format_expression(parse_expression("logistic(6*(A1 + A2) - 3)"))
    'logistic(((6.0 * (A1 + A2)) - 3.0))'
    """
    if isinstance(expr, Const):
        if isinstance(expr.value, bool):
            return "true" if expr.value else "false"
        if isinstance(expr.value, str):
            return _quote_label(expr.value)
        return repr(float(expr.value))
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Unary):
        if expr.op == "not":
            return "not(%s)" % format_expression(expr.operand)
        return "-(%s)" % format_expression(expr.operand)
    if isinstance(expr, Binary):
        return "(%s %s %s)" % (format_expression(expr.left), expr.op,
                               format_expression(expr.right))
    return "%s(%s)" % (expr.name,
                       ", ".join(format_expression(a) for a in expr.args))


_SYMPY_COMPARISONS = {
    "==": sympy.Eq, "!=": sympy.Ne, "<": sympy.Lt,
    "<=": sympy.Le, ">": sympy.Gt, ">=": sympy.Ge,
}


def to_sympy(expr: Expr) -> sympy.Basic:
    """
    Symbolic view of an expression, used only for rendering.

    >>> to_sympy(parse_expression("A + B"))
    A + B
    """
    if isinstance(expr, Const):
        if isinstance(expr.value, bool):
            return sympy.true if expr.value else sympy.false
        if isinstance(expr.value, str):
            return sympy.Symbol("'%s'" % expr.value)
        return sympy.Float(expr.value)
    if isinstance(expr, Var):
        return sympy.Symbol(expr.name)
    if isinstance(expr, Unary):
        operand = to_sympy(expr.operand)
        return sympy.Not(operand) if expr.op == "not" else -operand
    if isinstance(expr, Binary):
        left, right = to_sympy(expr.left), to_sympy(expr.right)
        if expr.op == "and":
            return sympy.And(left, right)
        if expr.op == "or":
            return sympy.Or(left, right)
        if expr.op in _SYMPY_COMPARISONS:
            return _SYMPY_COMPARISONS[expr.op](left, right)
        return {"+": left + right, "-": left - right,
                "*": left*right}[expr.op]
    args = [to_sympy(arg) for arg in expr.args]
    if expr.name == "relu":
        return sympy.Max(0, args[0])
    if expr.name == "logistic":
        return 1/(1 + sympy.exp(-args[0]))
    if expr.name == "tanh":
        return sympy.tanh(args[0])
    if expr.name == "abs":
        return sympy.Abs(args[0])
    if expr.name == "min":
        return sympy.Min(*args)
    if expr.name == "max":
        return sympy.Max(*args)
    return sympy.Piecewise((args[1], args[0]), (args[2], True))


class StructuralEquation:
    """
    A structural equation target := body.

    Attributes:
    target [Optional[str]]: the variable this equation defines.
    body [Expr]: expression tree over the parents.
    parents [Tuple[str, ...]]: free variables of the body, in order of
                               first appearance.
    """

    def __init__(self, body: Expr, target: Optional[str] = None) -> None:
        self.body = body
        self.target = target
        self.parents = tuple(free_variables(body))
        self.kind = infer_type(body)

    def __call__(self, values: Mapping[str, Value]) -> Value:
        """
        Evaluate the equation on its parents' values.
        """
        return evaluate_expression(self.body, values)

    def __str__(self) -> str:
        return format_expression(self.body)

    def __repr__(self) -> str:
        return "StructuralEquation(%r := %s)" % (self.target, self)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, StructuralEquation)
                and self.target == other.target and self.body == other.body)

    def __hash__(self) -> int:
        return hash((self.target, self.body))

    def with_target(self, target: str) -> "StructuralEquation":
        return StructuralEquation(self.body, target)

    def to_sympy(self) -> sympy.Basic:
        return to_sympy(self.body)

    @property
    def latex_repr(self) -> str:
        """
        The equation body as a LaTeX string, or its plain text when the
        symbolic view cannot be built (e.g. arithmetic on a comparison).
        """
        try:
            return latex(self.to_sympy())
        except (TypeError, ValueError, AttributeError):
            return str(self)


def parse_equation(text: str, target: Optional[str] = None
                   ) -> StructuralEquation:
    """
    Parse the right-hand side of a structural equation.

    >>> eq = parse_equation("or(not(A), B)", "C")
    >>> eq.parents
    ('A', 'B')
    >>> eq({"A": True, "B": True})
    True
    """
    return StructuralEquation(parse_expression(text), target)


def format_equation(equation: StructuralEquation) -> str:
    return format_expression(equation.body)
