"""
Expression Language

A small language for Lagrangians and basis functions: numeric literals,
the variables t and u0..uR, binary + - * / ^, unary minus and the
functions ln, exp, sin, cos, abs and sign.

Precedence from tightest: ^ (right-associative), unary -, * /, + -.
There is no implicit multiplication: "2t" is an error, "2*t" is required.

Slot order follows <x>^r: u0 is x^{sigma^r}, ..., ur is x^{Delta^r}, so the
partial derivative of L with respect to its (i+2)-th argument is
differentiate(L, f"u{i}").
"""

import math
import re
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .core import DomainError, EvaluationError, ParseError

FUNCTIONS = ("ln", "exp", "sin", "cos", "abs", "sign")

_VARIABLE_RE = re.compile(r"u(0|[1-9][0-9]*)\Z")


@dataclass(frozen=True)
class Expr:
    """Base class of expression nodes; nodes are immutable and compare structurally."""
    precedence = 100

    def __str__(self) -> str:
        return to_source(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float

    @property
    def precedence(self) -> int:
        return 3 if self.value < 0 else 100


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr
    precedence = 3


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    @property
    def precedence(self) -> int:
        return {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}[self.op]


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr


# -- tokenizer ----------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(source: str) -> List[_Token]:
    tokens: List[_Token] = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        match = _TOKEN_RE.match(source, pos)
        if not match:
            offset = pos + (len(source[pos:]) - len(source[pos:].lstrip()))
            raise ParseError(f"Unexpected character {source[offset]!r}", offset)
        kind = match.lastgroup
        tokens.append(_Token(kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(_Token("end", "", len(source)))
    return tokens


class _Parser:
    """Recursive descent over the token list."""

    def __init__(self, source: str, variables: FrozenSet[str]):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.variables = variables

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, text: str) -> _Token:
        token = self.peek()
        if token.text != text:
            found = repr(token.text) if token.kind != "end" else "end of input"
            raise ParseError(f"Expected {text!r}, found {found}", token.offset)
        return self.advance()

    def parse(self) -> Expr:
        expr = self.additive()
        token = self.peek()
        if token.kind != "end":
            raise ParseError(f"Unexpected {token.text!r}", token.offset)
        return expr

    def additive(self) -> Expr:
        expr = self.multiplicative()
        while self.peek().text in ("+", "-"):
            op = self.advance().text
            expr = BinOp(op, expr, self.multiplicative())
        return expr

    def multiplicative(self) -> Expr:
        expr = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.advance().text
            expr = BinOp(op, expr, self.unary())
        return expr

    def unary(self) -> Expr:
        if self.peek().text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek().text == "^":
            self.advance()
            # right-associative; the exponent may carry its own sign
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        token = self.peek()
        if token.kind == "num":
            self.advance()
            value = float(token.text)
            if not math.isfinite(value):
                raise ParseError(f"Number {token.text!r} is out of range", token.offset)
            return Num(value)
        if token.kind == "ident":
            self.advance()
            if token.text in FUNCTIONS:
                self.expect("(")
                arg = self.additive()
                if self.peek().text == ",":
                    raise ParseError(f"{token.text} takes exactly one argument", self.peek().offset)
                self.expect(")")
                return Call(token.text, arg)
            if token.text not in self.variables:
                raise ParseError(f"Unknown identifier {token.text!r}", token.offset)
            if self.peek().text == "(":
                raise ParseError(f"{token.text!r} is not a function", self.peek().offset)
            return Var(token.text)
        if token.text == "(":
            self.advance()
            expr = self.additive()
            self.expect(")")
            return expr
        found = repr(token.text) if token.kind != "end" else "end of input"
        raise ParseError(f"Unexpected {found}", token.offset)


def variable_names(r: Optional[int]) -> FrozenSet[str]:
    """{t, u0..ur}; only {t} when r is None."""
    if r is None:
        return frozenset({"t"})
    return frozenset({"t"} | {f"u{i}" for i in range(r + 1)})


def parse(source: str, r: Optional[int] = None) -> Expr:
    """
    Parse source into an expression over t and u0..ur.

    With r=None only t is allowed (basis functions and candidates).
    Raises ParseError carrying the byte offset of the problem.
    """
    return _Parser(source, variable_names(r)).parse()


def free_variables(expr: Expr) -> FrozenSet[str]:
    if isinstance(expr, Var):
        return frozenset({expr.name})
    if isinstance(expr, Num):
        return frozenset()
    if isinstance(expr, Neg):
        return free_variables(expr.operand)
    if isinstance(expr, Call):
        return free_variables(expr.arg)
    return free_variables(expr.left) | free_variables(expr.right)


# -- printing -----------------------------------------------------------

def _format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def to_source(expr: Expr) -> str:
    """Print expr so that parse(to_source(expr)) evaluates identically."""
    if isinstance(expr, Num):
        return _format_number(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Call):
        return f"{expr.fn}({to_source(expr.arg)})"
    if isinstance(expr, Neg):
        inner = to_source(expr.operand)
        if expr.operand.precedence < Neg.precedence or isinstance(expr.operand, Num) and expr.operand.value < 0:
            inner = f"({inner})"
        return f"-{inner}"

    left, right = to_source(expr.left), to_source(expr.right)
    prec = expr.precedence
    if expr.op == "^":
        if expr.left.precedence <= prec:
            left = f"({left})"
        if expr.right.precedence < Neg.precedence:
            right = f"({right})"
        return f"{left}^{right}"
    if expr.left.precedence < prec:
        left = f"({left})"
    if expr.right.precedence <= prec:
        right = f"({right})"
    return f"{left} {expr.op} {right}"


# -- evaluation ---------------------------------------------------------

def _div(a: float, b: float) -> float:
    if b == 0:
        raise DomainError("Division by zero")
    return a / b


def _pow(a: float, b: float) -> float:
    if a < 0 and not float(b).is_integer():
        raise DomainError(f"Negative base {a} with non-integer exponent {b}")
    if a == 0 and b < 0:
        raise DomainError("Zero raised to a negative power")
    try:
        return math.pow(a, b)
    except OverflowError:
        raise DomainError(f"Overflow in {a}^{b}")


def _ln(a: float) -> float:
    if a <= 0:
        raise DomainError(f"ln of non-positive value {a}")
    return math.log(a)


def _exp(a: float) -> float:
    try:
        return math.exp(a)
    except OverflowError:
        raise DomainError(f"Overflow in exp({a})")


def _sign(a: float) -> float:
    return float((a > 0) - (a < 0))


_FUNCTION_IMPLS: Dict[str, Callable[[float], float]] = {
    "ln": _ln,
    "exp": _exp,
    "sin": math.sin,
    "cos": math.cos,
    "abs": abs,
    "sign": _sign,
}

_BINARY_IMPLS: Dict[str, Callable[[float, float], float]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
    "^": _pow,
}


def evaluate(expr: Expr, bindings: Mapping[str, float]) -> float:
    """Evaluate expr; unbound variables raise EvaluationError, domain violations DomainError."""
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        try:
            return float(bindings[expr.name])
        except KeyError:
            raise EvaluationError(f"Unbound variable {expr.name!r}")
    if isinstance(expr, Neg):
        return -evaluate(expr.operand, bindings)
    if isinstance(expr, Call):
        return _FUNCTION_IMPLS[expr.fn](evaluate(expr.arg, bindings))
    return _BINARY_IMPLS[expr.op](evaluate(expr.left, bindings), evaluate(expr.right, bindings))


def _python_source(expr: Expr) -> str:
    if isinstance(expr, Num):
        # folded constants may overflow; repr would yield a bare inf
        return repr(expr.value) if math.isfinite(expr.value) else f"float('{expr.value}')"
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Neg):
        return f"(-{_python_source(expr.operand)})"
    if isinstance(expr, Call):
        return f"_{expr.fn}({_python_source(expr.arg)})"
    left, right = _python_source(expr.left), _python_source(expr.right)
    if expr.op == "/":
        return f"_div({left}, {right})"
    if expr.op == "^":
        return f"_pow({left}, {right})"
    return f"({left} {expr.op} {right})"


def compile_expr(expr: Expr, arg_names: Sequence[str]) -> Callable[..., float]:
    """
    Compile expr into a positional Python function of arg_names.

    Semantics match evaluate(); the generated code only contains literals,
    the given argument names and the domain-checked helpers.
    """
    missing = free_variables(expr) - set(arg_names)
    if missing:
        raise EvaluationError(f"Unbound variables {sorted(missing)}")
    namespace = {f"_{name}": impl for name, impl in _FUNCTION_IMPLS.items()}
    namespace.update(_div=_div, _pow=_pow)
    source = f"lambda {', '.join(arg_names)}: {_python_source(expr)}"
    return eval(compile(source, "<tsvar-expr>", "eval"), namespace)


# -- differentiation ----------------------------------------------------

def _is_num(expr: Expr, value: Optional[float] = None) -> bool:
    return isinstance(expr, Num) and (value is None or expr.value == value)


def add(a: Expr, b: Expr) -> Expr:
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    if _is_num(a, 0):
        return b
    if _is_num(b, 0):
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    if _is_num(b, 0):
        return a
    if _is_num(a, 0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    if _is_num(a, 0) or _is_num(b, 0):
        return Num(0.0)
    if _is_num(a, 1):
        return b
    if _is_num(b, 1):
        return a
    if _is_num(a, -1):
        return neg(b)
    if _is_num(b, -1):
        return neg(a)
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0) and not _is_num(b, 0):
        return Num(0.0)
    if _is_num(b, 1):
        return a
    return BinOp("/", a, b)


def neg(a: Expr) -> Expr:
    if _is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def power(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 1):
        return a
    if _is_num(b, 0):
        return Num(1.0)
    return BinOp("^", a, b)


def differentiate(expr: Expr, var: str) -> Expr:
    """
    Symbolic derivative of expr with respect to var, with constant folding.

    abs differentiates to sign, with sign(0) = 0.
    """
    if isinstance(expr, Num):
        return Num(0.0)
    if isinstance(expr, Var):
        return Num(1.0 if expr.name == var else 0.0)
    if isinstance(expr, Neg):
        return neg(differentiate(expr.operand, var))
    if isinstance(expr, Call):
        inner = differentiate(expr.arg, var)
        if _is_num(inner, 0):
            return Num(0.0)
        a = expr.arg
        outer = {
            "ln": lambda: div(Num(1.0), a),
            "exp": lambda: Call("exp", a),
            "sin": lambda: Call("cos", a),
            "cos": lambda: neg(Call("sin", a)),
            "abs": lambda: Call("sign", a),
            "sign": lambda: Num(0.0),
        }[expr.fn]()
        return mul(outer, inner)

    a, b = expr.left, expr.right
    da, db = differentiate(a, var), differentiate(b, var)
    if expr.op == "+":
        return add(da, db)
    if expr.op == "-":
        return sub(da, db)
    if expr.op == "*":
        return add(mul(da, b), mul(a, db))
    if expr.op == "/":
        return div(sub(mul(da, b), mul(a, db)), power(b, Num(2.0)))
    # ^
    if var not in free_variables(b):
        exponent = sub(b, Num(1.0))
        return mul(mul(b, power(a, exponent)), da)
    return mul(expr, add(mul(db, Call("ln", a)), div(mul(b, da), a)))


def fold_constants(expr: Expr) -> Expr:
    """Collapse subtrees that contain no variables."""
    if isinstance(expr, (Num, Var)):
        return expr
    if not free_variables(expr):
        try:
            return Num(evaluate(expr, {}))
        except DomainError:
            return expr
    if isinstance(expr, Neg):
        return neg(fold_constants(expr.operand))
    if isinstance(expr, Call):
        return Call(expr.fn, fold_constants(expr.arg))
    builder = {"+": add, "-": sub, "*": mul, "/": div, "^": power}[expr.op]
    return builder(fold_constants(expr.left), fold_constants(expr.right))


ExprLike = Union[str, Expr]


def as_expr(source: ExprLike, r: Optional[int] = None) -> Expr:
    return source if isinstance(source, Expr) else parse(source, r)


def time_function(source: ExprLike) -> Callable[[float], float]:
    """Compile an expression in t alone into a float function."""
    return compile_expr(as_expr(source, None), ("t",))
