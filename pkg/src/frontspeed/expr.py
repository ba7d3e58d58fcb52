"""Expression trees for coefficient pieces.

The grammar is deliberately small::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | 'x' | NAME '(' expr (',' expr)* ')' | '(' expr ')'

with ``NAME`` one of ``exp log sqrt abs`` (one argument) or ``min max`` (two).
A unary minus applied to a literal is folded into a negative constant, which
makes ``parse(str(parse(s))) == parse(s)`` hold for every input.

Every tree can be evaluated three ways: vectorised over numpy arrays, through a
generated scalar Python closure, or as a postfix program consumed by the
compiled shooting kernel.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import ExprSyntaxError

UNARY_FUNCS = ("exp", "log", "sqrt", "abs")
BINARY_FUNCS = ("min", "max")

# postfix opcodes shared with the compiled kernel
OP_CONST, OP_X, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW, OP_NEG = range(8)
OP_EXP, OP_LOG, OP_SQRT, OP_ABS, OP_MIN, OP_MAX = range(8, 14)
MAX_STACK = 64

_BINOP_CODES = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV, "^": OP_POW}
_FUNC_CODES = {
    "exp": OP_EXP,
    "log": OP_LOG,
    "sqrt": OP_SQRT,
    "abs": OP_ABS,
    "min": OP_MIN,
    "max": OP_MAX,
}


@dataclass(frozen=True)
class Const:
    value: float

    def __str__(self) -> str:
        text = repr(float(self.value))
        return f"({text})" if self.value < 0 or text.startswith("-") else text


@dataclass(frozen=True)
class Var:
    def __str__(self) -> str:
        return "x"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"

    def __str__(self) -> str:
        return f"(-{self.operand})"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple

    def __str__(self) -> str:
        return f"{self.name}({', '.join(str(a) for a in self.args)})"


Expr = Union[Const, Var, Neg, BinOp, Call]
X = Var()


# ---------------------------------------------------------------------------
# construction helpers with light constant folding


def const(value: float) -> Const:
    return Const(float(value))


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return const(a.value + b.value)
    if isinstance(a, Const) and a.value == 0.0:
        return b
    if isinstance(b, Const) and b.value == 0.0:
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return const(a.value - b.value)
    if isinstance(b, Const) and b.value == 0.0:
        return a
    if isinstance(a, Const) and a.value == 0.0:
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return const(a.value * b.value)
    for u, v in ((a, b), (b, a)):
        if isinstance(u, Const):
            if u.value == 1.0:
                return v
            if u.value == 0.0:
                return const(0.0)
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return const(a.value / b.value)
    if isinstance(b, Const) and b.value == 1.0:
        return a
    return BinOp("/", a, b)


def power(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const):
        if b.value == 1.0:
            return a
        if b.value == 0.0:
            return const(1.0)
        if isinstance(a, Const) and a.value > 0.0:
            return const(a.value ** b.value)
        if isinstance(a, Const) and a.value == 1.0:
            return const(1.0)
    return BinOp("^", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return const(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def call(name: str, *args: Expr) -> Expr:
    return Call(name, tuple(args))


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),])
    """,
    re.VERBOSE,
)


def _tokenize(text: str, line: int | None):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", line, pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group(kind)
            if kind == "op" and value == "**":
                value = "^"
            tokens.append((kind, value, pos + 1))
        pos = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, line: int | None):
        self.text = text
        self.line = line
        self.tokens = _tokenize(text, line)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message: str, tok=None):
        tok = tok or self.peek()
        raise ExprSyntaxError(message, self.line, tok[2])

    def expect(self, value: str):
        tok = self.take()
        if tok[1] != value or tok[0] not in ("op",):
            self.fail(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok)

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            self.fail("empty expression")
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            operand = self.unary()
            if isinstance(operand, Const):
                return Const(-operand.value)
            return Neg(operand)
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.take()
        kind, value, _ = tok
        if kind == "number":
            return Const(float(value))
        if kind == "name":
            if value == "x":
                return X
            if value in UNARY_FUNCS or value in BINARY_FUNCS:
                self.expect("(")
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                arity = 1 if value in UNARY_FUNCS else 2
                if len(args) != arity:
                    self.fail(f"{value}() takes {arity} argument(s), got {len(args)}", tok)
                return Call(value, tuple(args))
            self.fail(f"unknown name {value!r}", tok)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        self.fail(f"unexpected token {value or 'end of input'!r}", tok)


def parse(text: str, line: int | None = None) -> Expr:
    """Parse ``text`` into an expression tree; ``x`` is the only variable."""
    return _Parser(text, line).parse()


# ---------------------------------------------------------------------------
# evaluation


def evaluate(node: Expr, x):
    """Vectorised evaluation; domain errors surface as nan/inf, never raise."""
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        out = _eval_np(node, x)
    return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()


def _eval_np(node: Expr, x):
    if isinstance(node, Const):
        return np.float64(node.value)
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval_np(node.operand, x)
    if isinstance(node, BinOp):
        a = _eval_np(node.left, x)
        b = _eval_np(node.right, x)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return np.true_divide(a, b)
        return np.power(np.asarray(a, dtype=float), b)
    args = [_eval_np(a, x) for a in node.args]
    name = node.name
    if name == "exp":
        return np.exp(args[0])
    if name == "log":
        return np.log(args[0])
    if name == "sqrt":
        return np.sqrt(args[0])
    if name == "abs":
        return np.abs(args[0])
    if name == "min":
        return np.minimum(args[0], args[1])
    return np.maximum(args[0], args[1])


def evaluate_with_derivative(node: Expr, x):
    """``(value, d/dx value)`` by forward-mode differentiation, vectorised like ``evaluate``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        v, d = _dual(node, x)
    shape = x.shape
    return (np.broadcast_to(np.asarray(v, dtype=float), shape).copy(),
            np.broadcast_to(np.asarray(d, dtype=float), shape).copy())


def _dual(node: Expr, x):
    if isinstance(node, Const):
        return np.float64(node.value), np.float64(0.0)
    if isinstance(node, Var):
        return x, np.ones_like(x)
    if isinstance(node, Neg):
        v, d = _dual(node.operand, x)
        return -v, -d
    if isinstance(node, BinOp):
        a, da = _dual(node.left, x)
        b, db = _dual(node.right, x)
        if node.op == "+":
            return a + b, da + db
        if node.op == "-":
            return a - b, da - db
        if node.op == "*":
            return a * b, da * b + a * db
        if node.op == "/":
            q = np.true_divide(a, b)
            return q, np.true_divide(da - q * db, b)
        v = np.power(np.asarray(a, dtype=float), b)
        if isinstance(node.right, Const):
            return v, b * np.power(np.asarray(a, dtype=float), b - 1.0) * da
        return v, v * (db * np.log(a) + b * da / a)
    args = [_dual(a, x) for a in node.args]
    (a, da) = args[0]
    name = node.name
    if name == "exp":
        v = np.exp(a)
        return v, v * da
    if name == "log":
        return np.log(a), da / a
    if name == "sqrt":
        v = np.sqrt(a)
        return v, 0.5 * da / v
    if name == "abs":
        return np.abs(a), np.sign(a) * da
    b, db = args[1]
    pick = a <= b if name == "min" else a >= b
    return np.where(pick, a, b), np.where(pick, da, db)


def _nan_min(a: float, b: float) -> float:
    if a != a or b != b:
        return math.nan
    return a if a < b else b


def _nan_max(a: float, b: float) -> float:
    if a != a or b != b:
        return math.nan
    return a if a > b else b


_CLOSURE_ENV = {
    "_exp": math.exp,
    "_log": math.log,
    "_sqrt": math.sqrt,
    "_abs": abs,
    "_pow": math.pow,
    "_min": _nan_min,
    "_max": _nan_max,
}


def _source(node: Expr) -> str:
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Neg):
        return f"(-{_source(node.operand)})"
    if isinstance(node, BinOp):
        left, right = _source(node.left), _source(node.right)
        if node.op == "^":
            return f"_pow({left}, {right})"
        return f"({left} {node.op} {right})"
    return f"_{node.name}({', '.join(_source(a) for a in node.args)})"


def to_pyfunc(node: Expr) -> Callable[[float], float]:
    """Scalar closure.  Domain errors raise ValueError/ZeroDivisionError/OverflowError."""
    code = compile(f"lambda x: {_source(node)}", "<expr>", "eval")
    return eval(code, dict(_CLOSURE_ENV))


def to_program(node: Expr) -> tuple[list[int], list[float]]:
    """Postfix program ``(opcodes, args)`` for the compiled kernel."""
    ops: list[int] = []
    args: list[float] = []
    depth = _emit(node, ops, args)
    if depth > MAX_STACK:
        raise ValueError(f"expression needs a stack of depth {depth} > {MAX_STACK}")
    return ops, args


def _emit(node: Expr, ops: list[int], args: list[float]) -> int:
    if isinstance(node, Const):
        ops.append(OP_CONST)
        args.append(float(node.value))
        return 1
    if isinstance(node, Var):
        ops.append(OP_X)
        args.append(0.0)
        return 1
    if isinstance(node, Neg):
        d = _emit(node.operand, ops, args)
        ops.append(OP_NEG)
        args.append(0.0)
        return d
    if isinstance(node, BinOp):
        d1 = _emit(node.left, ops, args)
        d2 = _emit(node.right, ops, args)
        ops.append(_BINOP_CODES[node.op])
        args.append(0.0)
        return max(d1, d2 + 1)
    depths = [_emit(a, ops, args) + i for i, a in enumerate(node.args)]
    ops.append(_FUNC_CODES[node.name])
    args.append(0.0)
    return max(depths)


def run_program(ops, args, x: float) -> float:
    """Reference interpreter for postfix programs (used by the tests only)."""
    stack: list[float] = []
    for op, arg in zip(ops, args):
        if op == OP_CONST:
            stack.append(arg)
        elif op == OP_X:
            stack.append(x)
        elif op == OP_NEG:
            stack.append(-stack.pop())
        elif op in (OP_EXP, OP_LOG, OP_SQRT, OP_ABS):
            a = stack.pop()
            with np.errstate(all="ignore"):
                fn = {OP_EXP: np.exp, OP_LOG: np.log, OP_SQRT: np.sqrt, OP_ABS: np.abs}[op]
                stack.append(float(fn(np.float64(a))))
        else:
            b = stack.pop()
            a = stack.pop()
            with np.errstate(all="ignore"):
                if op == OP_ADD:
                    r = a + b
                elif op == OP_SUB:
                    r = a - b
                elif op == OP_MUL:
                    r = a * b
                elif op == OP_DIV:
                    r = float(np.true_divide(np.float64(a), np.float64(b)))
                elif op == OP_POW:
                    r = float(np.power(np.float64(a), np.float64(b)))
                elif op == OP_MIN:
                    r = _nan_min(a, b)
                else:
                    r = _nan_max(a, b)
            stack.append(r)
    return stack[-1]
