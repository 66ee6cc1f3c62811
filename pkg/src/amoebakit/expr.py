"""Complex expressions for holomorphic parametrizations.

Grammar (whitespace is ignored)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' intexp)?
    intexp := ['+' | '-'] INT | '(' ['+' | '-'] INT ')'
    atom   := NUMBER ['i'] | 'i' | 'pi' | 't1' .. 'tk'
            | ('exp' | 'sin' | 'cos') '(' expr ')' | '(' expr ')'

A literal ``a+bi`` folds into a single constant node, as does a negated
literal, so ``parse(to_source(e)) == e`` for every parsed tree.

Evaluation is vectorized: parameters may be scalars or numpy arrays of a
common shape, and :func:`eval_jet_batch` carries the holomorphic derivative
with respect to every parameter alongside each value (forward mode).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

FUNCTIONS = ("exp", "sin", "cos")


class ExpressionError(ValueError):
    """Malformed expression text."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)


class EvaluationError(ArithmeticError):
    """Raised on division by zero or a coordinate leaving the torus."""


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: complex


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Var, BinOp, Pow, Neg, Call]


def const(value: complex) -> Const:
    return Const(complex(value))


def neg(node: Node) -> Node:
    if isinstance(node, Const):
        return Const(-node.value)
    return Neg(node)


def max_var(node: Node) -> int:
    """Largest variable index referenced by ``node`` (0 if none)."""
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Const):
        return 0
    if isinstance(node, BinOp):
        return max(max_var(node.left), max_var(node.right))
    if isinstance(node, Pow):
        return max_var(node.base)
    if isinstance(node, Neg):
        return max_var(node.operand)
    return max_var(node.arg)


# --------------------------------------------------------------------------
# Lexer / parser
# --------------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>i(?![A-Za-z0-9_]))?"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


@dataclass
class _Tok:
    kind: str  # num, ident, op, end
    text: str
    offset: int
    value: complex = 0j


def _tokenize(source: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    encoded_len = lambda p: len(source[:p].encode("utf-8"))  # noqa: E731
    while True:
        while pos < len(source) and source[pos].isspace():
            pos += 1
        if pos >= len(source):
            toks.append(_Tok("end", "", encoded_len(pos)))
            return toks
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            raise ExpressionError(f"unexpected character {source[pos]!r}", encoded_len(pos))
        off = encoded_len(pos)
        if m.group("num") is not None:
            x = float(m.group("num"))
            if not math.isfinite(x):
                raise ExpressionError("literal out of range", off)
            value = complex(0.0, x) if m.group("imag") else complex(x, 0.0)
            toks.append(_Tok("num", m.group(0).strip(), off, value))
        elif m.group("ident") is not None:
            toks.append(_Tok("ident", m.group("ident"), off))
        else:
            toks.append(_Tok("op", m.group("op"), off))
        pos = m.end()


class _Parser:
    def __init__(self, source: str, k: int):
        self.toks = _tokenize(source)
        self.i = 0
        self.k = k

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def _expect(self, text: str) -> None:
        t = self.tok
        if t.kind != "op" or t.text != text:
            found = "end of input" if t.kind == "end" else repr(t.text)
            raise ExpressionError(f"expected {text!r}, found {found}", t.offset)
        self.i += 1

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExpressionError(f"unexpected token {self.tok.text!r}", self.tok.offset)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self._take().text
            right = self.term()
            # literal of the form a+bi
            if (
                isinstance(node, Const)
                and isinstance(right, Const)
                and node.value.imag == 0.0
                and right.value.real == 0.0
            ):
                node = Const(node.value + right.value if op == "+" else node.value - right.value)
            else:
                node = BinOp(op, node, right)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self._take().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text in "+-":
            op = self._take().text
            operand = self.unary()
            return operand if op == "+" else neg(operand)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self._take()
            base = Pow(base, self.intexp())
            if self.tok.kind == "op" and self.tok.text == "^":
                raise ExpressionError("chained '^' is not supported", self.tok.offset)
        return base

    def intexp(self) -> int:
        paren = self.tok.kind == "op" and self.tok.text == "("
        if paren:
            self._take()
        sign = 1
        if self.tok.kind == "op" and self.tok.text in "+-":
            sign = -1 if self._take().text == "-" else 1
        t = self.tok
        if t.kind != "num" or t.value.imag != 0.0 or not re.fullmatch(r"\d+", t.text):
            raise ExpressionError("exponent must be an integer literal", t.offset)
        self._take()
        if paren:
            self._expect(")")
        return sign * int(t.text)

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self._take()
            return Const(t.value)
        if t.kind == "ident":
            self._take()
            name = t.text
            if name == "i":
                return Const(1j)
            if name == "pi":
                return Const(complex(math.pi))
            if name in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Call(name, arg)
            m = re.fullmatch(r"t([1-9]\d*)", name)
            if m:
                idx = int(m.group(1))
                if idx > self.k:
                    raise ExpressionError(f"variable {name} out of range for k={self.k}", t.offset)
                return Var(idx)
            raise ExpressionError(f"unknown identifier {name!r}", t.offset)
        if t.kind == "op" and t.text == "(":
            self._take()
            node = self.expr()
            self._expect(")")
            return node
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ExpressionError(f"unexpected {found}", t.offset)


def parse(source: str, k: int) -> Node:
    """Parse expression text over the variables ``t1..tk``."""
    if k < 1:
        raise ValueError("arity k must be >= 1")
    return _Parser(source, k).parse()


# --------------------------------------------------------------------------
# Printer
# --------------------------------------------------------------------------


def _fmt_const(c: complex) -> str:
    re_, im = c.real, c.imag
    if im == 0.0:
        s = repr(re_)
        return f"({s})" if s.startswith("-") else s
    ims = repr(abs(im)) + "i"
    if re_ == 0.0 and math.copysign(1.0, re_) > 0:
        return f"(-{ims})" if im < 0 else ims
    sign = "-" if im < 0 else "+"
    return f"({repr(re_)}{sign}{ims})"


def to_source(node: Node) -> str:
    """Render ``node`` as text that parses back to an equal tree."""
    if isinstance(node, Const):
        return _fmt_const(node.value)
    if isinstance(node, Var):
        return f"t{node.index}"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Pow):
        return f"({to_source(node.base)}^{node.exponent})"
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    return f"{node.func}({to_source(node.arg)})"


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


def _check_nonzero(den, what: str) -> None:
    if np.any(den == 0):
        raise EvaluationError(f"{what} by zero")


def _eval(node: Node, t: np.ndarray):
    """Return (value, derivative) with derivative shaped (k,) + value shape."""
    shape = t.shape[1:]
    k = t.shape[0]
    if isinstance(node, Const):
        return np.full(shape, node.value, dtype=complex), np.zeros((k,) + shape, dtype=complex)
    if isinstance(node, Var):
        d = np.zeros((k,) + shape, dtype=complex)
        d[node.index - 1] = 1.0
        return t[node.index - 1].astype(complex), d
    if isinstance(node, Neg):
        v, d = _eval(node.operand, t)
        return -v, -d
    if isinstance(node, BinOp):
        a, da = _eval(node.left, t)
        b, db = _eval(node.right, t)
        op = node.op
        if op == "+":
            return a + b, da + db
        if op == "-":
            return a - b, da - db
        if op == "*":
            return a * b, da * b + a * db
        _check_nonzero(b, "division")
        q = a / b
        return q, (da - q * db) / b
    if isinstance(node, Pow):
        v, d = _eval(node.base, t)
        n = node.exponent
        if n == 0:
            return np.ones(shape, dtype=complex), np.zeros((k,) + shape, dtype=complex)
        if n < 0:
            _check_nonzero(v, "power of zero: division")
        return v**n, n * v ** (n - 1) * d
    v, d = _eval(node.arg, t)
    if node.func == "exp":
        e = np.exp(v)
        return e, e * d
    if node.func == "sin":
        return np.sin(v), np.cos(v) * d
    return np.cos(v), -np.sin(v) * d


def evaluate(node: Node, t: Sequence[complex]) -> complex:
    """Value of ``node`` at a single parameter point."""
    arr = np.asarray(t, dtype=complex).reshape(-1)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        v, _ = _eval(node, arr)
    return complex(v)


@dataclass(frozen=True)
class Jet:
    """Point on the torus with its holomorphic Jacobian ``dz[i, j] = dz_i/dt_j``."""

    value: np.ndarray  # (n,)
    dz: np.ndarray  # (n, k)


def eval_jet_batch(exprs: Sequence[Node], t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate ``n`` expressions at ``N`` points ``t`` of shape (N, k).

    Returns ``values`` of shape (N, n) and ``dz`` of shape (N, n, k).
    """
    t = np.asarray(t, dtype=complex)
    if t.ndim != 2:
        raise ValueError("t must have shape (N, k)")
    tk = t.T
    values = np.empty((t.shape[0], len(exprs)), dtype=complex)
    dz = np.empty((t.shape[0], len(exprs), t.shape[1]), dtype=complex)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for i, e in enumerate(exprs):
            v, d = _eval(e, tk)
            values[:, i] = v
            dz[:, i, :] = d.T
    return values, dz


def eval_jet(exprs: Sequence[Node], t: Sequence[complex]) -> Jet:
    t = np.asarray(t, dtype=complex).reshape(1, -1)
    values, dz = eval_jet_batch(exprs, t)
    if np.any(values[0] == 0):
        raise EvaluationError("zero coordinate: point leaves the torus")
    return Jet(values[0], dz[0])


def parse_number(source: str) -> complex:
    """Parse a constant expression such as ``"2-3i"`` or ``"pi/2"``."""
    node = parse(source, 1)
    if max_var(node) > 0:
        raise ExpressionError("expected a constant", 0)
    return evaluate(node, [0])
