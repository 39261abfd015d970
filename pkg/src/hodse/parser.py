# src/hodse/parser.py
"""
Readers for the two textual inputs: headerless numeric CSV data and the
functional mini-grammar

    poly:<expr>            polynomial in x (= x1) or x1..xd
    fn:exp | fn:sin | fn:xatan
    sep:abs | sep:pow:<p> | sep:square | sep:sin | sep:table:<csv>

each optionally followed by ``:h=<bandwidth>``.
"""

from __future__ import annotations

import ast
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

from .errors import DataParseError, InputError
from .rules import SeparableBase
from .ustat import SampleMatrix

logger = logging.getLogger(__name__)

Monomial = Tuple[Tuple[int, int], ...]
Poly = Dict[Monomial, float]

_VARIABLE = re.compile(r"^x(\d*)$")


def read_sample_matrix(path: str | Path) -> SampleMatrix:
    """Rows are observations, columns coordinates; blank lines are skipped."""
    text = Path(path).read_text(encoding="utf-8-sig")
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise DataParseError(f"expected {width} columns, found {len(cells)}",
                                 line=lineno, column=min(width, len(cells)) + 1)
        row = []
        for col, cell in enumerate(cells, start=1):
            try:
                val = float(cell.strip())
            except ValueError:
                raise DataParseError(f"cannot read {cell.strip()!r} as a number",
                                     line=lineno, column=col) from None
            if not math.isfinite(val):
                raise DataParseError(f"non-finite value {cell.strip()!r}", line=lineno, column=col)
            row.append(val)
        rows.append(row)
    if not rows:
        raise DataParseError("no observations found", line=1, column=1)
    logger.debug("read %d x %d sample matrix from %s", len(rows), width, path)
    return SampleMatrix(rows)


def read_table(path: str | Path) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """Two-column (knot, value) CSV for table-based separable functionals."""
    x = read_sample_matrix(path).values
    if x.shape[1] != 2:
        raise InputError(f"table file {path} must have two columns, found {x.shape[1]}")
    order = x[:, 0].argsort()
    return tuple(x[order, 0]), tuple(x[order, 1])


# ---------------------------------------------------------------------------
# polynomial expressions
# ---------------------------------------------------------------------------

def _poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            exps: Dict[int, int] = dict(ma)
            for var, e in mb:
                exps[var] = exps.get(var, 0) + e
            key = tuple(sorted(exps.items()))
            out[key] = out.get(key, 0.0) + ca * cb
    return out


def _poly_add(a: Poly, b: Poly, sign: float = 1.0) -> Poly:
    out = dict(a)
    for m, c in b.items():
        out[m] = out.get(m, 0.0) + sign * c
    return out


def _constant_of(p: Poly) -> Optional[float]:
    if all(m == () for m in p):
        return p.get((), 0.0)
    return None


class PolynomialExpression(ast.NodeVisitor):
    """Fold a Python expression AST into {monomial: coefficient}."""

    def __init__(self, source: str):
        self.source = source
        self.max_variable = 0

    def parse(self) -> Poly:
        try:
            tree = ast.parse(self.source.replace("^", "**"), mode="eval")
        except SyntaxError as e:
            raise InputError(f"cannot parse polynomial {self.source!r}: {e.msg}") from None
        return self.visit(tree)

    def visit_Expression(self, node: ast.Expression) -> Poly:
        return self.visit(node.body)

    def visit_Constant(self, node: ast.Constant) -> Poly:
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise InputError(f"unsupported constant {node.value!r} in polynomial")
        return {(): float(node.value)}

    def visit_Name(self, node: ast.Name) -> Poly:
        match = _VARIABLE.match(node.id)
        if not match:
            raise InputError(f"unknown variable {node.id!r}; use x or x1..xd")
        index = int(match.group(1) or 1) - 1
        if index < 0:
            raise InputError("variables are numbered from x1")
        self.max_variable = max(self.max_variable, index + 1)
        return {((index, 1),): 1.0}

    def visit_UnaryOp(self, node: ast.UnaryOp) -> Poly:
        inner = self.visit(node.operand)
        if isinstance(node.op, ast.USub):
            return {m: -c for m, c in inner.items()}
        if isinstance(node.op, ast.UAdd):
            return inner
        raise InputError(f"unsupported unary operator in {self.source!r}")

    def visit_BinOp(self, node: ast.BinOp) -> Poly:
        left, right = self.visit(node.left), self.visit(node.right)
        if isinstance(node.op, ast.Add):
            return _poly_add(left, right)
        if isinstance(node.op, ast.Sub):
            return _poly_add(left, right, -1.0)
        if isinstance(node.op, ast.Mult):
            return _poly_mul(left, right)
        if isinstance(node.op, ast.Div):
            c = _constant_of(right)
            if c is None or c == 0.0:
                raise InputError("polynomials may only be divided by non-zero constants")
            return {m: v / c for m, v in left.items()}
        if isinstance(node.op, ast.Pow):
            e = _constant_of(right)
            if e is None or e < 0 or e != int(e):
                raise InputError("exponents must be non-negative integer constants")
            out: Poly = {(): 1.0}
            for _ in range(int(e)):
                out = _poly_mul(out, left)
            return out
        raise InputError(f"unsupported operator {type(node.op).__name__} in {self.source!r}")

    def generic_visit(self, node: ast.AST):
        raise InputError(f"unsupported syntax {type(node).__name__} in polynomial {self.source!r}")


def polynomial_coefficients(expr: str, d: int) -> Dict[Tuple[int, ...], float]:
    """Exponent-tuple coefficients of ``expr`` over R^d."""
    visitor = PolynomialExpression(expr)
    poly = visitor.parse()
    if visitor.max_variable > d:
        raise InputError(f"polynomial uses x{visitor.max_variable} but data has d={d}")
    out: Dict[Tuple[int, ...], float] = {}
    for mono, coef in poly.items():
        exps = [0] * d
        for var, e in mono:
            exps[var] += e
        key = tuple(exps)
        out[key] = out.get(key, 0.0) + coef
    return {k: v for k, v in out.items() if v != 0.0}


# ---------------------------------------------------------------------------
# functional specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionalSpec:
    family: str
    text: str
    expression: Optional[str] = None
    name: Optional[str] = None
    base: Optional[SeparableBase] = None
    p: Optional[float] = None
    table_path: Optional[str] = None
    bandwidth: Optional[float] = None


def _split_bandwidth(spec: str) -> Tuple[str, Optional[float]]:
    head, sep, tail = spec.rpartition(":h=")
    if not sep:
        return spec, None
    try:
        h = float(tail)
    except ValueError:
        raise InputError(f"bandwidth {tail!r} is not a number") from None
    if not h > 0:
        raise InputError(f"bandwidth must be positive, got {h}")
    return head, h


def parse_functional(spec: str) -> FunctionalSpec:
    text = spec.strip()
    body, h = _split_bandwidth(text)
    family, _, rest = body.partition(":")
    if family == "poly":
        if not rest:
            raise InputError("poly: needs an expression")
        PolynomialExpression(rest).parse()
        return FunctionalSpec("poly", text, expression=rest, bandwidth=h)
    if family == "fn":
        if rest not in ("exp", "sin", "xatan"):
            raise InputError(f"unknown fn: functional {rest!r}")
        return FunctionalSpec("fn", text, name=rest, bandwidth=h)
    if family == "sep":
        kind, _, arg = rest.partition(":")
        try:
            base = SeparableBase(kind)
        except ValueError:
            raise InputError(f"unknown separable base {kind!r}") from None
        p = None
        table = None
        if base is SeparableBase.POW:
            try:
                p = float(arg)
            except ValueError:
                raise InputError(f"sep:pow needs an exponent, got {arg!r}") from None
        elif base is SeparableBase.TABLE:
            if not arg:
                raise InputError("sep:table needs a file path")
            table = arg
        elif arg:
            raise InputError(f"unexpected argument {arg!r} for sep:{kind}")
        if h is not None and not base.needs_smoothing:
            raise InputError(f"bandwidth given for sep:{kind}, which is not smoothed")
        return FunctionalSpec("sep", text, base=base, p=p, table_path=table, bandwidth=h)
    raise InputError(f"unknown functional family {family!r}; expected poly, fn or sep")
