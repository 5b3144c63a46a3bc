"""Theory files (``.jvt``): a small declarative language for bundles,
Lagrangians, projectable vector fields, gauge generators and metrics.

Example::

    bundle { base: [t, x]; fields: [u]; params: [w]; }
    metric g = [[1, 0], [0, -1]]
    lagrangian L = 1/2*(u_t^2 - u_x^2) - 1/2*w^2*u^2
    vfield X = d/dt
    gauge R(chi) : u -> chi_t

Statements end at a newline or ``;``; newlines inside brackets are ignored
and ``#`` starts a comment. Jets are written ``u_tx`` (one base coordinate
per suffix letter, matched greedily) or ``u[1,1]``. Only integer and
rational literals are accepted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import JetvarError, JetvarParseError
from .jetspace import Bundle, MultiIndex, ProjectableVectorField
from .render import to_text
from .symkernel import Expr, Param, cos, exp, sin
from .variational import GaugeGenerator, Lagrangian

__all__ = ["TheoryFile", "parse", "parse_expr", "print_theory", "KEYWORDS", "MAX_DEPTH", "MAX_EXPONENT"]

KEYWORDS = frozenset(
    {"bundle", "base", "fields", "params", "metric", "lagrangian", "vfield", "gauge", "sin", "cos", "exp", "d"}
)
FUNCTIONS = {"sin": sin, "cos": cos, "exp": exp}
MAX_DEPTH = 200
MAX_EXPONENT = 64
MAX_DIGITS = 200


@dataclass
class TheoryFile:
    bundle: Bundle
    params: tuple[str, ...] = ()
    metric: tuple[tuple[Fraction, ...], ...] | None = None
    metric_name: str | None = None
    lagrangians: dict[str, Lagrangian] = field(default_factory=dict)
    vfields: dict[str, ProjectableVectorField] = field(default_factory=dict)
    gauges: dict[str, GaugeGenerator] = field(default_factory=dict)

    def names(self) -> list[str]:
        return list(self.lagrangians) + list(self.vfields) + list(self.gauges)


# ---------------------------------------------------------------------------
# lexer
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Token:
    kind: str  # NUM, IDENT, OP, NL, EOF
    value: object
    line: int
    col: int
    suffix: str | None = None  # jet suffix letters after '_'


_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9]*")
_SUFFIX = re.compile(r"_([A-Za-z]+)")
_NUM = re.compile(r"[0-9]+")
_OPS = ("->", "+", "-", "*", "/", "^", "(", ")", "[", "]", "{", "}", ",", ";", ":", "=")
_OPEN = {"(": ")", "[": "]", "{": "}"}


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    depth: list[str] = []
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            if not depth:
                tokens.append(Token("NL", None, line, col))
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        m = _NUM.match(text, i)
        if m:
            digits = m.group()
            if m.end() < n and text[m.end()] == ".":
                raise JetvarParseError("decimal literals are not supported; write a rational p/q", line, col)
            if len(digits) > MAX_DIGITS:
                raise JetvarParseError("integer literal too long", line, col)
            tokens.append(Token("NUM", int(digits), line, col))
            col += m.end() - i
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            name = m.group()
            end = m.end()
            suffix = None
            s = _SUFFIX.match(text, end)
            if s:
                suffix = s.group(1)
                end = s.end()
            elif end < n and text[end] == "_":
                raise JetvarParseError("expected base-coordinate letters after '_'", line, col + end - i)
            tokens.append(Token("IDENT", name, line, col, suffix))
            col += end - i
            i = end
            continue
        if ch == ".":
            raise JetvarParseError("decimal literals are not supported; write a rational p/q", line, col)
        for op in _OPS:
            if text.startswith(op, i):
                if op in _OPEN:
                    depth.append(_OPEN[op])
                elif op in (")", "]", "}"):
                    if not depth or depth[-1] != op:
                        raise JetvarParseError(f"unbalanced {op!r}", line, col)
                    depth.pop()
                tokens.append(Token("OP", op, line, col))
                i += len(op)
                col += len(op)
                break
        else:
            raise JetvarParseError(f"unexpected character {ch!r}", line, col)
    if depth:
        raise JetvarParseError(f"missing {depth[-1]!r} before end of input", line, col)
    tokens.append(Token("EOF", None, line, col))
    return tokens


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------
class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.depth = 0

    # -- token helpers ------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        return JetvarParseError(message, tok.line, tok.col)

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "EOF":
            self.pos += 1
        return t

    def at_op(self, op: str) -> bool:
        return self.tok.kind == "OP" and self.tok.value == op

    def expect_op(self, op: str) -> Token:
        if not self.at_op(op):
            raise self.error(f"expected {op!r}, found {self._describe(self.tok)}")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        t = self.tok
        if t.kind != "IDENT":
            raise self.error(f"expected {what}, found {self._describe(t)}")
        if t.suffix is not None:
            raise self.error(f"{what} may not carry a derivative suffix")
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        t = self.tok
        if t.kind != "IDENT" or t.value != word or t.suffix is not None:
            raise self.error(f"expected {word!r}, found {self._describe(t)}")
        return self.advance()

    @staticmethod
    def _describe(t: Token) -> str:
        if t.kind == "EOF":
            return "end of input"
        if t.kind == "NL":
            return "end of line"
        if t.kind == "IDENT":
            return repr(t.value + ("_" + t.suffix if t.suffix else ""))
        return repr(str(t.value))

    def skip_separators(self):
        while self.tok.kind == "NL" or self.at_op(";"):
            self.advance()

    def end_statement(self):
        if self.tok.kind in ("NL", "EOF") or self.at_op(";"):
            self.skip_separators()
            return
        raise self.error(f"expected end of statement, found {self._describe(self.tok)}")

    def enter(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise self.error("expression nested too deeply")

    # -- expressions --------------------------------------------------
    def expression(self, ctx: _Context) -> Expr:
        self.enter()
        value = self.term(ctx)
        while self.at_op("+") or self.at_op("-"):
            op = self.advance().value
            rhs = self.term(ctx)
            value = value + rhs if op == "+" else value - rhs
        self.depth -= 1
        return value

    def term(self, ctx: _Context) -> Expr:
        value = self.unary(ctx)
        while self.at_op("*") or self.at_op("/"):
            op_tok = self.advance()
            rhs = self.unary(ctx)
            if op_tok.value == "*":
                value = value * rhs
            else:
                c = rhs.as_constant()
                if c is None:
                    raise self.error("division is only allowed by non-zero constants", op_tok)
                if c == 0:
                    raise self.error("division by zero", op_tok)
                value = value / c
        return value

    def unary(self, ctx: _Context) -> Expr:
        if self.at_op("-") or self.at_op("+"):
            op = self.advance().value
            self.enter()
            inner = self.unary(ctx)
            self.depth -= 1
            return -inner if op == "-" else inner
        return self.power(ctx)

    def power(self, ctx: _Context) -> Expr:
        base = self.primary(ctx)
        if self.at_op("^"):
            op_tok = self.advance()
            neg = False
            if self.at_op("-"):
                self.advance()
                neg = True
            t = self.tok
            if t.kind != "NUM":
                raise self.error("exponent must be an integer literal")
            self.advance()
            k = -t.value if neg else t.value
            if abs(k) > MAX_EXPONENT:
                raise self.error(f"exponent larger than {MAX_EXPONENT}", t)
            if k < 0 and base.as_constant() is None:
                raise self.error("negative exponents are only allowed on constants", op_tok)
            if k < 0 and base.as_constant() == 0:
                raise self.error("division by zero", op_tok)
            if self.at_op("^"):
                raise self.error("chained exponents need parentheses")
            return base**k
        return base

    def primary(self, ctx: _Context) -> Expr:
        t = self.tok
        if t.kind == "NUM":
            self.advance()
            return ctx.bundle.lift(t.value)
        if self.at_op("("):
            self.advance()
            value = self.expression(ctx)
            self.expect_op(")")
            return value
        if t.kind == "IDENT":
            if ctx.operators is not None and t.value == "d" and t.suffix is None:
                return self.operator(ctx)
            if t.value in FUNCTIONS and t.suffix is None:
                self.advance()
                self.expect_op("(")
                arg = self.expression(ctx)
                self.expect_op(")")
                return FUNCTIONS[t.value](arg).with_bundle(ctx.bundle)
            self.advance()
            return ctx.resolve(self, t)
        raise self.error(f"expected an expression, found {self._describe(t)}")

    def operator(self, ctx: _Context) -> Expr:
        start = self.advance()
        self.expect_op("/")
        t = self.tok
        if t.kind != "IDENT" or not t.value.startswith("d") or len(t.value) < 2 or t.suffix is not None:
            raise self.error("expected d/d<name>", start)
        self.advance()
        name = t.value[1:]
        if name not in ctx.operators:
            raise self.error(f"d/d{name}: {name!r} is not a base coordinate or field", t)
        return Expr.atom(ctx.operators[name], ctx.bundle)


class _Context:
    """Name resolution for one expression."""

    def __init__(self, bundle: Bundle, operators: dict | None = None):
        self.bundle = bundle
        self.operators = operators

    def resolve(self, p: _Parser, t: Token) -> Expr:
        b = self.bundle
        name = t.value
        if name in KEYWORDS:
            raise p.error(f"{name!r} is a reserved word", t)
        if name in b.fields:
            mi = [0] * b.n
            if t.suffix is not None:
                for coord in _split_suffix(p, t, b):
                    mi[coord] += 1
            elif p.at_op("["):
                mi = self.bracket(p, t)
            return b.jet(name, mi)
        if t.suffix is not None:
            raise p.error(f"derivative suffix on {name!r}, which is not a field", t)
        if name in b.base:
            return b.coord(name)
        if name in b.params:
            return b.param(name)
        raise p.error(f"undeclared identifier {name!r}", t)

    def bracket(self, p: _Parser, t: Token) -> list[int]:
        p.expect_op("[")
        entries = []
        while True:
            tk = p.tok
            if tk.kind != "NUM":
                raise p.error("multi-index entries must be non-negative integers")
            p.advance()
            entries.append(tk.value)
            if p.at_op(","):
                p.advance()
                continue
            break
        p.expect_op("]")
        if len(entries) != self.bundle.n:
            raise p.error(
                f"multi-index of length {len(entries)} but the base has dimension {self.bundle.n}", t
            )
        if sum(entries) > 10_000:
            raise p.error("multi-index order too large", t)
        return entries


def _split_suffix(p: _Parser, t: Token, b: Bundle) -> list[int]:
    out = []
    s = t.suffix
    names = sorted(b.base, key=len, reverse=True)
    i = 0
    while i < len(s):
        for name in names:
            if s.startswith(name, i):
                out.append(b.base.index(name))
                i += len(name)
                break
        else:
            raise p.error(f"undeclared coordinate {s[i]!r} in derivative suffix of {t.value!r}", t)
    return out


# ---------------------------------------------------------------------------
# statements
# ---------------------------------------------------------------------------
def _name_list(p: _Parser, what: str) -> list[tuple[str, Token]]:
    p.expect_op("[")
    out = []
    if p.at_op("]"):
        p.advance()
        return out
    while True:
        t = p.expect_ident(what)
        out.append((t.value, t))
        if p.at_op(","):
            p.advance()
            continue
        break
    p.expect_op("]")
    return out


def _bundle_block(p: _Parser) -> tuple[Bundle, tuple[str, ...]]:
    p.expect_keyword("bundle")
    p.expect_op("{")
    seen: dict[str, list] = {}
    while not p.at_op("}"):
        key = p.expect_ident("'base', 'fields' or 'params'")
        if key.value not in ("base", "fields", "params"):
            raise p.error(f"unknown bundle entry {key.value!r}", key)
        if key.value in seen:
            raise p.error(f"duplicate bundle entry {key.value!r}", key)
        p.expect_op(":")
        seen[key.value] = _name_list(p, key.value)
        if p.at_op(";"):
            p.advance()
        elif not p.at_op("}"):
            raise p.error("expected ';' or '}'")
    p.expect_op("}")
    if "base" not in seen or not seen["base"]:
        raise p.error("the bundle needs a non-empty 'base' list")
    if "fields" not in seen or not seen["fields"]:
        raise p.error("the bundle needs a non-empty 'fields' list")
    names: set[str] = set()
    for group in ("base", "fields", "params"):
        for name, tok in seen.get(group, []):
            if name in KEYWORDS:
                raise p.error(f"{name!r} is a reserved word", tok)
            if name in names:
                raise p.error(f"duplicate name {name!r}", tok)
            names.add(name)
    params = tuple(n for n, _ in seen.get("params", []))
    bundle = Bundle(tuple(n for n, _ in seen["base"]), tuple(n for n, _ in seen["fields"]), params=params)
    return bundle, params


def _rational(p: _Parser) -> Fraction:
    sign = 1
    while p.at_op("-") or p.at_op("+"):
        if p.advance().value == "-":
            sign = -sign
    t = p.tok
    if t.kind != "NUM":
        raise p.error("metric entries must be rational constants")
    p.advance()
    value = Fraction(t.value)
    if p.at_op("/"):
        p.advance()
        d = p.tok
        if d.kind != "NUM":
            raise p.error("expected a denominator")
        p.advance()
        if d.value == 0:
            raise p.error("division by zero", d)
        value /= d.value
    return sign * value


def _metric(p: _Parser, theory: TheoryFile, taken: set[str]):
    start = p.expect_keyword("metric")
    if theory.metric is not None:
        raise p.error("only one metric may be declared", start)
    name = _new_name(p, taken)
    p.expect_op("=")
    p.expect_op("[")
    rows = []
    while True:
        p.expect_op("[")
        row = [_rational(p)]
        while p.at_op(","):
            p.advance()
            row.append(_rational(p))
        p.expect_op("]")
        rows.append(tuple(row))
        if p.at_op(","):
            p.advance()
            continue
        break
    p.expect_op("]")
    n = theory.bundle.n
    if len(rows) != n or any(len(r) != n for r in rows):
        raise p.error(f"the metric must be a {n}x{n} matrix", start)
    if any(rows[a][b] != rows[b][a] for a in range(n) for b in range(n)):
        raise p.error("the metric must be symmetric", start)
    theory.metric = tuple(rows)
    theory.metric_name = name


def _new_name(p: _Parser, taken: set[str]) -> str:
    t = p.expect_ident("name")
    if t.value in KEYWORDS:
        raise p.error(f"{t.value!r} is a reserved word", t)
    if t.value in taken:
        raise p.error(f"{t.value!r} is already declared", t)
    taken.add(t.value)
    return t.value


def _lagrangian(p: _Parser, theory: TheoryFile, taken: set[str]):
    p.expect_keyword("lagrangian")
    name = _new_name(p, taken)
    p.expect_op("=")
    expr = p.expression(_Context(theory.bundle))
    theory.lagrangians[name] = Lagrangian(expr, theory.bundle)


def _vfield(p: _Parser, theory: TheoryFile, taken: set[str]):
    start = p.expect_keyword("vfield")
    name = _new_name(p, taken)
    p.expect_op("=")
    b = theory.bundle
    ops = {}
    for k, c in enumerate(b.base):
        ops[c] = Param(f"@base{k}")
    for k, f in enumerate(b.fields):
        ops[f] = Param(f"@fiber{k}")
    expr = p.expression(_Context(b, ops))
    markers = set(ops.values())
    split = expr.collect(lambda f: f in markers)
    base = [b.zero() for _ in range(b.n)]
    fiber = {}
    for mono, coef in split.items():
        if len(mono) != 1 or mono[0][1] != 1:
            raise p.error("a vector field must be linear in the d/d operators", start)
        tag = mono[0][0].name
        if any(isinstance(a, Param) and a in markers for a in coef.atoms()):
            raise p.error("d/d operators may not appear inside functions", start)
        k = int(tag[6:]) if tag.startswith("@fiber") else int(tag[5:])
        if tag.startswith("@base"):
            base[k] = coef
        else:
            fiber[k] = coef
    try:
        theory.vfields[name] = ProjectableVectorField(b, tuple(base), fiber)
    except JetvarError as exc:
        raise p.error(str(exc), start) from None


def _gauge(p: _Parser, theory: TheoryFile, taken: set[str]):
    start = p.expect_keyword("gauge")
    name = _new_name(p, taken)
    b = theory.bundle
    p.expect_op("(")
    params = []
    while True:
        t = p.expect_ident("parameter field")
        if t.value in KEYWORDS:
            raise p.error(f"{t.value!r} is a reserved word", t)
        if t.value in b.base or t.value in b.fields or t.value in b.params or t.value in params:
            raise p.error(f"parameter field {t.value!r} clashes with an existing name", t)
        params.append(t.value)
        if p.at_op(","):
            p.advance()
            continue
        break
    p.expect_op(")")
    p.expect_op(":")
    ext = b.extend(params)
    variations: dict[str, Expr] = {}
    if p.tok.kind not in ("NL", "EOF") and not p.at_op(";"):
        while True:
            t = p.expect_ident("field")
            if t.value not in b.fields:
                raise p.error(f"undeclared field {t.value!r}", t)
            if t.value in variations:
                raise p.error(f"duplicate variation for {t.value!r}", t)
            p.expect_op("->")
            variations[t.value] = p.expression(_Context(ext))
            if p.at_op(","):
                p.advance()
                continue
            break
    try:
        theory.gauges[name] = GaugeGenerator.from_variation(ext, params, variations)
    except JetvarError as exc:
        raise p.error(str(exc), start) from None


_STATEMENTS = {"metric": _metric, "lagrangian": _lagrangian, "vfield": _vfield, "gauge": _gauge}


def _decode(text) -> str:
    if isinstance(text, (bytes, bytearray, memoryview)):
        try:
            return bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise JetvarParseError(f"input is not valid UTF-8 (byte {exc.start})") from None
    if not isinstance(text, str):
        raise JetvarParseError("theory text must be str or bytes")
    return text


def parse(text) -> TheoryFile:
    """Parse theory text (``str`` or UTF-8 ``bytes``) into a :class:`TheoryFile`."""
    text = _decode(text)
    try:
        p = _Parser(_tokenize(text))
        p.skip_separators()
        bundle, params = _bundle_block(p)
        p.end_statement()
        theory = TheoryFile(bundle, params)
        taken = set(bundle.base) | set(bundle.fields) | set(bundle.params)
        while p.tok.kind != "EOF":
            t = p.tok
            handler = _STATEMENTS.get(t.value) if t.kind == "IDENT" and t.suffix is None else None
            if handler is None:
                if t.kind == "IDENT" and t.value == "bundle":
                    raise p.error("only one bundle may be declared")
                raise p.error(f"expected a declaration, found {p._describe(t)}")
            handler(p, theory, taken)
            p.end_statement()
        return theory
    except JetvarParseError:
        raise
    except JetvarError as exc:
        raise JetvarParseError(str(exc)) from None
    except RecursionError:
        raise JetvarParseError("input nested too deeply") from None


def parse_expr(text, bundle: Bundle) -> Expr:
    """Parse a single expression against ``bundle``."""
    text = _decode(text)
    try:
        p = _Parser(_tokenize(text))
        p.skip_separators()
        e = p.expression(_Context(bundle))
        p.skip_separators()
        if p.tok.kind != "EOF":
            raise p.error(f"unexpected {p._describe(p.tok)} after expression")
        return e
    except JetvarParseError:
        raise
    except JetvarError as exc:
        raise JetvarParseError(str(exc)) from None
    except RecursionError:
        raise JetvarParseError("input nested too deeply") from None


# ---------------------------------------------------------------------------
# printer
# ---------------------------------------------------------------------------
def _frac(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _vfield_text(u: ProjectableVectorField) -> str:
    b = u.bundle
    parts = []
    for k, c in enumerate(u.base):
        if c:
            parts.append((c, "d/d" + b.base[k]))
    for i, c in u.fiber.items():
        parts.append((c, "d/d" + b.fields[i]))
    if not parts:
        return "0"
    out = []
    for c, op in parts:
        if c == 1:
            out.append(op)
        elif len(c) == 1:
            out.append(f"{to_text(c, b)}*{op}")
        else:
            out.append(f"({to_text(c, b)})*{op}")
    return " + ".join(out)


def print_theory(theory: TheoryFile) -> str:
    """Render a theory in the syntax accepted by :func:`parse`."""
    b = theory.bundle
    head = f"bundle {{ base: [{', '.join(b.base)}]; fields: [{', '.join(b.fields)}];"
    if theory.params:
        head += f" params: [{', '.join(theory.params)}];"
    lines = [head + " }"]
    if theory.metric is not None:
        rows = ", ".join("[" + ", ".join(_frac(c) for c in row) + "]" for row in theory.metric)
        lines.append(f"metric {theory.metric_name} = [{rows}]")
    for name, lag in theory.lagrangians.items():
        lines.append(f"lagrangian {name} = {to_text(lag.density, b)}")
    for name, u in theory.vfields.items():
        lines.append(f"vfield {name} = {_vfield_text(u)}")
    for name, g in theory.gauges.items():
        ext = g.bundle
        params = ", ".join(ext.fields[A] for A in g.params)
        maps = ", ".join(f"{ext.fields[i]} -> {to_text(v, ext)}" for i, v in g.variation().components.items())
        lines.append(f"gauge {name}({params}) : {maps}".rstrip())
    return "\n".join(lines) + "\n"
