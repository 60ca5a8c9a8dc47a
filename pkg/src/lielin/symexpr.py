"""Symbolic expressions over the plane, its jet space and rational parameters.

Expressions are plain sympy trees built from a restricted vocabulary:
rational constants, declared parameters, the base variables ``x``, ``y``,
jet variables ``y1 .. yN`` standing for ``y', .., y^(N)``, the target
coordinates ``X``, ``Y``, and the operations ``+ * ^ exp sin cos log``.
This module owns parsing, normalization, differentiation, substitution,
numeric evaluation and the two-path zero test that every verification in
the package ultimately rests on.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import mpmath
import sympy as sp

__all__ = [
    "X",
    "Y",
    "DomainViolation",
    "Expr",
    "ParameterTable",
    "ParseError",
    "ZeroTest",
    "differentiate",
    "eval_numeric",
    "is_zero",
    "jet",
    "jet_order",
    "normalize",
    "parse",
    "substitute",
    "to_text",
]

Expr = sp.Expr

x = sp.Symbol("x", positive=True)
y = sp.Symbol("y", positive=True)
X = sp.Symbol("X", real=True)
Y = sp.Symbol("Y", real=True)
# markers for the coefficients of d/dx and d/dy when parsing field lines
DX = sp.Symbol("dx")
DY = sp.Symbol("dy")

_JET_RE = re.compile(r"^y(\d+)$")

_FUNCTIONS = {
    "exp": sp.exp,
    "sin": sp.sin,
    "cos": sp.cos,
    "log": sp.log,
    "sqrt": sp.sqrt,
}
_CONSTANTS = {"E": sp.E, "pi": sp.pi}

# numeric zero-test settings
SAMPLE_POINTS = 8
MAX_ATTEMPTS = 400
RELATIVE_TOL = mpmath.mpf("1e-9")
SINGULAR_MARGIN = mpmath.mpf("1e-6")
WORKING_DPS = 50
# expressions with more operations than this skip the `together` pass
CANONICAL_OPS_LIMIT = 600


def jet(k: int) -> sp.Symbol:
    """Jet coordinate for the k-th derivative of y (``jet(0)`` is y itself)."""
    if k == 0:
        return y
    return sp.Symbol(f"y{k}", real=True)


def jet_order(sym: sp.Symbol) -> int | None:
    if sym == y:
        return 0
    m = _JET_RE.match(sym.name)
    return int(m.group(1)) if m else None


# ---------------------------------------------------------------------------
# parameters


_CONSTRAINT_RE = re.compile(r"^\s*([A-Za-z_]\w*)\s*(!=|>=|<=|==|>|<)\s*(.+?)\s*$")


@dataclass
class ParameterTable:
    """Declared parameters with optional rational sample values.

    ``derived`` holds parameters defined in terms of others (for example
    ``b = (a^2 - 3a)/9``); they are expanded away during parsing.
    """

    samples: dict[str, Fraction | None] = field(default_factory=dict)
    constraints: dict[str, list[str]] = field(default_factory=dict)
    derived: dict[str, Expr] = field(default_factory=dict)

    def declare(self, name: str, sample=None, constraints: Iterable[str] = ()) -> None:
        if name in ("x", "y", "X", "Y", "dx", "dy") or name in _FUNCTIONS:
            raise ValueError(f"'{name}' is reserved and cannot be a parameter")
        self.samples[name] = None if sample is None else Fraction(sample)
        self.constraints[name] = list(constraints)
        self.check()

    def define(self, name: str, value: Expr) -> None:
        self.derived[name] = value

    def symbol(self, name: str) -> sp.Symbol:
        return sp.Symbol(name, real=True)

    @property
    def names(self) -> list[str]:
        return list(self.samples)

    def sample_bindings(self) -> dict[sp.Symbol, sp.Rational]:
        out = {}
        for name, val in self.samples.items():
            if val is not None:
                out[self.symbol(name)] = sp.Rational(val.numerator, val.denominator)
        return out

    def with_samples(self, **overrides) -> "ParameterTable":
        table = ParameterTable(dict(self.samples), {k: list(v) for k, v in self.constraints.items()}, dict(self.derived))
        for name, val in overrides.items():
            if name not in table.samples:
                raise KeyError(f"undeclared parameter '{name}'")
            table.samples[name] = Fraction(val)
        table.check()
        return table

    def satisfied(self, name: str, value: Fraction) -> bool:
        for text in self.constraints.get(name, []):
            m = _CONSTRAINT_RE.match(text)
            if not m:
                continue
            rhs = Fraction(m.group(3).replace(" ", ""))
            op = m.group(2)
            ok = {
                "!=": value != rhs,
                "==": value == rhs,
                ">": value > rhs,
                "<": value < rhs,
                ">=": value >= rhs,
                "<=": value <= rhs,
            }[op]
            if not ok:
                return False
        return True

    def check(self) -> None:
        for name, val in self.samples.items():
            for text in self.constraints.get(name, []):
                if not _CONSTRAINT_RE.match(text):
                    raise ValueError(f"cannot read constraint '{text}' on parameter '{name}'")
            if val is not None and not self.satisfied(name, val):
                raise ValueError(
                    f"sample value {name} = {val} violates {self.constraints[name]}"
                )


# ---------------------------------------------------------------------------
# parsing


class ParseError(ValueError):
    """Syntax or scoping error; ``pos`` is a 0-based character offset."""

    def __init__(self, message: str, pos: int, text: str = ""):
        self.message = message
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}")


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<ident>[A-Za-z_]\w*)|(?P<op>\^|\*\*|[-+*/(),']))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[start]!r}", start, text)
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if kind == "op" and value == "**":
            value = "^"
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text, names, jets):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.names = names
        self.jets = jets

    def peek(self, offset=0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            what = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {what}", pos, self.text)

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ParseError(message, tok[2], self.text)

    def parse(self):
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", pos, self.text)
        return e

    def expr(self):
        sign = 1
        if self.peek()[1] in ("+", "-"):
            sign = -1 if self.take()[1] == "-" else 1
        result = sign * self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            t = self.term()
            result = result + t if op == "+" else result - t
        return result

    def term(self):
        result = self.factor()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            f = self.factor()
            result = result * f if op == "*" else result / f
        return result

    def factor(self):
        if self.peek()[1] == "-":
            self.take()
            return -self.factor()
        if self.peek()[1] == "+":
            self.take()
            return self.factor()
        base = self.base()
        if self.peek()[1] == "^":
            self.take()
            return base ** self.factor()
        return base

    def base(self):
        kind, val, pos = self.take()
        if kind == "num":
            return sp.Rational(val)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "ident":
            if self.peek()[1] == "(":
                if val not in _FUNCTIONS:
                    raise ParseError(f"unknown function '{val}'", pos, self.text)
                self.take()
                arg = self.expr()
                self.expect(")")
                return _FUNCTIONS[val](arg)
            if val == "y" and self.peek()[1] == "'":
                k = 0
                while self.peek()[1] == "'":
                    self.take()
                    k += 1
                return self._jet(k, pos)
            if (
                val == "y"
                and self.jets is not None
                and self.peek()[1] == "^"
                and self.peek(1)[1] == "("
                and self.peek(2)[0] == "num"
                and self.peek(3)[1] == ")"
                and self.peek(2)[1].isdigit()
            ):
                self.take()
                self.take()
                k = int(self.take()[1])
                self.take()
                return self._jet(k, pos)
            if val in self.names:
                return self.names[val]
            m = _JET_RE.match(val)
            if m and self.jets is not None:
                return self._jet(int(m.group(1)), pos)
            if val in _CONSTANTS:
                return _CONSTANTS[val]
            if val in _FUNCTIONS:
                raise ParseError(f"function '{val}' needs an argument", pos, self.text)
            raise ParseError(f"undeclared parameter '{val}'", pos, self.text)
        what = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {what}", pos, self.text)

    def _jet(self, k, pos):
        if self.jets is None:
            raise ParseError("jet variables are not allowed here", pos, self.text)
        if k > self.jets:
            raise ParseError(f"jet variable of order {k} exceeds {self.jets}", pos, self.text)
        return jet(k)


def parse(
    text: str,
    params: ParameterTable | None = None,
    variables: Iterable[str] = ("x", "y"),
    jets: int | None = None,
) -> Expr:
    """Parse ``text`` into a normalized expression.

    ``variables`` lists the admissible coordinate names (any of x, y, X, Y,
    dx, dy).  Jet variables (``y'``, ``y''``, ``y^(4)``, ``y4``) are only
    admitted when ``jets`` gives the maximal order; outside that mode
    ``y^(2)`` is an ordinary power.
    """
    params = params or ParameterTable()
    coords = {"x": x, "y": y, "X": X, "Y": Y, "dx": DX, "dy": DY}
    names: dict[str, Expr] = {}
    for v in variables:
        names[v] = coords[v]
    for p in params.names:
        names[p] = params.symbol(p)
    names.update(params.derived)
    return normalize(_Parser(text, names, jets).parse())


def to_text(e: Expr) -> str:
    """Print in the input grammar (``^`` for powers)."""
    return sp.sstr(e, order="lex").replace("**", "^")


# ---------------------------------------------------------------------------
# algebra


def normalize(e) -> Expr:
    """Deterministic expanded form: sums and products flattened, exponentials
    and powers of sums split, rational coefficients collected.  No factoring."""
    e = sp.sympify(e)
    for _ in range(4):
        nxt = sp.expand(e, power_exp=True, power_base=False, log=False, deep=True)
        if nxt == e:
            break
        e = nxt
    return e


def differentiate(e: Expr, v: sp.Symbol) -> Expr:
    return normalize(sp.diff(e, v))


def substitute(e: Expr, bindings: Mapping) -> Expr:
    """Simultaneous substitution of symbols, then normalization."""
    if not bindings:
        return normalize(e)
    return normalize(sp.sympify(e).xreplace(dict(bindings)))


# ---------------------------------------------------------------------------
# numeric evaluation


class DomainViolation(ArithmeticError):
    """Evaluation left the real domain (log of a nonpositive number, 1/0, ...)."""


class _Near(Exception):
    pass


def _evaluate(e, env, margin=None):
    """Return (value, largest |subterm|) using mpmath at the working precision."""
    biggest = [mpmath.mpf(0)]

    def note(v):
        a = abs(v)
        if a > biggest[0]:
            biggest[0] = a
        return v

    def ev(node):
        if node.is_Symbol:
            try:
                return note(env[node])
            except KeyError:
                raise DomainViolation(f"unbound symbol {node}") from None
        if node.is_Rational:
            return note(mpmath.mpf(node.p) / node.q)
        if node.is_Number:
            return note(mpmath.mpf(sp.Float(node, WORKING_DPS)))
        if node is sp.E:
            return mpmath.e
        if node is sp.pi:
            return mpmath.pi
        if node.is_Add:
            return note(mpmath.fsum(ev(a) for a in node.args))
        if node.is_Mul:
            out = mpmath.mpf(1)
            for a in node.args:
                out *= ev(a)
            return note(out)
        if node.is_Pow:
            b, p = node.args
            bv = ev(b)
            if p.is_Integer:
                n = int(p)
                if n < 0:
                    if bv == 0:
                        raise DomainViolation("division by zero")
                    if margin is not None and abs(bv) < margin:
                        raise _Near()
                return note(bv**n)
            pv = ev(p)
            if bv < 0:
                raise DomainViolation("non-integer power of a negative number")
            if bv == 0:
                if pv <= 0:
                    raise DomainViolation("zero to a nonpositive power")
                return note(mpmath.mpf(0))
            if margin is not None and abs(bv) < margin:
                raise _Near()
            return note(mpmath.power(bv, pv))
        if isinstance(node, sp.exp):
            return note(mpmath.exp(ev(node.args[0])))
        if isinstance(node, sp.log):
            a = ev(node.args[0])
            if a <= 0:
                raise DomainViolation("log of a nonpositive number")
            if margin is not None and a < margin:
                raise _Near()
            return note(mpmath.log(a))
        if isinstance(node, sp.sin):
            return note(mpmath.sin(ev(node.args[0])))
        if isinstance(node, sp.cos):
            return note(mpmath.cos(ev(node.args[0])))
        if isinstance(node, sp.tan):
            return note(mpmath.tan(ev(node.args[0])))
        raise DomainViolation(f"cannot evaluate {type(node).__name__}")

    with mpmath.workdps(WORKING_DPS):
        value = ev(sp.sympify(e))
    return value, biggest[0]


def _env(point: Mapping) -> dict:
    env = {}
    for k, v in point.items():
        sym = k if isinstance(k, sp.Symbol) else _symbol_by_name(k)
        if isinstance(v, Fraction):
            env[sym] = mpmath.mpf(v.numerator) / v.denominator
        elif isinstance(v, sp.Rational):
            env[sym] = mpmath.mpf(v.p) / v.q
        else:
            env[sym] = mpmath.mpf(v)
    return env


def _symbol_by_name(name: str) -> sp.Symbol:
    if name in ("x", "y", "X", "Y"):
        return {"x": x, "y": y, "X": X, "Y": Y}[name]
    if _JET_RE.match(name):
        return jet(int(name[1:]))
    return sp.Symbol(name, real=True)


def eval_numeric(e: Expr, point: Mapping) -> float:
    """Evaluate at ``point`` (symbol or name -> number).

    Raises :class:`DomainViolation` instead of returning NaN or a complex.
    """
    with mpmath.workdps(WORKING_DPS):
        value, _ = _evaluate(e, _env(point))
    return float(value)


def evaluate_mp(e: Expr, point: Mapping):
    """High-precision variant of :func:`eval_numeric` (returns an mpf)."""
    with mpmath.workdps(WORKING_DPS):
        value, _ = _evaluate(e, _env(point))
    return value


# ---------------------------------------------------------------------------
# zero testing

PROVED = "proved"
PROBABILISTIC = "probabilistically-verified"
FAILED = "failed"
INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class ZeroTest:
    """Outcome of :func:`is_zero`.

    ``value`` is True/False, or None when no sample point could be evaluated.
    ``path`` names the deciding route: "canonical" or "probabilistic".
    """

    value: bool | None
    path: str
    points: int = 0

    def __bool__(self) -> bool:
        return self.value is True

    @property
    def verdict(self) -> str:
        if self.value is None:
            return INDETERMINATE
        if not self.value:
            return FAILED
        return PROVED if self.path == "canonical" else PROBABILISTIC


def random_rational(rng: random.Random, lo=-3, hi=3, max_den=7) -> Fraction:
    den = rng.randint(1, max_den)
    num = rng.randint(lo * den, hi * den)
    return Fraction(num, den)


def sample_point(symbols: Iterable[sp.Symbol], rng: random.Random, params: ParameterTable | None = None) -> dict:
    """Random rational point; positive symbols are drawn from (0, 3]."""
    point = {}
    samples = params.sample_bindings() if params else {}
    for s in sorted(symbols, key=lambda t: t.name):
        if s in samples:
            point[s] = Fraction(int(samples[s].p), int(samples[s].q))
        elif params is not None and s.name in params.samples:
            v = random_rational(rng)
            while not params.satisfied(s.name, v):
                v = random_rational(rng)
            point[s] = v
        elif s.is_positive:
            v = Fraction(0)
            while v <= 0:
                v = random_rational(rng, 0, 3)
            point[s] = v
        else:
            point[s] = random_rational(rng)
    return point


def _free(e) -> set:
    return {s for s in e.free_symbols if isinstance(s, sp.Symbol)}


def _canonical_zero(e) -> bool | None:
    n = normalize(e)
    if n == 0:
        return True
    if n.is_number:
        # an exact constant: decide exactly when sympy can
        z = n.equals(0)
        return bool(z) if z is not None else None
    if sp.count_ops(n) <= CANONICAL_OPS_LIMIT:
        num, _ = sp.fraction(sp.together(n))
        if normalize(num) == 0:
            return True
    return None


def is_zero(
    e: Expr,
    params: ParameterTable | None = None,
    seed: int = 0,
    points: int = SAMPLE_POINTS,
) -> ZeroTest:
    """Decide whether ``e`` vanishes identically.

    The canonical route normalizes (and, for moderate sizes, brings to a
    common denominator); a zero tree settles it.  Otherwise ``e`` is
    evaluated at ``points`` seeded random rational points, skipping points
    near singularities, with parameters at their sample values.
    """
    e = sp.sympify(e)
    if _canonical_zero(e):
        return ZeroTest(True, "canonical")
    rng = random.Random(seed)
    symbols = _free(e)
    good = 0
    attempts = 0
    while good < points and attempts < MAX_ATTEMPTS:
        attempts += 1
        pt = sample_point(symbols, rng, params)
        try:
            with mpmath.workdps(WORKING_DPS):
                value, biggest = _evaluate(e, _env(pt), margin=SINGULAR_MARGIN)
        except (DomainViolation, _Near, ZeroDivisionError, OverflowError, ValueError):
            continue
        if not mpmath.isfinite(value):
            continue
        good += 1
        if abs(value) >= RELATIVE_TOL * (1 + biggest):
            return ZeroTest(False, "probabilistic", good)
    if good < points:
        return ZeroTest(None, "probabilistic", good)
    return ZeroTest(True, "probabilistic", good)
