"""Symbol expressions: a small parser producing polynomials in ``z, conj(z)``.

Grammar (whitespace is ignored)::

    expr    := term (("+" | "-") term)*
    term    := factor ("*" factor)*
    factor  := ("+" | "-") factor | primary
    primary := NUMBER | IDENT | "(" expr ")"
    NUMBER  := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
    IDENT   := "w" j                   |z_j|^2
             | "re_" i j | "im_" i j   Re / Im of z_i conj(z_j)
             | "rh_" i j | "ih_" i j   Re / Im of z_i z_j  (fiber dependent)

Indices are single digits (``re_01``) or underscore separated
(``re_0_1``). The ``rh``/``ih`` variables change under ``z -> e^{it} z`` and
are accepted only when ``allow_fiber_dependent=True``.

A parsed symbol is stored as a dictionary ``{(a, b): c}`` meaning
``sum c z^a conj(z)^b``.
"""

from dataclasses import dataclass, field
import re

import numpy as np

from .exceptions import NonPositiveSymbolError, PreconditionError, SymbolSyntaxError

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*()]))"
)
_IDENT = re.compile(r"^(?:w(?P<w>\d+)|(?P<kind>re|im|rh|ih)_(?P<i>\d)_?(?P<j>\d))$")
_IDENT_LONG = re.compile(r"^(?P<kind>re|im|rh|ih)_(?P<i>\d+)_(?P<j>\d+)$")

N_BOUND_SAMPLES = 4096


def _tokenize(text):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = len(text) - len(text[pos:].lstrip())
            raise SymbolSyntaxError(f"unexpected character {text[bad]!r}", bad)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _mul(p, q):
    out = {}
    for (a1, b1), c1 in p.items():
        for (a2, b2), c2 in q.items():
            key = (tuple(x + y for x, y in zip(a1, a2)), tuple(x + y for x, y in zip(b1, b2)))
            out[key] = out.get(key, 0) + c1 * c2
    return {k: v for k, v in out.items() if v != 0}


def _add(p, q, sign=1):
    out = dict(p)
    for k, v in q.items():
        out[k] = out.get(k, 0) + sign * v
    return {k: v for k, v in out.items() if v != 0}


class _Parser:
    def __init__(self, text, d, allow_fiber_dependent):
        self.text = text
        self.n = d + 1
        self.allow = allow_fiber_dependent
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def zero(self):
        return (0,) * self.n

    def const(self, c):
        return {(self.zero(), self.zero()): c} if c != 0 else {}

    def unit(self, j):
        e = [0] * self.n
        e[j] = 1
        return tuple(e)

    def parse(self):
        poly = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise SymbolSyntaxError(f"unexpected token {value!r}", pos)
        return poly

    def expr(self):
        poly = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, op, _ = self.take()
            poly = _add(poly, self.term(), 1 if op == "+" else -1)
        return poly

    def term(self):
        poly = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            poly = _mul(poly, self.factor())
        return poly

    def factor(self):
        kind, value, pos = self.peek()
        if kind == "op" and value in ("+", "-"):
            self.take()
            inner = self.factor()
            return inner if value == "+" else {k: -v for k, v in inner.items()}
        return self.primary()

    def primary(self):
        kind, value, pos = self.take()
        if kind == "num":
            return self.const(float(value))
        if kind == "ident":
            return self.variable(value, pos)
        if kind == "op" and value == "(":
            poly = self.expr()
            kind2, value2, pos2 = self.take()
            if value2 != ")":
                raise SymbolSyntaxError("expected ')'", pos2)
            return poly
        if kind == "end":
            raise SymbolSyntaxError("unexpected end of expression", pos)
        raise SymbolSyntaxError(f"unexpected token {value!r}", pos)

    def variable(self, name, pos):
        m = _IDENT.match(name) or _IDENT_LONG.match(name)
        if not m:
            raise SymbolSyntaxError(f"unknown identifier {name!r}", pos)
        groups = m.groupdict()
        if groups.get("w") is not None:
            j = int(groups["w"])
            self.check_index(j, name, pos)
            e = self.unit(j)
            return {(e, e): 1.0}
        kind, i, j = groups["kind"], int(groups["i"]), int(groups["j"])
        self.check_index(i, name, pos)
        self.check_index(j, name, pos)
        ei, ej = self.unit(i), self.unit(j)
        if kind in ("rh", "ih") and not self.allow:
            raise SymbolSyntaxError(f"{name!r} is not invariant under the structure circle action", pos)
        if kind in ("re", "im"):
            # z_i conj(z_j) and its conjugate z_j conj(z_i)
            first, second = (ei, ej), (ej, ei)
        else:
            # z_i z_j and its conjugate conj(z_i z_j)
            both = tuple(a + b for a, b in zip(ei, ej))
            first, second = (both, self.zero()), (self.zero(), both)
        if kind in ("re", "rh"):
            return _add({first: 0.5}, {second: 0.5})
        return _add({first: -0.5j}, {second: 0.5j})

    def check_index(self, j, name, pos):
        if j >= self.n:
            raise SymbolSyntaxError(f"index in {name!r} exceeds d = {self.n - 1}", pos)


@dataclass(frozen=True)
class SymbolFunction:
    """A real function on ``X`` given as a polynomial in ``z`` and ``conj(z)``.

    Instances are normally produced by :func:`parse_symbol`; use
    :meth:`from_callable` to wrap an arbitrary vectorized function (only the
    quadrature backends accept those).
    """

    text: str
    d: int
    terms: dict = field(default=None, repr=False)
    bounds: tuple = (None, None)
    func: object = field(default=None, repr=False, compare=False)

    @classmethod
    def from_callable(cls, func, d, name="<callable>", rng=None):
        sym = cls(text=name, d=d, terms=None, func=func)
        object.__setattr__(sym, "bounds", sampled_bounds(sym, rng))
        return sym

    @property
    def is_polynomial(self):
        return self.terms is not None

    @property
    def depends_only_on_w(self):
        return self.is_polynomial and all(a == b for a, b in self.terms)

    @property
    def is_fiber_invariant(self):
        if not self.is_polynomial:
            return None
        return all(sum(a) == sum(b) for a, b in self.terms)

    @property
    def degree(self):
        if not self.is_polynomial or not self.terms:
            return 0
        return max(sum(a) + sum(b) for a, b in self.terms)

    @property
    def is_constant(self):
        return self.is_polynomial and all(sum(a) + sum(b) == 0 for a, b in self.terms)

    def weight_under(self, weights):
        """Set of integer weights ``<p, a - b>`` of the monomials."""
        p = np.asarray(weights)
        return {int(np.dot(p, np.subtract(a, b))) for a, b in self.terms}

    def __call__(self, z):
        z = np.asarray(z.z if hasattr(z, "z") and not isinstance(z, np.ndarray) else z, dtype=complex)
        if self.func is not None:
            return np.asarray(self.func(z), dtype=float)
        out = np.zeros(z.shape[:-1], dtype=complex)
        zc = np.conj(z)
        for (a, b), c in self.terms.items():
            out = out + c * np.prod(z ** np.array(a), axis=-1) * np.prod(zc ** np.array(b), axis=-1)
        return out.real

    @property
    def min(self):
        return self.bounds[0]

    @property
    def max(self):
        return self.bounds[1]


def sampled_bounds(sym, rng=None, n=N_BOUND_SAMPLES):
    """Min / max of ``sym`` over random points of ``X`` and the torus-fixed
    points ``e_j``."""
    rng = np.random.default_rng(0) if rng is None else rng
    d = sym.d
    z = rng.normal(size=(n, d + 1)) + 1j * rng.normal(size=(n, d + 1))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    z = np.vstack([z, np.eye(d + 1, dtype=complex)])
    vals = sym(z)
    return float(vals.min()), float(vals.max())


def _affine_bounds(terms, d):
    const = 0.0
    coef = np.zeros(d + 1)
    for (a, b), c in terms.items():
        if sum(a) == 0:
            const += c.real
        else:
            coef[int(np.argmax(a))] += c.real
    vals = const + coef
    return float(vals.min()), float(vals.max())


def parse_symbol(text, d=1, require_positive=True, allow_fiber_dependent=False):
    """Parse ``text`` into a :class:`SymbolFunction` on ``S^{2d+1}``.

    Bounds are exact (simplex vertices) when the expression is affine in the
    ``w_j``; otherwise they are sampled.

    Raises
    ------
    SymbolSyntaxError
        Malformed text, with the character position.
    NonPositiveSymbolError
        ``require_positive`` and the minimum is not ``> 0``.
    """
    if d < 1:
        raise PreconditionError("d must be >= 1")
    terms = _Parser(text, d, allow_fiber_dependent).parse()
    terms = {k: complex(v) for k, v in terms.items()}
    sym = SymbolFunction(text=text, d=d, terms=terms)
    affine = all(a == b and sum(a) <= 1 for a, b in terms)
    bounds = _affine_bounds(terms, d) if affine else sampled_bounds(sym)
    object.__setattr__(sym, "bounds", bounds)
    if require_positive and not bounds[0] > 0:
        raise NonPositiveSymbolError(f"symbol {text!r} has minimum {bounds[0]:.6g} <= 0")
    return sym
