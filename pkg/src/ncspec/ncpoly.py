"""Noncommutative polynomials in circular symbols Y1..Yu and deterministic
symbols A1..At (with optional adjoints A_k*).

A polynomial is a finite sum of coefficiented words.  Words are flat tuples of
symbols; no commutation is ever applied, only like-term combination.  The
ASCII grammar accepted by :func:`parse_polynomial`:

    expr    := term (('+'|'-') term)*
    term    := factor ('*' factor)*
    factor  := primary ('^' uint)?
    primary := complex-literal | 'Y' uint | 'A' uint '*'? | '(' expr ')'
    complex-literal := decimal | decimal 'i' | 'i' | '(' decimal '/' decimal ')'

Whitespace is insignificant and juxtaposition is not multiplication ('*' is
required).  A '*' directly after ``A<k>`` is the adjoint marker only when it
cannot be read as multiplication (i.e. it is not followed by something that
starts a factor), so ``A1*A2`` is the product A1·A2 while ``A1* * A2`` or
``A1**A2`` is (A1 adjoint)·A2.

There is deliberately no unary minus in the grammar; the canonical renderer
emits ``0 - ...`` when a leading monomial carries a negative coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

__all__ = [
    "Symbol",
    "Monomial",
    "NcPolynomial",
    "MatrixAssignment",
    "ParseError",
    "SymbolIndexError",
    "DimensionMismatchError",
    "MissingBindingError",
    "UnsupportedStarredCircularError",
    "parse_polynomial",
    "render",
    "evaluate",
    "zero_circulars",
    "adjoint",
    "constant",
    "symbol_poly",
]

CIRCULAR = "circular"
DETERMINISTIC = "deterministic"


class ParseError(ValueError):
    """Malformed polynomial text.  Carries the character position and what
    the parser expected there."""

    def __init__(self, position: int, expected: str, found: str = ""):
        self.position = position
        self.expected = expected
        self.found = found
        shown = found if found else "end of input"
        super().__init__(
            f"at position {position}: expected {expected}, found {shown!r}"
            if found
            else f"at position {position}: expected {expected}, found end of input"
        )


class SymbolIndexError(IndexError):
    """Symbol index outside the declared 1..u (circular) or 1..t ranges."""


class DimensionMismatchError(ValueError):
    """Assignment matrices are not all square of the same size."""


class MissingBindingError(KeyError):
    """A symbol used by the polynomial has no matrix bound to it."""


class UnsupportedStarredCircularError(ValueError):
    """Adjoints of circular symbols are outside the implemented calculus."""


@dataclass(frozen=True)
class Symbol:
    """One indeterminate: kind is ``"circular"`` (Y_j) or ``"deterministic"``
    (A_k); ``starred`` is permitted only on deterministic symbols."""

    kind: str
    index: int
    starred: bool = False

    def __post_init__(self):
        if self.kind not in (CIRCULAR, DETERMINISTIC):
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.index < 1:
            raise SymbolIndexError(f"symbol index must be >= 1, got {self.index}")
        if self.starred and self.kind == CIRCULAR:
            raise UnsupportedStarredCircularError(
                "starred circular symbols are not supported"
            )

    @property
    def is_circular(self) -> bool:
        return self.kind == CIRCULAR

    def sort_key(self):
        return (0 if self.kind == CIRCULAR else 1, self.index, self.starred)

    def __str__(self) -> str:
        letter = "Y" if self.kind == CIRCULAR else "A"
        return f"{letter}{self.index}" + ("*" if self.starred else "")


@dataclass(frozen=True)
class Monomial:
    """coeff · (word of symbols); the empty word is a multiple of identity."""

    coeff: complex
    word: tuple[Symbol, ...] = ()

    def sort_key(self):
        return (len(self.word), tuple(s.sort_key() for s in self.word))

    def degree(self) -> int:
        return len(self.word)


@dataclass(frozen=True)
class NcPolynomial:
    """Normalized sum of monomials over Y1..Yu, A1..At.

    Monomials are stored sorted (graded lexicographic) with like terms
    combined and zero coefficients dropped, so ``==`` is canonical equality.
    """

    u: int
    t: int
    monomials: tuple[Monomial, ...] = ()

    def __post_init__(self):
        for mon in self.monomials:
            for s in mon.word:
                bound = self.u if s.is_circular else self.t
                if s.index > bound:
                    letter = "Y" if s.is_circular else "A"
                    raise SymbolIndexError(
                        f"{letter}{s.index} exceeds declared "
                        f"{'u' if s.is_circular else 't'} = {bound}"
                    )

    # -- ring operations (used by the parser; handy for building models) --

    def _check_same_symbols(self, other: "NcPolynomial"):
        if (self.u, self.t) != (other.u, other.t):
            raise ValueError(
                f"mixing polynomials over different symbol sets: "
                f"(u={self.u}, t={self.t}) vs (u={other.u}, t={other.t})"
            )

    def __add__(self, other):
        other = _coerce(other, self.u, self.t)
        self._check_same_symbols(other)
        return _normalized(self.u, self.t, list(self.monomials) + list(other.monomials))

    __radd__ = __add__

    def __neg__(self):
        return NcPolynomial(
            self.u, self.t, tuple(Monomial(-m.coeff, m.word) for m in self.monomials)
        )

    def __sub__(self, other):
        return self + (-_coerce(other, self.u, self.t))

    def __rsub__(self, other):
        return _coerce(other, self.u, self.t) + (-self)

    def __mul__(self, other):
        other = _coerce(other, self.u, self.t)
        self._check_same_symbols(other)
        prods = [
            Monomial(a.coeff * b.coeff, a.word + b.word)
            for a in self.monomials
            for b in other.monomials
        ]
        return _normalized(self.u, self.t, prods)

    def __rmul__(self, other):
        return _coerce(other, self.u, self.t) * self

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        out = constant(1, self.u, self.t)
        for _ in range(n):
            out = out * self
        return out

    def degree(self) -> int:
        return max((m.degree() for m in self.monomials), default=0)

    def __str__(self) -> str:
        return render(self)


def _coerce(x, u: int, t: int) -> NcPolynomial:
    if isinstance(x, NcPolynomial):
        return x
    if isinstance(x, (int, float, complex)):
        return constant(x, u, t)
    raise TypeError(f"cannot combine NcPolynomial with {type(x).__name__}")


def _normalized(u: int, t: int, monomials: Iterable[Monomial]) -> NcPolynomial:
    acc: dict[tuple[Symbol, ...], complex] = {}
    for m in monomials:
        acc[m.word] = acc.get(m.word, 0) + complex(m.coeff)
    cleaned = [Monomial(c, w) for w, c in acc.items() if c != 0]
    cleaned.sort(key=Monomial.sort_key)
    return NcPolynomial(u, t, tuple(cleaned))


def constant(c, u: int, t: int) -> NcPolynomial:
    """The polynomial c·1."""
    c = complex(c)
    if c == 0:
        return NcPolynomial(u, t, ())
    return NcPolynomial(u, t, (Monomial(c, ()),))


def symbol_poly(sym: Symbol, u: int, t: int) -> NcPolynomial:
    """The polynomial consisting of the single symbol."""
    return NcPolynomial(u, t, (Monomial(1 + 0j, (sym,)),))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_NUM = "num"        # numeric literal, possibly imaginary (value: complex)
_SYM = "sym"        # Y<j> or A<k> (value: Symbol without star resolution)
_OP = "op"          # one of + - * ^ ( ) /
_END = "end"


@dataclass
class _Token:
    kind: str
    value: object
    pos: int
    text: str = ""


def _tokenize(text: str) -> list[_Token]:
    toks: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*^()/":
            toks.append(_Token(_OP, ch, i, ch))
            i += 1
            continue
        if ch in "YA":
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            if j == i + 1:
                raise ParseError(i + 1, f"an index after '{ch}'",
                                 text[i + 1] if i + 1 < n else "")
            idx = int(text[i + 1 : j])
            kind = CIRCULAR if ch == "Y" else DETERMINISTIC
            if idx < 1:
                raise ParseError(i, "a symbol index >= 1", text[i:j])
            toks.append(_Token(_SYM, (kind, idx), i, text[i:j]))
            i = j
            continue
        if ch.isdigit() or ch == ".":
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            body = text[i:j]
            if body == ".":
                raise ParseError(i, "digits in a numeric literal", ".")
            value = complex(float(body))
            if j < n and text[j] == "i":
                value = value * 1j
                j += 1
            toks.append(_Token(_NUM, value, i, text[i:j]))
            i = j
            continue
        if ch == "i":
            toks.append(_Token(_NUM, 1j, i, "i"))
            i += 1
            continue
        raise ParseError(i, "a term", ch)
    toks.append(_Token(_END, None, n))
    return toks


class _Parser:
    def __init__(self, text: str, u: int, t: int):
        self.text = text
        self.u = u
        self.t = t
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self, ahead: int = 0) -> _Token:
        j = min(self.i + ahead, len(self.toks) - 1)
        return self.toks[j]

    def next(self) -> _Token:
        tok = self.toks[self.i]
        if tok.kind != _END:
            self.i += 1
        return tok

    def expect_op(self, op: str):
        tok = self.next()
        if tok.kind != _OP or tok.value != op:
            raise ParseError(tok.pos, f"'{op}'", tok.text)

    def _starts_factor(self, tok: _Token) -> bool:
        return tok.kind in (_NUM, _SYM) or (tok.kind == _OP and tok.value == "(")

    def parse(self) -> NcPolynomial:
        p = self.parse_expr()
        tok = self.next()
        if tok.kind != _END:
            raise ParseError(tok.pos, "'+', '-', '*', '^' or end of input", tok.text)
        return p

    def parse_expr(self) -> NcPolynomial:
        p = self.parse_term()
        while True:
            tok = self.peek()
            if tok.kind == _OP and tok.value in "+-":
                self.next()
                q = self.parse_term()
                p = p + q if tok.value == "+" else p - q
            else:
                return p

    def parse_term(self) -> NcPolynomial:
        p = self.parse_factor()
        while True:
            tok = self.peek()
            if tok.kind == _OP and tok.value == "*":
                self.next()
                p = p * self.parse_factor()
            else:
                return p

    def parse_factor(self) -> NcPolynomial:
        p = self.parse_primary()
        tok = self.peek()
        if tok.kind == _OP and tok.value == "^":
            self.next()
            etok = self.next()
            if etok.kind != _NUM or etok.value.imag != 0 \
                    or etok.value.real != int(etok.value.real) or "." in etok.text:
                raise ParseError(etok.pos, "a nonnegative integer exponent", etok.text)
            p = p ** int(etok.value.real)
        return p

    def parse_primary(self) -> NcPolynomial:
        tok = self.next()
        if tok.kind == _NUM:
            return constant(tok.value, self.u, self.t)
        if tok.kind == _SYM:
            kind, idx = tok.value
            starred = False
            if kind == DETERMINISTIC:
                nxt = self.peek()
                # '*' is the adjoint marker only when it cannot start a product
                if nxt.kind == _OP and nxt.value == "*" \
                        and not self._starts_factor(self.peek(1)):
                    self.next()
                    starred = True
            bound = self.u if kind == CIRCULAR else self.t
            if idx > bound:
                letter = "Y" if kind == CIRCULAR else "A"
                raise SymbolIndexError(
                    f"at position {tok.pos}: {letter}{idx} exceeds declared "
                    f"{'u' if kind == CIRCULAR else 't'} = {bound}"
                )
            return symbol_poly(Symbol(kind, idx, starred), self.u, self.t)
        if tok.kind == _OP and tok.value == "(":
            # rational literal '(' decimal '/' decimal ')' gets first refusal
            a, sl, b, cl = self.peek(0), self.peek(1), self.peek(2), self.peek(3)
            if (a.kind == _NUM and a.value.imag == 0
                    and sl.kind == _OP and sl.value == "/"
                    and b.kind == _NUM and b.value.imag == 0
                    and cl.kind == _OP and cl.value == ")"):
                self.i += 4
                if b.value.real == 0:
                    raise ParseError(b.pos, "a nonzero denominator", b.text)
                return constant(a.value.real / b.value.real, self.u, self.t)
            p = self.parse_expr()
            tok = self.next()
            if tok.kind != _OP or tok.value != ")":
                raise ParseError(tok.pos, "')'", tok.text)
            return p
        raise ParseError(tok.pos, "a number, 'Y<j>', 'A<k>' or '('", tok.text)


def parse_polynomial(text: str, u: int, t: int) -> NcPolynomial:
    """Parse ``text`` over u circular and t deterministic symbols.

    Raises :class:`ParseError` (with position and expectation) on malformed
    input and :class:`SymbolIndexError` when Y_j / A_k exceed the declared
    counts.
    """
    if u < 0 or t < 0:
        raise ValueError("u and t must be nonnegative")
    return _Parser(text, u, t).parse()


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _fmt_real(x: float) -> str:
    # positional, round-trip exact, no exponent form (grammar has none)
    s = np.format_float_positional(x, unique=True, trim="-")
    return s if s else "0"


def _literal(c: complex) -> str:
    """Grammar-valid literal for c with nonnegative leading part."""
    if c.imag == 0:
        return _fmt_real(c.real)
    if c.real == 0:
        return "i" if c.imag == 1 else _fmt_real(c.imag) + "i"
    im = c.imag
    sign = "+" if im > 0 else "-"
    imtxt = "i" if abs(im) == 1 else _fmt_real(abs(im)) + "i"
    return f"({_fmt_real(c.real)} {sign} {imtxt})"


def _word_text(word: tuple[Symbol, ...]) -> str:
    pieces = []
    i = 0
    while i < len(word):
        j = i
        while j < len(word) and word[j] == word[i]:
            j += 1
        run = j - i
        pieces.append(str(word[i]) + (f"^{run}" if run > 1 else ""))
        i = j
    return "*".join(pieces)


def render(p: NcPolynomial) -> str:
    """Canonical grammar-valid text; ``parse_polynomial(render(p)) == p``."""
    if not p.monomials:
        return "0"
    parts: list[str] = []
    for k, mon in enumerate(p.monomials):
        c = complex(mon.coeff)
        negative = c.real < 0 or (c.real == 0 and c.imag < 0)
        if negative:
            c = -c
        lit = _literal(c)
        if mon.word:
            body = _word_text(mon.word) if c == 1 else f"{lit}*{_word_text(mon.word)}"
        else:
            body = lit
        if k == 0:
            parts.append(f"0 - {body}" if negative else body)
        else:
            parts.append(("- " if negative else "+ ") + body)
    return " ".join(parts)


# ---------------------------------------------------------------------------
# Assignments and evaluation
# ---------------------------------------------------------------------------


@dataclass
class MatrixAssignment:
    """Concrete N x N complex matrices bound to symbol indices."""

    N: int
    circulars: dict[int, np.ndarray] = field(default_factory=dict)
    deterministics: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.N < 1:
            raise DimensionMismatchError(f"N must be >= 1, got {self.N}")
        for name, table in (("Y", self.circulars), ("A", self.deterministics)):
            for idx, mat in table.items():
                arr = np.asarray(mat, dtype=complex)
                if arr.shape != (self.N, self.N):
                    raise DimensionMismatchError(
                        f"{name}{idx} has shape {arr.shape}, expected "
                        f"({self.N}, {self.N})"
                    )
                table[idx] = arr

    def binding(self, sym: Symbol) -> np.ndarray:
        table = self.circulars if sym.is_circular else self.deterministics
        if sym.index not in table:
            raise MissingBindingError(
                f"no matrix bound to {'Y' if sym.is_circular else 'A'}{sym.index}"
            )
        return table[sym.index]


def evaluate(p: NcPolynomial, a: MatrixAssignment,
             scale_circulars: float = 1.0) -> np.ndarray:
    """Evaluate p at the assignment; circular slots receive
    ``scale_circulars * bound matrix`` (pass 1/sqrt(N) for the random model).

    The empty word contributes coeff * identity.
    """
    N = a.N
    out = np.zeros((N, N), dtype=complex)
    eye = np.eye(N, dtype=complex)
    cache: dict[Symbol, np.ndarray] = {}
    for mon in p.monomials:
        acc = eye
        for sym in mon.word:
            mat = cache.get(sym)
            if mat is None:
                mat = a.binding(sym)
                if sym.is_circular:
                    mat = scale_circulars * mat
                if sym.starred:
                    mat = mat.conj().T
                cache[sym] = mat
            acc = acc @ mat
        out += mon.coeff * acc
    return out


def zero_circulars(p: NcPolynomial) -> NcPolynomial:
    """Drop every monomial containing a circular symbol (substitute Y_j := 0)."""
    kept = tuple(m for m in p.monomials if not any(s.is_circular for s in m.word))
    return NcPolynomial(p.u, p.t, kept)


def adjoint(p: NcPolynomial) -> NcPolynomial:
    """Formal adjoint: words reversed, symbols star-toggled, coefficients
    conjugated.  Only defined for polynomials without circular symbols."""
    mons = []
    for m in p.monomials:
        if any(s.is_circular for s in m.word):
            raise UnsupportedStarredCircularError(
                "adjoint is implemented for deterministic-only polynomials"
            )
        word = tuple(
            Symbol(s.kind, s.index, not s.starred) for s in reversed(m.word)
        )
        mons.append(Monomial(np.conj(m.coeff), word))
    return _normalized(p.u, p.t, mons)
