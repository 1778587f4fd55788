"""Exact *-algebra of words in time-indexed self-adjoint generators.

Letters carry a family tag ("X" for the primary generators, "Y" for their
matched-covariance partners), a generator id, and a modular time.  Times
are exact rationals (`fractions.Fraction`), so shift bookkeeping never
accumulates floating-point drift; coefficients are complex doubles and
exactness claims apply to the word structure only.

>>> p = NcPoly.letter(x("g", 0)) * NcPoly.letter(x("g", 1))
>>> p.adjoint() == NcPoly.word((x("g", 1), x("g", 0)))
True
>>> p.shift("1/2") == NcPoly.word((x("g", "1/2"), x("g", "3/2")))
True
"""
from __future__ import annotations

import numbers
from fractions import Fraction
from typing import Iterator, NamedTuple, Union

__all__ = [
    "X_FAMILY",
    "Y_FAMILY",
    "TimeLike",
    "as_time",
    "Letter",
    "x",
    "y",
    "Word",
    "EMPTY_WORD",
    "word_adjoint",
    "shift_word",
    "word_str",
    "NcPoly",
    "multiply",
    "adjoint",
    "modular_shift",
]

X_FAMILY = "X"
Y_FAMILY = "Y"

TimeLike = Union[Fraction, int, str]


def as_time(t: TimeLike) -> Fraction:
    """Coerce ``t`` to an exact rational time tag.

    Accepts Fractions, ints and strings such as ``"3/2"`` or ``"-0.25"``.
    Floats are rejected on purpose: callers must decide the exact rational
    they mean.
    """
    if isinstance(t, Fraction):
        return t
    if isinstance(t, (int, str)):
        return Fraction(t)
    raise TypeError(f"time tags are exact rationals, cannot accept {t!r}")


class Letter(NamedTuple):
    """One self-adjoint generator letter at an exact modular time."""

    family: str
    gen: str
    time: Fraction

    def shifted(self, s: Fraction) -> "Letter":
        return self._replace(time=self.time + s)

    def __str__(self) -> str:
        return f"{self.family}{self.gen}:{self.time}"


def x(gen: str, t: TimeLike = 0) -> Letter:
    """The primary-family letter of generator ``gen`` at time ``t``."""
    return Letter(X_FAMILY, gen, as_time(t))


def y(gen: str, t: TimeLike = 0) -> Letter:
    """The partner-family letter of generator ``gen`` at time ``t``."""
    return Letter(Y_FAMILY, gen, as_time(t))


Word = tuple  # tuple[Letter, ...]; the empty tuple is the identity

EMPTY_WORD: Word = ()


def word_adjoint(w: Word) -> Word:
    """Adjoint of a word: letters are self-adjoint, so just reverse."""
    return tuple(reversed(w))


def shift_word(w: Word, s: TimeLike) -> Word:
    ds = as_time(s)
    return tuple(letter.shifted(ds) for letter in w)


def word_str(w: Word) -> str:
    return " ".join(str(letter) for letter in w) if w else "1"


def _term_key(item):
    w = item[0]
    return (len(w), w)


class NcPoly:
    """Finite complex linear combination of words, kept in canonical form.

    Canonical form stores no zero coefficients.  Iteration and repr are
    deterministic: terms are ordered by length, then lexicographically on
    the letter tuples (family, generator id, time).
    """

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        data: dict[Word, complex] = {}
        if terms is not None:
            items = terms.items() if hasattr(terms, "items") else terms
            for w, c in items:
                w = tuple(w)
                acc = data.get(w, 0j) + complex(c)
                if acc == 0:
                    data.pop(w, None)
                else:
                    data[w] = acc
        self._terms = data

    @classmethod
    def _raw(cls, data: dict) -> "NcPoly":
        # data must already be canonical (no zeros, words are tuples)
        obj = object.__new__(cls)
        obj._terms = data
        return obj

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------

    @classmethod
    def zero(cls) -> "NcPoly":
        return cls._raw({})

    @classmethod
    def one(cls) -> "NcPoly":
        return cls._raw({EMPTY_WORD: 1 + 0j})

    @classmethod
    def letter(cls, letter: Letter) -> "NcPoly":
        return cls._raw({(letter,): 1 + 0j})

    @classmethod
    def word(cls, w: Word, coeff: complex = 1.0) -> "NcPoly":
        c = complex(coeff)
        return cls._raw({tuple(w): c}) if c != 0 else cls.zero()

    # ------------------------------------------------------------------
    # inspection
    # ------------------------------------------------------------------

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def sorted_terms(self) -> list:
        return sorted(self._terms.items(), key=_term_key)

    def coefficient(self, w: Word) -> complex:
        return self._terms.get(tuple(w), 0j)

    def degree(self) -> int:
        return max((len(w) for w in self._terms), default=0)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def letters(self) -> set:
        return {letter for w in self._terms for letter in w}

    def __iter__(self) -> Iterator:
        return iter(self.sorted_terms())

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    # ------------------------------------------------------------------
    # ring structure
    # ------------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, NcPoly):
            return other
        if isinstance(other, numbers.Complex):
            c = complex(other)
            return NcPoly._raw({EMPTY_WORD: c}) if c != 0 else NcPoly.zero()
        return None

    def __add__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        out = dict(self._terms)
        for w, c in rhs._terms.items():
            acc = out.get(w, 0j) + c
            if acc == 0:
                out.pop(w, None)
            else:
                out[w] = acc
        return NcPoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return NcPoly._raw({w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return self + (-rhs)

    def __rsub__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return rhs + (-self)

    def __mul__(self, other):
        if isinstance(other, NcPoly):
            out: dict[Word, complex] = {}
            for w1, c1 in self._terms.items():
                for w2, c2 in other._terms.items():
                    w = w1 + w2
                    acc = out.get(w, 0j) + c1 * c2
                    if acc == 0:
                        out.pop(w, None)
                    else:
                        out[w] = acc
            return NcPoly._raw(out)
        if isinstance(other, numbers.Complex):
            c = complex(other)
            if c == 0:
                return NcPoly.zero()
            return NcPoly._raw({w: cc * c for w, cc in self._terms.items()})
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, numbers.Complex):
            return self * other
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers")
        out = NcPoly.one()
        for _ in range(n):
            out = out * self
        return out

    # ------------------------------------------------------------------
    # *-structure and modular shift
    # ------------------------------------------------------------------

    def adjoint(self) -> "NcPoly":
        """Word reversal plus coefficient conjugation; an involution."""
        return NcPoly._raw(
            {word_adjoint(w): c.conjugate() for w, c in self._terms.items()}
        )

    def shift(self, s: TimeLike) -> "NcPoly":
        """Add ``s`` to every letter's time tag; a formal *-automorphism."""
        ds = as_time(s)
        return NcPoly._raw(
            {tuple(l.shifted(ds) for l in w): c for w, c in self._terms.items()}
        )

    def is_selfadjoint(self, tol: float = 0.0) -> bool:
        for w, c in self._terms.items():
            if abs(self._terms.get(word_adjoint(w), 0j) - c.conjugate()) > tol:
                return False
        return True

    # ------------------------------------------------------------------

    def __eq__(self, other) -> bool:
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return self._terms == rhs._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        if not self._terms:
            return "NcPoly(0)"
        bits = [f"({c}) {word_str(w)}" for w, c in self.sorted_terms()]
        return "NcPoly(" + " + ".join(bits) + ")"


def multiply(p: NcPoly, q: NcPoly) -> NcPoly:
    """Bilinear concatenation product in canonical form."""
    return p * q


def adjoint(p: NcPoly) -> NcPoly:
    return p.adjoint()


def modular_shift(p: NcPoly, s: TimeLike) -> NcPoly:
    return p.shift(s)
