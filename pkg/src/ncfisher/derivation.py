"""The covariant *-derivation into left (x) partner (x) right tensors.

Differentiating a word in the primary family by one generator applies the
Leibniz rule over the occurrences of that generator: each occurrence at
time t is replaced by a formal middle slot carrying the partner letter at
time t, with the untouched prefix and suffix words on either side.
Letters of other generators are constants.

Pairing such a tensor against the partner letter at a reference time
reduces to plain state evaluation on mixed-family words, because the
families are free and the partner family reproduces the generator's
covariance.
"""
from __future__ import annotations

from .algebra import (
    NcPoly,
    TimeLike,
    Word,
    X_FAMILY,
    Y_FAMILY,
    as_time,
    shift_word,
    word_adjoint,
    word_str,
    y,
)
from .model import ModelSpec
from .moments import evaluate_state

__all__ = [
    "FamilyError",
    "TensorElem",
    "differentiate",
    "pair_with_y",
    "verify_insertion_identity",
]


class FamilyError(ValueError):
    """Operation restricted to primary-family polynomials."""


def _term_sort_key(item):
    (left, gen, mid, right) = item[0]
    return (len(left) + len(right), gen, mid, left, right)


class TensorElem:
    """Finite sum of terms c * (left . partner_mid . right).

    ``left`` and ``right`` are plain words, ``mid`` is the exact time of
    the middle partner letter.  Canonical form folds equal slots and drops
    zero coefficients.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        data = {}
        if terms is not None:
            items = terms.items() if hasattr(terms, "items") else terms
            for key, c in items:
                left, gen, mid, right = key
                key = (tuple(left), gen, mid, tuple(right))
                acc = data.get(key, 0j) + complex(c)
                if acc == 0:
                    data.pop(key, None)
                else:
                    data[key] = acc
        self._terms = data

    @classmethod
    def _raw(cls, data):
        obj = object.__new__(cls)
        obj._terms = data
        return obj

    @classmethod
    def zero(cls):
        return cls._raw({})

    @classmethod
    def single(cls, left: Word, gen: str, mid, right: Word, coeff=1.0):
        c = complex(coeff)
        if c == 0:
            return cls.zero()
        return cls._raw({(tuple(left), gen, as_time(mid), tuple(right)): c})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def sorted_terms(self):
        return sorted(self._terms.items(), key=_term_sort_key)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self):
        return len(self._terms)

    def __add__(self, other):
        if not isinstance(other, TensorElem):
            return NotImplemented
        out = dict(self._terms)
        for key, c in other._terms.items():
            acc = out.get(key, 0j) + c
            if acc == 0:
                out.pop(key, None)
            else:
                out[key] = acc
        return TensorElem._raw(out)

    def __neg__(self):
        return TensorElem._raw({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, TensorElem):
            return NotImplemented
        return self + (-other)

    def scale(self, factor) -> "TensorElem":
        f = complex(factor)
        if f == 0:
            return TensorElem.zero()
        return TensorElem._raw({k: c * f for k, c in self._terms.items()})

    def mul_left(self, p: NcPoly) -> "TensorElem":
        """p . (left (.) mid (.) right) = (p-word + left) (.) mid (.) right."""
        out = {}
        for w, cp in p.terms.items():
            for (left, gen, mid, right), c in self._terms.items():
                key = (tuple(w) + left, gen, mid, right)
                acc = out.get(key, 0j) + cp * c
                if acc == 0:
                    out.pop(key, None)
                else:
                    out[key] = acc
        return TensorElem._raw(out)

    def mul_right(self, p: NcPoly) -> "TensorElem":
        out = {}
        for w, cp in p.terms.items():
            for (left, gen, mid, right), c in self._terms.items():
                key = (left, gen, mid, right + tuple(w))
                acc = out.get(key, 0j) + cp * c
                if acc == 0:
                    out.pop(key, None)
                else:
                    out[key] = acc
        return TensorElem._raw(out)

    def adjoint(self) -> "TensorElem":
        """(c, left, t, right) -> (conj c, right*, t, left*)."""
        return TensorElem._raw(
            {
                (word_adjoint(right), gen, mid, word_adjoint(left)): c.conjugate()
                for (left, gen, mid, right), c in self._terms.items()
            }
        )

    def shift(self, s: TimeLike) -> "TensorElem":
        """Shift all three slots and the middle time by ``s``."""
        ds = as_time(s)
        return TensorElem._raw(
            {
                (shift_word(left, ds), gen, mid + ds, shift_word(right, ds)): c
                for (left, gen, mid, right), c in self._terms.items()
            }
        )

    def __eq__(self, other):
        if not isinstance(other, TensorElem):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        if not self._terms:
            return "TensorElem(0)"
        bits = [
            f"({c}) {word_str(left)} (.) Y{gen}:{mid} (.) {word_str(right)}"
            for (left, gen, mid, right), c in self.sorted_terms()
        ]
        return "TensorElem(" + " + ".join(bits) + ")"


def differentiate(gen_id: str, p: NcPoly) -> TensorElem:
    """Leibniz derivative of a primary-family polynomial by one generator.

    Occurrences of other generators are constants with derivative zero.
    Raises :class:`FamilyError` if ``p`` contains partner-family letters.
    """
    out = {}
    for w, c in p.terms.items():
        for letter in w:
            if letter.family == Y_FAMILY:
                raise FamilyError(
                    "differentiation is defined on primary-family polynomials"
                )
        for k, letter in enumerate(w):
            if letter.family == X_FAMILY and letter.gen == gen_id:
                key = (w[:k], gen_id, letter.time, w[k + 1:])
                acc = out.get(key, 0j) + c
                if acc == 0:
                    out.pop(key, None)
                else:
                    out[key] = acc
    return TensorElem._raw(out)


def pair_with_y(m: ModelSpec, e: TensorElem, y_time: TimeLike = 0) -> complex:
    """Inner product of the partner letter at ``y_time`` with ``e``.

    Each term contributes c * state(Y_{y_time} . left . Y_mid . right),
    the partner letter taken from the term's own generator.
    """
    t0 = as_time(y_time)
    total = 0j
    for (left, gen, mid, right), c in e._terms.items():
        word = (y(gen, t0),) + left + (y(gen, mid),) + right
        total += c * evaluate_state(m, word)
    return total


def _state_poly_tensor(m: ModelSpec, p: NcPoly, e: TensorElem, y_first: bool,
                       gen_id: str) -> complex:
    # y_first: state(p . Y_0 . e); otherwise state(e . Y_0 . p)
    total = 0j
    y0 = (y(gen_id, 0),)
    for w, cp in p.terms.items():
        for (left, gen, mid, right), ce in e._terms.items():
            mid_letter = (y(gen, mid),)
            if y_first:
                word = tuple(w) + y0 + left + mid_letter + right
            else:
                word = left + mid_letter + right + y0 + tuple(w)
            total += cp * ce * evaluate_state(m, word)
    return total


def verify_insertion_identity(
    m: ModelSpec, gen_id: str, p: NcPoly, q: NcPoly, xi: NcPoly
) -> float:
    """Residual of state(p xi q) against the two derivative pairings.

    For the true conjugate variable xi of ``gen_id`` the value
    state(p xi q) equals state(p Y d(q)) + state(d(p) Y q) with the
    partner letter at time 0 in the middle; the returned residual is the
    absolute difference.
    """
    from .moments import expectation

    lhs = expectation(m, p * xi * q)
    dq = differentiate(gen_id, q)
    dp = differentiate(gen_id, p)
    mid1 = _state_poly_tensor(m, p, dq, True, gen_id)
    mid2 = _state_poly_tensor(m, q, dp, False, gen_id)
    return abs(lhs - mid1 - mid2)
