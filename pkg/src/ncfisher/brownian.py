"""Exact expansion of states under the matched-noise substitution.

Replacing every letter X_t of a word by X_t + sqrt(eps) Y_t and expanding
gives a polynomial in sqrt(eps) whose coefficients are states of mixed
words: the power eps^(k/2) collects the subsets of k positions flipped to
the partner family.  Parity kills all odd half-powers, the constant term
is the original state, and the first-order coefficient matches the sum of
single-letter substitutions by the (time-shifted) conjugate variable.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Mapping

from .algebra import NcPoly, Word, X_FAMILY, Y_FAMILY
from .derivation import FamilyError
from .model import ModelSpec
from .moments import evaluate_state, expectation

__all__ = ["EpsExpansion", "expand_state", "verify_gradient_expansion"]


@dataclass(frozen=True)
class EpsExpansion:
    """Coefficients of the expansion, keyed by the power of eps.

    Keys are exact half-integers (Fractions); entries for odd half-powers
    are present and computed, and vanish by pairing parity.
    """

    coefficients: Mapping

    def coefficient(self, power) -> complex:
        return self.coefficients.get(Fraction(power), 0j)

    def powers(self) -> list:
        return sorted(self.coefficients)

    def value(self, eps: float) -> complex:
        return sum(
            c * (eps ** float(p)) for p, c in self.coefficients.items()
        )


def expand_state(m: ModelSpec, w: Word, max_order: int) -> EpsExpansion:
    """State of ``w`` after the substitution, truncated at eps^max_order.

    Sums over subsets of positions replaced by partner letters at the same
    generator and time, with weight eps^(|subset|/2).
    """
    letters = tuple(w)
    if any(l.family != X_FAMILY for l in letters):
        raise FamilyError("expansion starts from primary-family words")
    if not isinstance(max_order, int) or max_order < 0:
        raise ValueError("max_order must be a nonnegative integer")
    n = len(letters)
    coeffs = {}
    for k in range(0, min(n, 2 * max_order) + 1):
        total = 0j
        for subset in combinations(range(n), k):
            flipped = list(letters)
            for i in subset:
                flipped[i] = letters[i]._replace(family=Y_FAMILY)
            total += evaluate_state(m, tuple(flipped))
        coeffs[Fraction(k, 2)] = total
    return EpsExpansion(coefficients=coeffs)


def verify_gradient_expansion(m: ModelSpec, w: Word, xi: NcPoly) -> float:
    """Residual of the first-order coefficient against the substitution sum.

    Compares the eps^1 coefficient with half the sum over positions k of
    the state of ``w`` with its k-th letter replaced by ``xi`` shifted to
    that letter's time; small when ``xi`` is the conjugate variable.
    """
    letters = tuple(w)
    c1 = expand_state(m, letters, 1).coefficient(1)
    total = 0j
    for k, letter in enumerate(letters):
        substituted = (
            NcPoly.word(letters[:k])
            * xi.shift(letter.time)
            * NcPoly.word(letters[k + 1:])
        )
        total += expectation(m, substituted)
    return abs(c1 - 0.5 * total)
