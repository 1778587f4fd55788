"""State evaluation by the non-crossing pairing formula.

A word of letters evaluates to the sum over non-crossing pair partitions
of the product of two-letter covariances.  The covariance of two letters
is the generator's two-point function at their time difference when both
family and generator id agree, and zero otherwise; this block-diagonal
kernel is exactly what makes distinct generators (and the X/Y families)
mutually free.

The production evaluator uses the first-letter recursion

    phi(l1 ... ln) = sum_k cov(l1, lk) phi(l2 .. l_{k-1}) phi(l_{k+1} .. ln)

memoized on subwords with times rebased to the first letter (covariances
depend on time differences only, so rebasing is lossless and turns the
exponential tree into Catalan-bounded work per distinct shape).

An independent oracle enumerates all pair partitions and filters crossings
with the literal interval-nesting predicate; it shares nothing with the
recursion above except the covariance kernel.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .algebra import Letter, NcPoly, Word
from .model import ModelSpec

__all__ = [
    "SizeLimitError",
    "StateValue",
    "covariance",
    "evaluate_state",
    "evaluate_state_detailed",
    "evaluate_state_shifted",
    "expectation",
    "inner_product",
    "l2_norm",
    "l2_distance",
    "gram_matrix",
    "brute_force_oracle",
    "all_pairings",
    "is_noncrossing",
    "collapse_tracial_times",
]

ORACLE_MAX_LETTERS = 12


class SizeLimitError(ValueError):
    """Word too long for exhaustive pair-partition enumeration."""


@dataclass(frozen=True)
class StateValue:
    """State value plus the number of family-compatible non-crossing
    pairings that contributed (a diagnostic, not part of the value)."""

    value: complex
    partition_count: int


def _sub_time(t, s):
    if isinstance(t, Fraction) and isinstance(s, Fraction):
        return t - s
    return complex(t) - complex(s)


def _add_time(t, z):
    if isinstance(t, Fraction) and isinstance(z, (int, Fraction)):
        return t + z
    return complex(t) + complex(z)


def covariance(m: ModelSpec, a: Letter, b: Letter) -> complex:
    """Kernel value for the ordered letter pair (a, b): eta at the time
    difference when family and generator agree, zero otherwise."""
    if a.family != b.family or a.gen != b.gen:
        return 0j
    return m.gen(a.gen).eta(_sub_time(b.time, a.time))


def _rebase(letters):
    t0 = letters[0].time
    return tuple(
        (l.family, l.gen, _sub_time(l.time, t0)) for l in letters
    )


def _phi(m: ModelSpec, letters) -> complex:
    n = len(letters)
    if n == 0:
        return 1 + 0j
    if n % 2:
        return 0j
    key = _rebase(letters)
    memo = m._state_memo
    cached = memo.get(key)
    if cached is not None:
        return cached
    first = letters[0]
    total = 0j
    for k in range(1, n, 2):
        c = covariance(m, first, letters[k])
        if c != 0:
            total += c * _phi(m, letters[1:k]) * _phi(m, letters[k + 1:])
    memo[key] = total
    return total


def _count(m: ModelSpec, shape) -> int:
    # shape: tuple of (family, gen); counts non-crossing pairings whose
    # pairs all match in family and generator, regardless of weight
    n = len(shape)
    if n == 0:
        return 1
    if n % 2:
        return 0
    memo = m._count_memo
    cached = memo.get(shape)
    if cached is not None:
        return cached
    total = 0
    for k in range(1, n, 2):
        if shape[0] == shape[k]:
            total += _count(m, shape[1:k]) * _count(m, shape[k + 1:])
    memo[shape] = total
    return total


def evaluate_state(m: ModelSpec, w: Word) -> complex:
    """Value of the model state on the word ``w``.

    1 for the empty word, 0 for odd length; otherwise the non-crossing
    pairing sum computed by the memoized first-letter recursion.
    """
    return _phi(m, tuple(w))


def evaluate_state_detailed(m: ModelSpec, w: Word) -> StateValue:
    letters = tuple(w)
    return StateValue(
        value=_phi(m, letters),
        partition_count=_count(m, tuple((l.family, l.gen) for l in letters)),
    )


def evaluate_state_shifted(m: ModelSpec, w: Word, positions, z) -> complex:
    """Evaluate with ``z`` added to the time tags of a prefix or suffix
    block of ``w`` before kernel evaluation.

    ``z`` may be complex; at real ``z`` this agrees with evaluating the
    shifted word directly.  ``positions`` are 0-based indices and must form
    a contiguous prefix or suffix block.
    """
    letters = tuple(w)
    n = len(letters)
    pos = sorted(set(int(p) for p in positions))
    if pos and (pos[0] < 0 or pos[-1] >= n):
        raise ValueError("positions out of range")
    k = len(pos)
    is_prefix = pos == list(range(0, k))
    is_suffix = pos == list(range(n - k, n))
    if not (is_prefix or is_suffix):
        raise ValueError("positions must form a prefix or suffix block")
    block = set(pos)
    shifted = tuple(
        l._replace(time=_add_time(l.time, z)) if i in block else l
        for i, l in enumerate(letters)
    )
    return _phi(m, shifted)


def expectation(m: ModelSpec, p: NcPoly) -> complex:
    """Linear extension of the state to polynomials."""
    return sum((c * _phi(m, w) for w, c in p.terms.items()), 0j)


def inner_product(m: ModelSpec, p: NcPoly, q: NcPoly) -> complex:
    """Sesquilinear form <p, q> = state(p* q); antilinear in ``p``."""
    return expectation(m, p.adjoint() * q)


def l2_norm(m: ModelSpec, p: NcPoly) -> float:
    return float(np.sqrt(max(inner_product(m, p, p).real, 0.0)))


def l2_distance(m: ModelSpec, p: NcPoly, q: NcPoly) -> float:
    return l2_norm(m, p - q)


def gram_matrix(m: ModelSpec, basis: Sequence[NcPoly]) -> np.ndarray:
    """Hermitian matrix of pairwise inner products of ``basis``."""
    if len(basis) == 0:
        raise ValueError("basis must be non-empty")
    n = len(basis)
    g = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            val = inner_product(m, basis[i], basis[j])
            g[i, j] = val
            g[j, i] = val.conjugate()
    return g


# ----------------------------------------------------------------------
# independent oracle
# ----------------------------------------------------------------------


def all_pairings(items):
    """Yield every partition of ``items`` into unordered pairs."""
    items = list(items)
    if not items:
        yield []
        return
    first = items.pop(0)
    for i, other in enumerate(items):
        rest = items[:i] + items[i + 1:]
        for tail in all_pairings(rest):
            yield [(first, other)] + tail


def _crosses(p, q) -> bool:
    a, b = p
    c, d = q
    return (a < c < b < d) or (c < a < d < b)


def is_noncrossing(pairing) -> bool:
    """Literal interval-nesting predicate on a list of (i, j) pairs."""
    pairs = [tuple(sorted(p)) for p in pairing]
    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            if _crosses(pairs[i], pairs[j]):
                return False
    return True


def brute_force_oracle(m: ModelSpec, w: Word) -> complex:
    """Exhaustive evaluation: enumerate all pair partitions, filter the
    crossing ones, sum the kernel products.  Limited to 12 letters."""
    letters = tuple(w)
    n = len(letters)
    if n > ORACLE_MAX_LETTERS:
        raise SizeLimitError(
            f"oracle handles at most {ORACLE_MAX_LETTERS} letters, got {n}"
        )
    if n == 0:
        return 1 + 0j
    if n % 2:
        return 0j
    total = 0j
    for pairing in all_pairings(range(n)):
        if not is_noncrossing(pairing):
            continue
        prod = 1 + 0j
        for i, j in pairing:
            i, j = (i, j) if i < j else (j, i)
            prod *= covariance(m, letters[i], letters[j])
            if prod == 0:
                break
        total += prod
    return total


# ----------------------------------------------------------------------


def collapse_tracial_times(m: ModelSpec, p: NcPoly) -> NcPoly:
    """Rewrite letters of flow-fixed (tracial) generators to time 0.

    For such generators all formal translates denote the same element, so
    distinct tags are collapsed before building bases or differentiating.
    """
    tracial = {g.gen_id for g in m.generators if g.is_tracial}
    if not tracial:
        return p
    out: dict[Word, complex] = {}
    for w, c in p.terms.items():
        ww = tuple(
            l._replace(time=Fraction(0)) if l.gen in tracial else l
            for l in w
        )
        out[ww] = out.get(ww, 0j) + c
    return NcPoly(out)
