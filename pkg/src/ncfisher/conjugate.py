"""Galerkin solver for conjugate variables and the derived functionals.

The defining data of the conjugate variable of a generator are the pairings
b_P = <partner, d(P)> over polynomials P; the solver truncates both trial
and test space to the span of a finite word basis, so the solution is the
orthogonal projection of the true conjugate variable onto that span
whenever the latter exists.

Two numerical facts shape the implementation:

* Gram matrices of time-translate words are not merely ill-conditioned but
  exactly rank-deficient for finitely-atomic covariances (translates of a
  k-atom generator span a k-dimensional one-particle space).  A plain
  minimum-norm pseudo-inverse would therefore smear an exact solution over
  linearly dependent words.  The solver first prunes the basis to a
  maximal independent subset, scanned in a deterministic order that puts
  the target letter first (degree ascending, then distance of the letter
  times from the target time), and then solves on the reduced Gram.
  Vector-level outputs (residual, norms, the projection itself) do not
  depend on this choice; only the reported coefficients do, and with it an
  exactly representable solution is reported concentrated.
* The reduced Gram is solved through its spectral decomposition with a
  relative cutoff, so near-dependence that survives pruning cannot blow up
  the coefficients.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .algebra import Letter, NcPoly, TimeLike, Word, as_time, word_adjoint, x
from .derivation import differentiate, pair_with_y
from .model import ConfigError, ModelSpec
from .moments import evaluate_state, l2_distance, l2_norm

__all__ = [
    "BasisError",
    "DegenerateGramError",
    "GridError",
    "BasisSpec",
    "ConjugateSolution",
    "enumerate_basis",
    "solve_conjugate",
    "self_adjoint_defect",
    "fisher_multi",
    "CramerRaoReport",
    "cramer_rao_audit",
    "chi_star",
    "modular_covariance_check",
]

SPECTRAL_CUTOFF = 1e-10  # relative eigenvalue cutoff of the reduced Gram
PRUNE_RTOL = 1e-10       # relative Gram-Schmidt residual below which a word
                         # counts as dependent on its predecessors


class BasisError(ValueError):
    """Invalid basis specification for the requested solve."""


class DegenerateGramError(RuntimeError):
    """Every basis direction fell below the spectral cutoff."""


class GridError(ValueError):
    """Invalid quadrature grid."""


@dataclass(frozen=True)
class BasisSpec:
    """Finite truncation: all words up to ``max_degree`` over the letters
    of the target generator and ``b_gens`` at the times in ``time_grid``.

    The word set is closed under adjoints (letters are self-adjoint and
    all words up to the degree bound are present).
    """

    time_grid: tuple
    max_degree: int
    b_gens: tuple = ()
    include_identity: bool = True

    def __post_init__(self):
        grid = tuple(as_time(t) for t in self.time_grid)
        object.__setattr__(self, "time_grid", grid)
        object.__setattr__(self, "b_gens", tuple(self.b_gens))
        if not grid:
            raise BasisError("time grid must be non-empty")
        if len(set(grid)) != len(grid):
            raise BasisError("time grid entries must be distinct")
        if not isinstance(self.max_degree, int) or self.max_degree < 1:
            raise BasisError("max_degree must be an integer >= 1")

    def shifted(self, s: TimeLike) -> "BasisSpec":
        ds = as_time(s)
        return BasisSpec(
            tuple(t + ds for t in self.time_grid),
            self.max_degree,
            self.b_gens,
            self.include_identity,
        )


def _letter_pivot_key(letter: Letter, target_gen: str, target_time: Fraction):
    return (
        letter.gen != target_gen,
        letter.gen,
        abs(letter.time - target_time),
        letter.time,
    )


def enumerate_basis(
    m: ModelSpec,
    target_gen: str,
    spec: BasisSpec,
    b_gens: Sequence[str] | None = None,
    target_time: TimeLike = 0,
) -> list:
    """Basis words in pivot order: identity (optional), then degree by
    degree with target-generator letters nearest the target time first.

    Letters of flow-fixed generators are collapsed to time 0 and the
    resulting duplicate words dropped, keeping the first occurrence.
    """
    t0 = as_time(target_time)
    gens = [target_gen] + [g for g in (b_gens if b_gens is not None
                                       else spec.b_gens) if g != target_gen]
    for g in gens:
        m.gen(g)  # raises ConfigError for unknown ids
    if t0 not in spec.time_grid:
        raise BasisError(
            f"target time {t0} must belong to the basis time grid"
        )
    alphabet = [x(g, t) for g in gens for t in spec.time_grid]
    alphabet.sort(key=lambda l: _letter_pivot_key(l, target_gen, t0))

    tracial = {g.gen_id for g in m.generators if g.is_tracial}

    def collapse(w: Word) -> Word:
        if not tracial:
            return w
        return tuple(
            l._replace(time=Fraction(0)) if l.gen in tracial else l for l in w
        )

    words: list = []
    seen = set()
    if spec.include_identity:
        words.append(())
        seen.add(())
    for degree in range(1, spec.max_degree + 1):
        for combo in itertools.product(alphabet, repeat=degree):
            w = collapse(combo)
            if w not in seen:
                seen.add(w)
                words.append(w)
    return words


@dataclass(frozen=True, eq=False)
class ConjugateSolution:
    """Solved Galerkin data for one conjugate-variable problem."""

    target_gen: str
    target_time: Fraction
    basis_words: tuple
    kept: tuple
    coefficients: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    residual: float
    xi_norm_sq: float
    phi_star: float
    gram_condition: float

    def polynomial(self) -> NcPoly:
        return NcPoly(
            {w: c for w, c in zip(self.basis_words, self.coefficients) if c != 0}
        )

    def coefficient_map(self) -> dict:
        return {
            w: c
            for w, c in zip(self.basis_words, self.coefficients)
            if c != 0
        }


def _prune_independent(gram: np.ndarray) -> list:
    """Greedy scan keeping indices whose Gram-Schmidt residual against the
    kept set exceeds PRUNE_RTOL relative to their own norm."""
    kept: list = []
    chol: np.ndarray | None = None  # lower Cholesky factor of kept Gram
    for i in range(gram.shape[0]):
        d = gram[i, i].real
        if d <= 0:
            continue
        if kept:
            v = gram[kept, i]
            ysol = np.linalg.solve(chol, v)
            r = d - float(np.vdot(ysol, ysol).real)
        else:
            ysol = np.zeros(0, dtype=complex)
            r = d
        if r > PRUNE_RTOL * d:
            kept.append(i)
            k = len(kept)
            new = np.zeros((k, k), dtype=complex)
            if k > 1:
                new[: k - 1, : k - 1] = chol
                new[k - 1, : k - 1] = ysol.conjugate()
            new[k - 1, k - 1] = math.sqrt(r)
            chol = new
    return kept


def solve_conjugate(
    m: ModelSpec,
    target_gen: str,
    basis: BasisSpec,
    b_gens: Sequence[str] | None = None,
    target_time: TimeLike = 0,
) -> ConjugateSolution:
    """Solve the truncated defining equations of the conjugate variable.

    Computes b_P = <partner, d(P)> for every basis word P and the Gram
    matrix of the basis, prunes the basis to a maximal independent subset,
    and solves the reduced system through the spectral pseudo-inverse
    (eigenvalues below ``SPECTRAL_CUTOFF`` times the largest are dropped).
    The residual is the Euclidean norm of the unmatched part of the
    defining data over the full basis, xi_norm_sq the squared norm of the
    solution, and phi_star its normalization by the target's second
    moment.
    """
    t0 = as_time(target_time)
    words = enumerate_basis(m, target_gen, basis, b_gens, t0)
    n = len(words)

    gram = np.zeros((n, n), dtype=complex)
    for i in range(n):
        wi_adj = word_adjoint(words[i])
        for j in range(i, n):
            val = evaluate_state(m, wi_adj + words[j])
            gram[i, j] = val
            gram[j, i] = val.conjugate()

    b = np.array(
        [
            pair_with_y(m, differentiate(target_gen, NcPoly.word(w)), t0)
            for w in words
        ],
        dtype=complex,
    )
    rhs = b.conjugate()

    kept = _prune_independent(gram)
    if not kept:
        raise DegenerateGramError("no basis word survives the rank screen")

    reduced = gram[np.ix_(kept, kept)]
    reduced = 0.5 * (reduced + reduced.conj().T)
    eigvals, eigvecs = np.linalg.eigh(reduced)
    cutoff = SPECTRAL_CUTOFF * float(eigvals.max())
    keep_spec = eigvals > cutoff
    if not keep_spec.any():
        raise DegenerateGramError("all Gram eigenvalues fall below the cutoff")
    v = eigvecs[:, keep_spec]
    lam = eigvals[keep_spec]
    c_kept = v @ ((v.conj().T @ rhs[kept]) / lam)

    coefficients = np.zeros(n, dtype=complex)
    coefficients[kept] = c_kept
    residual = float(np.linalg.norm(gram[:, kept] @ c_kept - rhs))
    xi_norm_sq = float(np.vdot(c_kept, reduced @ c_kept).real)
    gen = m.gen(target_gen)
    return ConjugateSolution(
        target_gen=target_gen,
        target_time=t0,
        basis_words=tuple(words),
        kept=tuple(kept),
        coefficients=coefficients,
        rhs=b,
        residual=residual,
        xi_norm_sq=xi_norm_sq,
        phi_star=xi_norm_sq / gen.v,
        gram_condition=float(lam.max() / lam.min()),
    )


def self_adjoint_defect(m: ModelSpec, solution: ConjugateSolution) -> float:
    """L2 norm of xi - xi*; small for every well-posed solve."""
    p = solution.polynomial()
    return l2_norm(m, p - p.adjoint())


def fisher_multi(
    m: ModelSpec, gens: Sequence[str], basis: BasisSpec
) -> float:
    """Sum over the family of per-generator normalized conjugate norms,
    each generator solved against the words of all the others."""
    gens = list(gens)
    if not gens:
        raise ConfigError("at least one generator is required")
    total = 0.0
    for g in gens:
        others = tuple(h for h in gens if h != g)
        sol = solve_conjugate(m, g, basis, b_gens=others)
        total += sol.phi_star
    return total


@dataclass(frozen=True)
class CramerRaoReport:
    """Both sides of the information-variance product.

    ``lhs`` is the tuple-normalized information (sum of squared conjugate
    norms over the family's total second moment) multiplied by the squared
    total second moment; ``rhs`` is n^2.  The identity is asserted only
    for normalized models (every generator of unit second moment); other
    models get the report without an assertion.
    """

    n: int
    xi_norm_sqs: tuple
    second_moment: float
    phi_star_tuple: float
    lhs: float
    rhs: float
    ratio: float
    normalized: bool
    asserted: bool
    note: str


def cramer_rao_audit(
    m: ModelSpec, gens: Sequence[str], basis: BasisSpec
) -> CramerRaoReport:
    gens = list(gens)
    if not gens:
        raise ConfigError("at least one generator is required")
    norms = []
    for g in gens:
        others = tuple(h for h in gens if h != g)
        sol = solve_conjugate(m, g, basis, b_gens=others)
        norms.append(sol.xi_norm_sq)
    second_moment = math.fsum(m.gen(g).v for g in gens)
    phi_star_tuple = math.fsum(norms) / second_moment
    lhs = phi_star_tuple * second_moment**2
    n = len(gens)
    rhs = float(n * n)
    normalized = all(abs(m.gen(g).v - 1.0) <= m.tolerance for g in gens)
    return CramerRaoReport(
        n=n,
        xi_norm_sqs=tuple(norms),
        second_moment=second_moment,
        phi_star_tuple=phi_star_tuple,
        lhs=lhs,
        rhs=rhs,
        ratio=lhs / rhs,
        normalized=normalized,
        asserted=normalized,
        note="" if normalized else "normalization audit",
    )


def chi_star(
    m: ModelSpec,
    gens: Sequence[str],
    eps_grid: Sequence[float],
    tail_cutoff: float,
    basis: BasisSpec,
) -> float:
    """Entropy-style quadrature along the matched-covariance perturbation.

    At parameter t the perturbed family is realized inside the model class
    as the generators with all weights scaled by (1 + t); the integrand is
    (n/(1+t) - Fisher(t)) / 2, integrated by trapezoid over ``eps_grid``.
    The tail holds the last computed Fisher value constant on
    [grid end, tail_cutoff] and integrates n/(1+t) there exactly; nothing
    is added beyond ``tail_cutoff``.
    """
    gens = list(gens)
    if not gens:
        return 0.0
    grid = [float(t) for t in eps_grid]
    if not grid or grid[0] != 0.0:
        raise GridError("eps grid must start at 0")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise GridError("eps grid must be strictly increasing")
    if tail_cutoff < grid[-1]:
        raise GridError("tail cutoff must not precede the grid end")
    n = len(gens)
    fishers = [
        fisher_multi(m.scaled(1.0 + t), gens, basis) for t in grid
    ]
    integrand = [0.5 * (n / (1.0 + t) - f) for t, f in zip(grid, fishers)]
    quad = math.fsum(
        0.5 * (integrand[i] + integrand[i + 1]) * (grid[i + 1] - grid[i])
        for i in range(len(grid) - 1)
    )
    t_end = grid[-1]
    tail = 0.5 * (
        n * math.log((1.0 + tail_cutoff) / (1.0 + t_end))
        - fishers[-1] * (tail_cutoff - t_end)
    )
    return quad + tail


def modular_covariance_check(
    m: ModelSpec, gen_id: str, s: TimeLike, basis: BasisSpec
) -> float:
    """L2 distance between the shifted solution and the solution of the
    shifted problem (target letter at time s over the shifted grid)."""
    ds = as_time(s)
    sol0 = solve_conjugate(m, gen_id, basis)
    sol1 = solve_conjugate(
        m, gen_id, basis.shifted(ds), target_time=ds
    )
    return l2_distance(m, sol0.polynomial().shift(ds), sol1.polynomial())
