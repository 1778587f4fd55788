import math
import random
from fractions import Fraction

import pytest

from ncfisher.algebra import x
from ncfisher.conjugate import (
    BasisError,
    BasisSpec,
    GridError,
    chi_star,
    cramer_rao_audit,
    enumerate_basis,
    fisher_multi,
    modular_covariance_check,
    self_adjoint_defect,
    solve_conjugate,
)
from ncfisher.model import build_model, tracial_model, two_atom_model
from ncfisher.moments import l2_distance

GRID3 = tuple(Fraction(k, 2) for k in range(-1, 2))
GRID5 = tuple(Fraction(k, 2) for k in range(-2, 3))


def pair_model():
    return build_model(
        {
            "generators": [
                {"name": "1", "mode": "half",
                 "atoms": [{"x": "ln2/(2pi)", "w": 2 / 3}]},
                {"name": "2", "mode": "half",
                 "atoms": [{"x": "ln2/(2pi)", "w": 2 / 3}]},
            ]
        }
    )


@pytest.fixture(scope="module")
def m():
    return two_atom_model()


def coeff_profile(sol, gen):
    target = (x(gen, 0),)
    cmap = dict(zip(sol.basis_words, sol.coefficients))
    on_target = cmap.get(target, 0j)
    off = max((abs(c) for w, c in cmap.items() if w != target), default=0.0)
    return on_target, off


def test_basis_spec_validation():
    with pytest.raises(BasisError):
        BasisSpec((), 2)
    with pytest.raises(BasisError):
        BasisSpec((Fraction(0), Fraction(0)), 2)
    with pytest.raises(BasisError):
        BasisSpec((Fraction(0),), 0)


def test_target_time_must_be_on_grid(m):
    with pytest.raises(BasisError):
        solve_conjugate(m, "g", BasisSpec((Fraction(1),), 1))


def test_enumerate_basis_order_and_identity(m):
    words = enumerate_basis(m, "g", BasisSpec(GRID3, 2))
    assert words[0] == ()
    assert words[1] == (x("g", 0),)
    assert len(words) == 1 + 3 + 9
    no_id = enumerate_basis(
        m, "g", BasisSpec(GRID3, 1, include_identity=False)
    )
    assert () not in no_id


def test_enumerate_basis_collapses_tracial():
    mt = tracial_model()
    words = enumerate_basis(mt, "g", BasisSpec(GRID5, 3))
    assert words == [(), ((x("g", 0)),) * 1, (x("g", 0),) * 2, (x("g", 0),) * 3]


def test_quasi_free_solution_is_target_letter(m):
    sol = solve_conjugate(m, "g", BasisSpec((Fraction(-1), Fraction(0), Fraction(1)), 3))
    on_target, off = coeff_profile(sol, "g")
    assert abs(on_target - 1) < 1e-8
    assert off < 1e-8
    assert sol.residual < 1e-8
    assert sol.phi_star == pytest.approx(1.0, abs=1e-9)
    assert sol.xi_norm_sq == pytest.approx(1.0, abs=1e-9)


def test_tracial_solution_is_target_letter():
    mt = tracial_model()
    sol = solve_conjugate(mt, "g", BasisSpec(GRID5, 3))
    on_target, off = coeff_profile(sol, "g")
    assert abs(on_target - 1) < 1e-10
    assert off < 1e-10
    assert sol.residual < 1e-10
    assert sol.phi_star == pytest.approx(1.0, abs=1e-10)


def test_scaling_of_solution(m):
    lam_sq = 2.25
    scaled = m.scaled(lam_sq)
    sol = solve_conjugate(scaled, "g", BasisSpec(GRID3, 2))
    on_target, off = coeff_profile(sol, "g")
    # the solved vector is still the generator letter; its norm scales
    assert abs(on_target - 1) < 1e-8
    assert off < 1e-8
    assert sol.xi_norm_sq == pytest.approx(lam_sq, abs=1e-8)
    assert sol.phi_star == pytest.approx(1.0, abs=1e-8)


def test_rhs_scales_with_weights(m):
    lam_sq = 4.0
    base = solve_conjugate(m, "g", BasisSpec(GRID3, 2))
    scaled = solve_conjugate(m.scaled(lam_sq), "g", BasisSpec(GRID3, 2))
    # b_P is homogeneous of one power of the covariance per contraction;
    # for single-letter rows that is exactly one factor
    for w, b0, b1 in zip(base.basis_words, base.rhs, scaled.rhs):
        if len(w) == 1:
            assert b1 == pytest.approx(lam_sq * b0, abs=1e-12)


def test_solution_self_adjoint(m):
    sol = solve_conjugate(m, "g", BasisSpec(GRID5, 3))
    assert self_adjoint_defect(m, sol) < 1e-8


def test_gram_condition_reported(m):
    sol = solve_conjugate(m, "g", BasisSpec(GRID3, 2))
    assert sol.gram_condition >= 1.0


def test_fisher_single_equals_phi_star(m):
    spec = BasisSpec(GRID3, 2)
    sol = solve_conjugate(m, "g", spec)
    assert fisher_multi(m, ["g"], spec) == pytest.approx(sol.phi_star, abs=1e-12)


def test_fisher_two_free_generators():
    mp = pair_model()
    assert fisher_multi(mp, ["1", "2"], BasisSpec(GRID3, 2)) == pytest.approx(
        2.0, abs=1e-8
    )


def test_freeness_invariance_of_solution():
    mp = pair_model()
    spec = BasisSpec(GRID3, 2)
    alone = solve_conjugate(mp, "1", spec, b_gens=())
    enlarged = solve_conjugate(mp, "1", spec, b_gens=("2",))
    assert len(enlarged.basis_words) > len(alone.basis_words)
    assert l2_distance(mp, alone.polynomial(), enlarged.polynomial()) < 1e-8
    assert abs(alone.phi_star - enlarged.phi_star) < 1e-8


def test_galerkin_ladder_monotone(m):
    ladder = [
        BasisSpec((Fraction(0),), 1),
        BasisSpec((Fraction(0), Fraction(1, 2)), 2),
        BasisSpec(GRID3, 2),
        BasisSpec(GRID5, 3),
    ]
    norms = [solve_conjugate(m, "g", spec).xi_norm_sq for spec in ladder]
    for a, b in zip(norms, norms[1:]):
        assert b >= a - 1e-10
    bound = m.generators[0].eta(0).real
    assert all(v <= bound + 1e-9 for v in norms)


def test_cramer_rao_normalized_single(m):
    rep = cramer_rao_audit(m, ["g"], BasisSpec(GRID3, 2))
    assert rep.normalized and rep.asserted
    assert rep.lhs == pytest.approx(1.0, abs=1e-7)
    assert rep.rhs == 1.0
    assert rep.note == ""


def test_cramer_rao_normalized_pair():
    mp = pair_model()
    rep = cramer_rao_audit(mp, ["1", "2"], BasisSpec(GRID3, 2))
    assert rep.normalized
    assert rep.lhs == pytest.approx(4.0, abs=1e-7)
    assert rep.rhs == 4.0


def test_cramer_rao_audit_only_when_not_normalized(m):
    rep = cramer_rao_audit(m.scaled(4.0), ["g"], BasisSpec(GRID3, 2))
    assert not rep.normalized
    assert not rep.asserted
    assert rep.note == "normalization audit"
    assert rep.ratio == pytest.approx(16.0, abs=1e-6)


def test_chi_star_empty_family_is_zero(m):
    assert chi_star(m, [], [0.0, 1.0], 2.0, BasisSpec(GRID3, 2)) == 0.0


def test_chi_star_grid_validation(m):
    spec = BasisSpec(GRID3, 2)
    with pytest.raises(GridError):
        chi_star(m, ["g"], [0.5, 1.0], 2.0, spec)
    with pytest.raises(GridError):
        chi_star(m, ["g"], [0.0, 1.0, 1.0], 2.0, spec)
    with pytest.raises(GridError):
        chi_star(m, ["g"], [0.0, 1.0], 0.5, spec)


def test_chi_star_quadrature_converges(m):
    # on this model the solver value is scale invariant, so the integrand
    # is (1/(1+t) - 1)/2 and the total has a closed form
    spec = BasisSpec((Fraction(0),), 1)
    cutoff = 4.0
    exact = 0.5 * (math.log(1.0 + cutoff) - cutoff)

    def run(n):
        grid = [k / n for k in range(n + 1)]
        return chi_star(m, ["g"], grid, cutoff, spec)

    err_coarse = abs(run(4) - exact)
    err_fine = abs(run(8) - exact)
    assert err_fine < err_coarse / 2


def test_modular_covariance_zero_shift(m):
    spec = BasisSpec(GRID3, 2)
    assert modular_covariance_check(m, "g", 0, spec) < 1e-12


def test_modular_covariance_half_shift(m):
    spec = BasisSpec(GRID3, 2)
    assert modular_covariance_check(m, "g", "1/2", spec) < 1e-8


def test_modular_covariance_random_shifts(m):
    spec = BasisSpec(GRID3, 2)
    rng = random.Random(31)
    for _ in range(5):
        s = Fraction(rng.randint(-4, 4), 4)
        assert modular_covariance_check(m, "g", s, spec) < 1e-8


def test_modular_covariance_tracial_model():
    # the flow fixes the generator, so every shift is covariant through
    # the time collapse
    mt = tracial_model()
    spec = BasisSpec(GRID3, 2)
    assert modular_covariance_check(mt, "g", "1/2", spec) < 1e-12
    sol = solve_conjugate(mt, "g", spec.shifted(Fraction(1, 2)),
                          target_time=Fraction(1, 2))
    assert sol.coefficient_map() == {(x("g", 0),): 1 + 0j}


def test_mixed_tracial_and_flowing_generators():
    mixed = build_model(
        {
            "generators": [
                {"name": "t", "mode": "half", "atoms": [{"x": 0, "w": 1}]},
                {"name": "q", "mode": "half",
                 "atoms": [{"x": "ln2/(2pi)", "w": 2 / 3}]},
            ]
        }
    )
    spec = BasisSpec(GRID3, 2)
    for target, other in (("t", "q"), ("q", "t")):
        sol = solve_conjugate(mixed, target, spec, b_gens=(other,))
        big = {w: c for w, c in sol.coefficient_map().items()
               if abs(c) > 1e-9}
        assert set(big) == {(x(target, 0),)}
        assert abs(big[(x(target, 0),)] - 1) < 1e-8
        assert sol.residual < 1e-9
    assert fisher_multi(mixed, ["t", "q"], spec) == pytest.approx(
        2.0, abs=1e-8
    )
