"""Moments, conjugate variables and free Fisher information for
time-indexed semicircular families under a modular flow."""

from .algebra import (
    Letter,
    NcPoly,
    Word,
    X_FAMILY,
    Y_FAMILY,
    adjoint,
    as_time,
    modular_shift,
    multiply,
    shift_word,
    word_adjoint,
    word_str,
    x,
    y,
)
from .model import (
    ConfigError,
    DetailedBalanceViolation,
    GeneratorSpec,
    KmsReport,
    ModelSpec,
    SpectralAtom,
    build_model,
    check_detailed_balance,
    check_kms,
    eta,
    load_model,
    tracial_model,
    two_atom_model,
)
from .moments import (
    SizeLimitError,
    StateValue,
    brute_force_oracle,
    collapse_tracial_times,
    covariance,
    evaluate_state,
    evaluate_state_detailed,
    evaluate_state_shifted,
    expectation,
    gram_matrix,
    inner_product,
    l2_distance,
    l2_norm,
)
from .derivation import (
    FamilyError,
    TensorElem,
    differentiate,
    pair_with_y,
    verify_insertion_identity,
)
from .conjugate import (
    BasisError,
    BasisSpec,
    ConjugateSolution,
    CramerRaoReport,
    DegenerateGramError,
    GridError,
    chi_star,
    cramer_rao_audit,
    enumerate_basis,
    fisher_multi,
    modular_covariance_check,
    self_adjoint_defect,
    solve_conjugate,
)
from .brownian import EpsExpansion, expand_state, verify_gradient_expansion
from .core_cp import (
    CoreWord,
    EtaBimoduleElem,
    TrigPoly,
    UStep,
    conditional_expectation,
    core_differentiate,
    eta_inner,
    eta_map,
    factoriality_bound,
    normal_form,
    verify_core_identity,
)
from .suite import CheckResult, run_suite

__version__ = "0.1.0"
