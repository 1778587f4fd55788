"""Finitely-atomic semicircular model specs and their two-point functions.

A generator is specified by a positive atomic measure ``sum_k w_k d_{x_k}``
on the real line.  Its two-point function is the finite exponential sum

    eta(z) = sum_k w_k exp(2 pi i z x_k),

entire in z, so analytic continuation is exact.  The boundary identity
``eta(t + i) == eta(-t)`` for all real t is equivalent to the atom pairing

    w(-x) = w(x) * exp(-2 pi x)        ("detailed balance"),

which is the exactly checkable condition under which the model state has
the modular dynamics the algebra layer tracks.  Distinct generators are
mutually free by construction: their cross covariance is identically zero.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

__all__ = [
    "ConfigError",
    "DetailedBalanceViolation",
    "SpectralAtom",
    "GeneratorSpec",
    "ModelSpec",
    "KmsReport",
    "eta",
    "check_detailed_balance",
    "check_kms",
    "build_model",
    "load_model",
    "two_atom_model",
    "tracial_model",
    "LN2_OVER_2PI",
    "DEFAULT_TOLERANCE",
]

TWO_PI = 2.0 * math.pi

#: frequency of the documented two-atom example; exp(-2*pi*x) = 1/2 there
LN2_OVER_2PI = math.log(2.0) / TWO_PI

DEFAULT_TOLERANCE = 1e-9

_BALANCE_RTOL = 1e-12


class ConfigError(ValueError):
    """Malformed model configuration."""


class DetailedBalanceViolation(ValueError):
    """Atomic measure does not satisfy the detailed-balance pairing."""

    def __init__(self, gen_id: str, message: str, atom=None):
        super().__init__(f"generator {gen_id!r}: {message}")
        self.gen_id = gen_id
        self.atom = atom


@dataclass(frozen=True)
class SpectralAtom:
    """One atom of a generator's spectral measure: weight ``w`` at ``x``."""

    x: float
    w: float

    def __post_init__(self):
        if not (self.w > 0):
            raise ConfigError(f"atom weight must be positive, got {self.w}")


@dataclass(frozen=True)
class GeneratorSpec:
    """A single semicircular generator with an atomic spectral measure."""

    gen_id: str
    atoms: tuple

    def __post_init__(self):
        if not self.atoms:
            raise ConfigError(f"generator {self.gen_id!r} has no atoms")
        freqs = [a.x for a in self.atoms]
        if len(set(freqs)) != len(freqs):
            raise ConfigError(
                f"generator {self.gen_id!r} lists duplicate frequencies"
            )

    @property
    def v(self) -> float:
        """Total mass of the measure; equals the second moment of X."""
        return math.fsum(a.w for a in self.atoms)

    @property
    def is_tracial(self) -> bool:
        """True when the modular flow fixes this generator (all atoms at 0)."""
        return all(a.x == 0.0 for a in self.atoms)

    def eta(self, z) -> complex:
        """Two-point function at real or complex time ``z`` (exact sum)."""
        zc = complex(z)
        return sum(
            a.w * cmath.exp(2j * math.pi * zc * a.x) for a in self.atoms
        )

    def scaled(self, factor: float) -> "GeneratorSpec":
        """Same frequencies, all weights multiplied by ``factor`` > 0."""
        if not factor > 0:
            raise ConfigError("scale factor must be positive")
        return GeneratorSpec(
            self.gen_id,
            tuple(SpectralAtom(a.x, a.w * factor) for a in self.atoms),
        )


def eta(g: GeneratorSpec, z) -> complex:
    return g.eta(z)


def check_detailed_balance(g: GeneratorSpec, rtol: float = _BALANCE_RTOL) -> None:
    """Raise :class:`DetailedBalanceViolation` unless w(-x) = w(x)e^{-2 pi x}.

    Frequencies at ``x`` and ``-x`` must be exact float negations of each
    other; atoms at 0 are self-paired and unconstrained.
    """
    by_freq = {a.x: a for a in g.atoms}
    for a in g.atoms:
        if a.x == 0.0:
            continue
        partner = by_freq.get(-a.x)
        if partner is None:
            raise DetailedBalanceViolation(
                g.gen_id, f"atom at x={a.x} has no partner at -x", atom=a
            )
        if a.x > 0:
            expected = a.w * math.exp(-TWO_PI * a.x)
            if abs(partner.w - expected) > rtol * max(partner.w, expected):
                raise DetailedBalanceViolation(
                    g.gen_id,
                    f"weight at -x must be w(x)*exp(-2*pi*x): "
                    f"got {partner.w}, expected {expected} (x={a.x})",
                    atom=a,
                )


@dataclass(frozen=True)
class KmsReport:
    """Result of the analytic-boundary check on one generator."""

    gen_id: str
    detailed_balance_ok: bool
    max_deviation: float
    grid_size: int


def check_kms(g: GeneratorSpec, t_grid: Sequence[float]) -> KmsReport:
    """Verify exact detailed balance and |eta(t+i) - eta(-t)| on a grid."""
    check_detailed_balance(g)
    dev = 0.0
    for t in t_grid:
        dev = max(dev, abs(g.eta(complex(t, 1.0)) - g.eta(-t)))
    return KmsReport(
        gen_id=g.gen_id,
        detailed_balance_ok=True,
        max_deviation=dev,
        grid_size=len(t_grid),
    )


@dataclass(eq=False)
class ModelSpec:
    """A family of mutually free generators plus a default tolerance.

    Instances are immutable by convention and safe to share between
    workers; the private memo tables only cache pure evaluation results.
    """

    generators: tuple
    tolerance: float = DEFAULT_TOLERANCE
    _state_memo: dict = field(default_factory=dict, repr=False, compare=False)
    _count_memo: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.generators = tuple(self.generators)
        ids = [g.gen_id for g in self.generators]
        if len(set(ids)) != len(ids):
            raise ConfigError("generator ids must be unique")
        if not (self.tolerance > 0):
            raise ConfigError("tolerance must be positive")

    def gen(self, gen_id: str) -> GeneratorSpec:
        for g in self.generators:
            if g.gen_id == gen_id:
                return g
        raise ConfigError(f"unknown generator {gen_id!r}")

    def gen_ids(self) -> tuple:
        return tuple(g.gen_id for g in self.generators)

    def sole_generator(self) -> GeneratorSpec:
        if len(self.generators) != 1:
            raise ConfigError(
                "model has several generators; an explicit id is required"
            )
        return self.generators[0]

    def scaled(self, factor: float) -> "ModelSpec":
        """All weights multiplied by ``factor``; balance is preserved."""
        return ModelSpec(
            tuple(g.scaled(factor) for g in self.generators),
            tolerance=self.tolerance,
        )

    def config_dict(self) -> dict:
        """Canonical full-mode config equivalent to this model."""
        return {
            "generators": [
                {
                    "name": g.gen_id,
                    "mode": "full",
                    "atoms": [{"x": a.x, "w": a.w} for a in g.atoms],
                }
                for g in self.generators
            ],
            "tolerance": self.tolerance,
        }


# ----------------------------------------------------------------------
# configuration ingestion
# ----------------------------------------------------------------------

_FREQ_LITERAL = "ln2/(2pi)"


def _parse_frequency(value) -> float:
    if isinstance(value, str):
        s = value.strip().replace(" ", "")
        negative = s.startswith("-")
        if negative:
            s = s[1:]
        if s != _FREQ_LITERAL:
            raise ConfigError(
                f"unknown frequency literal {value!r}; "
                f'use a number or "{_FREQ_LITERAL}"'
            )
        return -LN2_OVER_2PI if negative else LN2_OVER_2PI
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ConfigError(f"frequency must be a number or literal, got {value!r}")


def _parse_weight(value) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ConfigError(f"weight must be a number, got {value!r}")


def _build_generator(entry) -> GeneratorSpec:
    if not isinstance(entry, dict):
        raise ConfigError("each generator entry must be an object")
    try:
        name = entry["name"]
        mode = entry["mode"]
        atoms_cfg = entry["atoms"]
    except KeyError as exc:
        raise ConfigError(f"generator entry missing key {exc}") from None
    if not isinstance(name, str) or not name:
        raise ConfigError("generator name must be a non-empty string")
    if mode not in ("half", "full"):
        raise ConfigError(f'generator mode must be "half" or "full", got {mode!r}')
    if not isinstance(atoms_cfg, list) or not atoms_cfg:
        raise ConfigError(f"generator {name!r} needs a non-empty atom list")

    atoms = []
    for item in atoms_cfg:
        if not isinstance(item, dict) or "x" not in item or "w" not in item:
            raise ConfigError(f"generator {name!r}: atoms need x and w fields")
        xv = _parse_frequency(item["x"])
        wv = _parse_weight(item["w"])
        if mode == "half":
            if xv < 0:
                raise ConfigError(
                    f"generator {name!r}: half mode lists x >= 0 only"
                )
            atoms.append(SpectralAtom(xv, wv))
            if xv > 0:
                # synthesize the partner so balance holds exactly
                atoms.append(SpectralAtom(-xv, wv * math.exp(-TWO_PI * xv)))
        else:
            atoms.append(SpectralAtom(xv, wv))

    g = GeneratorSpec(name, tuple(atoms))
    if mode == "full":
        check_detailed_balance(g)
    return g


def build_model(config: dict) -> ModelSpec:
    """Build a :class:`ModelSpec` from a parsed JSON configuration.

    Schema: ``{"generators": [{"name": str, "mode": "half"|"full",
    "atoms": [{"x": num | "ln2/(2pi)", "w": num}, ...]}, ...],
    "tolerance": num?}``.
    """
    if not isinstance(config, dict):
        raise ConfigError("model config must be a JSON object")
    gens_cfg = config.get("generators")
    if not isinstance(gens_cfg, list) or not gens_cfg:
        raise ConfigError('config needs a non-empty "generators" list')
    unknown = set(config) - {"generators", "tolerance"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    tol = config.get("tolerance", DEFAULT_TOLERANCE)
    if not isinstance(tol, (int, float)) or isinstance(tol, bool) or tol <= 0:
        raise ConfigError("tolerance must be a positive number")
    return ModelSpec(
        tuple(_build_generator(e) for e in gens_cfg), tolerance=float(tol)
    )


def load_model(path) -> ModelSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return build_model(config)


# ----------------------------------------------------------------------
# ready-made models used by the CLI default and the test batteries
# ----------------------------------------------------------------------


def two_atom_model(gen_id: str = "g", weight: float = 2.0 / 3.0) -> ModelSpec:
    """The documented two-atom example: weight 2/3 at ln2/(2 pi), 1/3 at
    the mirror frequency; total mass 1."""
    return build_model(
        {
            "generators": [
                {
                    "name": gen_id,
                    "mode": "half",
                    "atoms": [{"x": _FREQ_LITERAL, "w": weight}],
                }
            ]
        }
    )


def tracial_model(gen_id: str = "g", v: float = 1.0) -> ModelSpec:
    """Single atom at 0: trivial modular flow, semicircular of variance v."""
    return build_model(
        {
            "generators": [
                {"name": gen_id, "mode": "half", "atoms": [{"x": 0, "w": v}]}
            ]
        }
    )
