"""Seeded random inputs for the verification batteries.

Everything here is driven by a caller-owned `random.Random`, so identical
seeds give identical inputs on every platform.
"""
from __future__ import annotations

import random
from fractions import Fraction

from .algebra import NcPoly, Word, X_FAMILY, x, y
from .core_cp import CoreWord, UStep

__all__ = [
    "HALF_GRID",
    "random_time",
    "random_word",
    "random_ncpoly",
    "random_core_word",
]

#: default rational time pool
HALF_GRID = tuple(Fraction(k, 2) for k in range(-2, 3))


def random_time(rng: random.Random, pool=HALF_GRID) -> Fraction:
    return rng.choice(pool)


def random_word(
    rng: random.Random,
    gens,
    max_len: int,
    families=(X_FAMILY,),
    pool=HALF_GRID,
    even: bool = False,
) -> Word:
    n = rng.randint(0, max_len)
    if even and n % 2:
        n = n - 1 if n > 0 else 0
    letters = []
    for _ in range(n):
        fam = rng.choice(families)
        gen = rng.choice(list(gens))
        t = random_time(rng, pool)
        letters.append(x(gen, t) if fam == X_FAMILY else y(gen, t))
    return tuple(letters)


def random_ncpoly(
    rng: random.Random,
    gens,
    max_len: int,
    n_terms: int = 3,
    pool=HALF_GRID,
) -> NcPoly:
    terms = []
    for _ in range(rng.randint(1, n_terms)):
        w = random_word(rng, gens, max_len, pool=pool)
        c = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        terms.append((w, c))
    return NcPoly(terms)


def random_core_word(
    rng: random.Random,
    gens,
    max_x_degree: int,
    pool=HALF_GRID,
    u_pool=HALF_GRID,
) -> CoreWord:
    tokens = []
    n_x = rng.randint(0, max_x_degree)
    for _ in range(n_x):
        if rng.random() < 0.6:
            tokens.append(UStep(random_time(rng, u_pool)))
        tokens.append(x(rng.choice(list(gens)), random_time(rng, pool)))
    if rng.random() < 0.7:
        tokens.append(UStep(random_time(rng, u_pool)))
    return CoreWord(tuple(tokens))
