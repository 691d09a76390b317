"""Enumeration of beta-expansions.

The admissible length-n words for x are the binary words whose orbit
T_{a_1..a_n}(x) never leaves I_beta; they branch exactly when the running
value sits in the closed switch region.  The multiset of depth-n orbit
values is what equidistributes (or fails to) as n grows, so everything
here reports both the values and their integer multiplicities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .numerics import (AlgebraicValue, BetaParam, Branching, DepthCapError,
                       DomainError, Region, apply_map)

DEPTH_CAP = 40


@dataclass
class OrbitMultiset:
    """Depth-n orbit values with multiplicities; total count is N_n."""

    depth: int
    values: list
    multiplicities: list[int]

    @property
    def n_total(self) -> int:
        return sum(self.multiplicities)

    def entries(self) -> Iterator[tuple]:
        return zip(self.values, self.multiplicities)

    def floats(self) -> np.ndarray:
        return np.array([float(v) for v in self.values], dtype=float)

    def counts(self) -> np.ndarray:
        return np.array(self.multiplicities, dtype=np.int64)


def _check_args(x, bp: BetaParam, n: int, cap: int):
    if n < 0:
        raise ValueError("depth must be nonnegative")
    if n > cap:
        raise DepthCapError(f"depth {n} exceeds cap {cap}")
    br = Branching(bp)
    x = bp.lift(x)
    if not br.in_domain(x):
        raise DomainError(f"x={x} outside I_beta")
    return x, br


def _collapse_exact(leaves: list) -> tuple[list, list[int]]:
    counts: dict = {}
    for v in leaves:
        counts[v] = counts.get(v, 0) + 1
    items = sorted(counts.items(), key=lambda kv: float(kv[0]))
    return [v for v, _ in items], [m for _, m in items]


def _collapse_float(leaves: list[float], tau: float) -> tuple[list, list[int]]:
    # sort, then merge runs whose spread from the run head stays within tau
    vals = sorted(leaves)
    out_v: list[float] = []
    out_m: list[int] = []
    head = None
    for v in vals:
        if head is not None and v - head <= tau:
            out_m[-1] += 1
        else:
            head = v
            out_v.append(v)
            out_m.append(1)
    return out_v, out_m


def enumerate_orbit(x, bp: BetaParam, n: int, cap: int = DEPTH_CAP) -> OrbitMultiset:
    """Depth-first expansion of the admissibility tree, pruned by region.

    Equal depth-n values are collapsed into multiplicities: exact equality
    in exact mode, tau-bucketing of the sorted values in float mode.
    """
    x, br = _check_args(x, bp, n, cap)
    leaves = []
    stack = [(x, 0)]
    while stack:
        v, d = stack.pop()
        if d == n:
            leaves.append(v)
            continue
        for digit in br.digits(v):
            stack.append((apply_map(digit, v, bp), d + 1))
    if bp.exact:
        values, mults = _collapse_exact(leaves)
    else:
        values, mults = _collapse_float(leaves, bp.tau)
    return OrbitMultiset(depth=n, values=values, multiplicities=mults)


def enumerate_words(x, bp: BetaParam, n: int, cap: int = DEPTH_CAP):
    """All admissible depth-n words with their end values, lexicographic order."""
    x, br = _check_args(x, bp, n, cap)
    out = []

    def walk(v, word):
        if len(word) == n:
            out.append((word, v))
            return
        for digit in br.digits(v):
            walk(apply_map(digit, v, bp), word + (digit,))

    walk(x, ())
    return out


def level_counts(x, bp: BetaParam, n_max: int,
                 cap: int = DEPTH_CAP) -> tuple[list[int], list[int]]:
    """(N_k, S_k) for k = 0..n_max in one tree pass.

    N_k counts admissible words of length k, S_k the level-k orbit entries
    (with multiplicity) lying in the closed switch region; every level obeys
    N_{k+1} = N_k + S_k because switch points are exactly the branch points.
    """
    x, br = _check_args(x, bp, n_max, cap)
    counts = [0] * (n_max + 1)
    switch = [0] * (n_max + 1)
    stack = [(x, 0)]
    while stack:
        v, d = stack.pop()
        counts[d] += 1
        region = br.classify(v)
        if region == Region.SWITCH:
            switch[d] += 1
        if d == n_max:
            continue
        if region == Region.LOWER:
            stack.append((apply_map(0, v, bp), d + 1))
        elif region == Region.UPPER:
            stack.append((apply_map(1, v, bp), d + 1))
        else:
            stack.append((apply_map(0, v, bp), d + 1))
            stack.append((apply_map(1, v, bp), d + 1))
    return counts, switch


def count_series(x, bp: BetaParam, n_max: int, cap: int = DEPTH_CAP) -> list[int]:
    """N_1..N_{n_max}: how many admissible words exist at each depth."""
    counts, _ = level_counts(x, bp, n_max, cap)
    return counts[1:]


def greedy_expansion(x, bp: BetaParam, n: int) -> tuple[int, ...]:
    """Digit 1 whenever it is allowed (x >= 1/beta); lexicographic maximum."""
    x, br = _check_args(x, bp, n, n)
    word = []
    for _ in range(n):
        d = 1 if x >= br.inv_beta else 0
        word.append(d)
        x = apply_map(d, x, bp)
    return tuple(word)


def lazy_expansion(x, bp: BetaParam, n: int) -> tuple[int, ...]:
    """Digit 0 whenever it is allowed (x <= 1/(beta*(beta-1))); lexicographic minimum."""
    x, br = _check_args(x, bp, n, n)
    word = []
    for _ in range(n):
        d = 0 if x <= br.switch_hi else 1
        word.append(d)
        x = apply_map(d, x, bp)
    return tuple(word)


@dataclass
class RandomState:
    """Point plus the lazily consumed coin stream of the random map."""

    x: float
    rng: np.random.Generator
    seed: int | None = None

    @classmethod
    def from_seed(cls, x: float, seed: int) -> "RandomState":
        return cls(x=x, rng=np.random.default_rng(seed), seed=seed)


def random_beta_step(state: RandomState, bp: BetaParam) -> tuple[RandomState, int]:
    """One step of the random beta-transformation.

    Outside the switch region the digit is forced and the coin stream is
    untouched; inside, the next coin decides the branch.
    """
    br = Branching(bp)
    if not br.in_domain(state.x):
        raise DomainError(f"x={state.x} outside I_beta")
    region = br.classify(state.x)
    if region == Region.LOWER:
        digit = 0
    elif region == Region.UPPER:
        digit = 1
    else:
        digit = int(state.rng.integers(0, 2))
    state.x = apply_map(digit, state.x, bp)
    return state, digit


def random_expansion(x: float, bp: BetaParam, n: int, seed: int = 0) -> tuple[tuple[int, ...], float]:
    """n digits generated by iterating the random map from (seed, x)."""
    state = RandomState.from_seed(x, seed)
    word = []
    for _ in range(n):
        state, d = random_beta_step(state, bp)
        word.append(d)
    return tuple(word), state.x
