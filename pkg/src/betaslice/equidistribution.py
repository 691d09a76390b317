"""Empirical orbit measures and how far they sit from their targets.

Two families per point: uniform weights 1/N_n on the depth-n orbit values,
whose target is normalised Lebesgue measure on I_beta, and fibre-mass
weights, whose target is the Bernoulli convolution itself.  Distances are
taken between CDFs (sup norm and L1), which is what weak-* convergence
against intervals sees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import DensityGrid
from .expansions import OrbitMultiset, enumerate_orbit, level_counts
from .fibers import fiber_distribution
from .numerics import BetaParam, Branching, Interval, Region


@dataclass
class EmpiricalMeasure:
    """Weighted atoms; conditional variants keep their grid-limited total."""

    locations: np.ndarray
    weights: np.ndarray

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def sorted(self) -> "EmpiricalMeasure":
        order = np.argsort(self.locations, kind="stable")
        return EmpiricalMeasure(self.locations[order], self.weights[order])


def orbit_measure_uniform(x, bp: BetaParam, n: int) -> EmpiricalMeasure:
    orbit = enumerate_orbit(x, bp, n)
    locs = orbit.floats()
    weights = orbit.counts().astype(float) / orbit.n_total
    return EmpiricalMeasure(locs, weights)


def orbit_measure_conditional(x, bp: BetaParam, n: int,
                              g: DensityGrid) -> EmpiricalMeasure:
    fd = fiber_distribution(x, bp, n, g)
    return EmpiricalMeasure(fd.end_values.copy(), fd.masses.copy())


def _reference_cdf(reference, x: np.ndarray) -> np.ndarray:
    if isinstance(reference, DensityGrid):
        return reference.cdf(x) / reference.total_mass
    if isinstance(reference, Interval):
        return np.clip((x - reference.lo) / reference.length, 0.0, 1.0)
    raise TypeError("reference must be a DensityGrid or an Interval")


def _reference_span(reference) -> tuple[float, float]:
    return (reference.lo, reference.hi)


def ks_distance(e: EmpiricalMeasure, reference) -> float:
    """sup |F_emp - F_ref|; the empirical CDF is normalised to total 1.

    Between atoms the empirical CDF is constant and the reference CDF is
    monotone, so checking both one-sided limits at every atom is exact.
    """
    em = e.sorted()
    cum = np.cumsum(em.weights) / em.total_weight
    ref = _reference_cdf(reference, em.locations)
    left = np.concatenate([[0.0], cum[:-1]])
    return float(np.max(np.maximum(np.abs(cum - ref), np.abs(left - ref))))


def wasserstein1(e: EmpiricalMeasure, reference) -> float:
    """Integral of |F_emp - F_ref|, exact for step-vs-piecewise-linear CDFs."""
    em = e.sorted()
    lo, hi = _reference_span(reference)
    if isinstance(reference, DensityGrid):
        pts = np.union1d(reference.edges(), em.locations)
    else:
        pts = np.union1d(np.array([lo, hi]), em.locations)
    pts = np.union1d(pts, [min(lo, em.locations[0]), max(hi, em.locations[-1])])
    # empirical CDF is constant on each open segment; reference is linear
    cum = np.concatenate([[0.0], np.cumsum(em.weights) / em.total_weight])
    emp = cum[np.searchsorted(em.locations, pts[:-1], side="right")]
    ref = _reference_cdf(reference, pts)
    d0 = ref[:-1] - emp
    d1 = ref[1:] - emp
    widths = np.diff(pts)
    same = d0 * d1 >= 0.0
    area = np.where(same,
                    0.5 * np.abs(d0 + d1) * widths,
                    0.5 * widths * (d0 * d0 + d1 * d1) / np.maximum(np.abs(d0 - d1), 1e-300))
    return float(np.sum(area))


def switch_mass(orbit: OrbitMultiset, bp: BetaParam) -> float:
    """Fraction of the orbit multiset (with multiplicity) in the switch region."""
    br = Branching(bp)
    hit = sum(m for v, m in orbit.entries() if br.classify(v) == Region.SWITCH)
    return hit / orbit.n_total


def edge_masses(e: EmpiricalMeasure, bp: BetaParam,
                delta: float = 0.05) -> tuple[float, float]:
    """Mass within delta of the two endpoints of I_beta (normalised)."""
    r = bp.right_endpoint
    t = e.total_weight
    lo = float(np.sum(e.weights[e.locations < delta])) / t
    hi = float(np.sum(e.weights[e.locations > r - delta])) / t
    return lo, hi


@dataclass
class GrowthDiagnostics:
    """Scaled counts (beta/2)^n N_n and the branching factors behind them.

    k[i] = (beta/2) * (mu_{i,x}(S) + 1) for i = 0..n-1; the running product
    of the k's equals (beta/2)^n N_n exactly because every switch point at
    level i contributes one extra word at level i+1.  f_upper / f_lower are
    running tail extremes of the scaled counts (limsup/liminf surrogates).
    """

    depths: np.ndarray
    counts: np.ndarray
    switch_counts: np.ndarray
    scaled: np.ndarray
    k_series: np.ndarray
    k_products: np.ndarray
    f_upper: np.ndarray
    f_lower: np.ndarray
    telescoping_exact: bool
    h_x: float
    growth_target: float


def growth_series(x, bp: BetaParam, n_max: int,
                  g: DensityGrid | None = None) -> GrowthDiagnostics:
    counts, switch = level_counts(x, bp, n_max)
    counts = np.array(counts, dtype=np.int64)
    switch = np.array(switch, dtype=np.int64)
    depths = np.arange(n_max + 1)
    half = bp.beta / 2.0
    scaled = half ** depths * counts
    # integer identity behind the k-product telescoping
    exact = bool(np.all(counts[1:] == counts[:-1] + switch[:-1])) and counts[0] == 1
    k_series = half * (switch[:-1] / counts[:-1] + 1.0)
    k_products = np.cumprod(k_series)
    tail_max = np.maximum.accumulate(scaled[::-1])[::-1]
    tail_min = np.minimum.accumulate(scaled[::-1])[::-1]
    h_x = float("nan")
    if g is not None:
        from .density import evaluate_density
        h_x = evaluate_density(g, float(bp.lift(x)))
    return GrowthDiagnostics(
        depths=depths, counts=counts, switch_counts=switch, scaled=scaled,
        k_series=k_series, k_products=k_products,
        f_upper=tail_max, f_lower=tail_min,
        telescoping_exact=exact, h_x=h_x)


def tail_block_mass(x, bp: BetaParam, n: int, block: tuple[int, ...],
                    g: DensityGrid) -> float:
    """Fibre mass of depth-(n+m) words whose last m digits equal the block.

    The shift-equidistribution heuristic predicts this tends to 2^-m.
    """
    m = len(block)
    fd = fiber_distribution(x, bp, n + m, g)
    total = 0.0
    for w, mass in zip(fd.words, fd.masses):
        if w[n:] == block:
            total += mass
    return total
