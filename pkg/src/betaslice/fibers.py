"""Cylinder masses of the fibre measures and Hausdorff-measure bounds.

For x with positive density h(x), the cylinder fixed by a word w of
length n carries mass (beta/2)^n * h(T_w x) / h(x).  The same quantity,
summed over the uniform depth-n cover, bounds the Hausdorff measure of
the expansion set in the 2^-n symbolic metric, with critical exponent
log(2/beta)/log 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import DensityGrid, evaluate_density
from .expansions import enumerate_words, level_counts
from .numerics import BetaParam, apply_word


class UndefinedFiberError(ValueError):
    """The density vanishes at x, so the normalised fibre measure is undefined."""


def hausdorff_exponent(bp: BetaParam | float) -> float:
    beta = bp.beta if isinstance(bp, BetaParam) else float(bp)
    return math.log(2.0 / beta) / math.log(2.0)


def _h_at(x, g: DensityGrid) -> float:
    return evaluate_density(g, float(x))


def cylinder_mass(x, word, g: DensityGrid, bp: BetaParam) -> float:
    """(beta/2)^len(word) * h(T_w x) / h(x); 0 for words whose orbit escapes."""
    hx = _h_at(bp.lift(x), g)
    if hx <= 0.0:
        raise UndefinedFiberError(f"density vanishes at x={x}")
    end = apply_word(word, bp.lift(x), bp)
    return (bp.beta / 2.0) ** len(word) * _h_at(end, g) / hx


@dataclass
class FiberDistribution:
    """Masses of all admissible depth-n cylinders over one point."""

    x: float
    depth: int
    words: list[tuple[int, ...]]
    end_values: np.ndarray
    masses: np.ndarray

    @property
    def mass_sum(self) -> float:
        return float(np.sum(self.masses))


def fiber_distribution(x, bp: BetaParam, n: int, g: DensityGrid) -> FiberDistribution:
    xv = bp.lift(x)
    hx = _h_at(xv, g)
    if hx <= 0.0:
        raise UndefinedFiberError(f"density vanishes at x={x}")
    pairs = enumerate_words(xv, bp, n)
    words = [w for w, _ in pairs]
    ends = np.array([float(v) for _, v in pairs])
    scale = (bp.beta / 2.0) ** n / hx
    masses = scale * evaluate_density(g, ends)
    return FiberDistribution(x=float(xv), depth=n, words=words,
                             end_values=ends, masses=masses)


@dataclass
class HausdorffBounds:
    """Computable two-sided data for the Hausdorff measure of the fibre.

    cover_sums[n] = (beta/2)^n * N_n is the depth-n uniform cover sum of
    cylinder diameters raised to the critical exponent; its limit is capped
    by 2 h(x) and floored (after normalising) by h(x)/ess-sup h, where the
    max grid cell stands in for the essential sup.
    """

    exponent: float
    depths: np.ndarray
    cover_sums: np.ndarray
    upper_cap: float
    lower_floor: float
    ratio_estimate: float


def hausdorff_bounds(x, bp: BetaParam, n_max: int, g: DensityGrid,
                     diag_sup: float | None = None) -> HausdorffBounds:
    """Cover sums up to depth n_max plus the density-based cap and floor.

    ratio_estimate reports the empirical proportionality constant between
    the deepest cover sum and h(x).
    """
    xv = bp.lift(x)
    hx = _h_at(xv, g)
    if hx <= 0.0:
        raise UndefinedFiberError(f"density vanishes at x={x}")
    counts, _ = level_counts(xv, bp, n_max)
    depths = np.arange(n_max + 1)
    scaled = (bp.beta / 2.0) ** depths * np.array(counts, dtype=float)
    sup = g.sup_estimate if diag_sup is None else diag_sup
    return HausdorffBounds(
        exponent=hausdorff_exponent(bp),
        depths=depths,
        cover_sums=scaled,
        upper_cap=2.0 * hx,
        lower_floor=hx / sup,
        ratio_estimate=float(scaled[-1] / hx),
    )


def bounds_report(x, bp: BetaParam, n_max: int, g: DensityGrid) -> dict:
    """JSON-ready record of the bounds at the deepest level."""
    hb = hausdorff_bounds(x, bp, n_max, g)
    fd = fiber_distribution(x, bp, min(n_max, 12), g)
    return {
        "schema_version": 1,
        "x": float(fd.x),
        "beta": bp.beta,
        "gamma": hb.exponent,
        "n": int(n_max),
        "mass_sum": fd.mass_sum,
        "cover_sum": float(hb.cover_sums[-1]),
        "upper_cap": hb.upper_cap,
        "lower_floor": hb.lower_floor,
        "ratio_estimate": hb.ratio_estimate,
    }
