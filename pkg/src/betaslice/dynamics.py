"""The Lebesgue-measure-preserving system on the region under the density.

X is the set {(x, y): x in I_beta, 0 <= y <= h(x)} for the converged
density grid h.  The map stretches x by beta, compresses y by 2/beta, and
the branch is decided by whether y fits under the rescaled left-child
density: ties and the y-membership test follow the grid's cell-average
values, so the graph boundary is handled at grid resolution only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import DensityGrid, evaluate_density
from .numerics import BetaParam, DomainError, apply_word


@dataclass(frozen=True)
class PhiPoint:
    x: float
    y: float


def _h(g: DensityGrid, x):
    return evaluate_density(g, x)


def _local_roof(g: DensityGrid, x) -> np.ndarray:
    """Max of the cell value and its neighbours: membership within one cell
    of the graph is accepted, since the graph is only resolved to cells."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    idx = np.floor((x - g.lo) / g.cell_width).astype(int)
    inside = (idx >= 0) & (idx < g.cell_count)
    roof = np.zeros_like(x)
    vals = g.values
    i = idx[inside]
    lo = np.maximum(i - 1, 0)
    hi = np.minimum(i + 1, g.cell_count - 1)
    roof[inside] = np.maximum(np.maximum(vals[lo], vals[i]), vals[hi])
    return roof


def in_region(p: PhiPoint, g: DensityGrid) -> bool:
    if not (g.lo <= p.x < g.hi) or p.y < 0.0:
        return False
    return p.y <= float(_local_roof(g, p.x)[0])


def phi_many(xs: np.ndarray, ys: np.ndarray, g: DensityGrid,
             bp: BetaParam) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised step: returns (x', y', digit) arrays."""
    b = bp.beta
    bx = b * xs
    h_left = evaluate_density(g, bx)
    take0 = ys <= (b / 2.0) * h_left
    digits = (~take0).astype(np.int8)
    xs2 = bx - digits
    ys2 = np.where(take0, 2.0 * ys / b, 2.0 * ys / b - h_left)
    return xs2, ys2, digits


def phi_step(p: PhiPoint, g: DensityGrid, bp: BetaParam) -> tuple[PhiPoint, int]:
    """One step of the area-preserving map; digit 0 on ties."""
    if not in_region(p, g):
        raise DomainError(f"point {p} outside the region under the density")
    xs, ys, ds = phi_many(np.array([p.x]), np.array([p.y]), g, bp)
    return PhiPoint(float(xs[0]), float(ys[0])), int(ds[0])


def phi_code(p: PhiPoint, g: DensityGrid, bp: BetaParam, n: int) -> tuple[int, ...]:
    """Itinerary digits of n steps; digit k says which branch step k took."""
    word = []
    for _ in range(n):
        p, d = phi_step(p, g, bp)
        word.append(d)
    return tuple(word)


def phi_hat_step(point: tuple[float, float, float], g: DensityGrid,
                 bp: BetaParam) -> tuple[float, float, float]:
    """Invertible extension: the third coordinate records digit history
    in binary, z' = (z + digit) / 2."""
    x, y, z = point
    if not (0.0 <= z <= 1.0):
        raise DomainError(f"z={z} outside [0,1]")
    p2, d = phi_step(PhiPoint(x, y), g, bp)
    return (p2.x, p2.y, (z + d) / 2.0)


def fiber_interval(x, word, g: DensityGrid, bp: BetaParam) -> tuple[float, float]:
    """Sub-interval of [0, h(x)] cut from the fibre by the cylinder of the word.

    Built by pulling the deepest fibre back through each branch's affine
    y-map; its length is (beta/2)^n h(T_w x) up to grid error.
    """
    path = [float(x)]
    for d in word:
        path.append(bp.beta * path[-1] - d)
    hx = evaluate_density(g, path[0])
    if hx <= 0.0:
        from .fibers import UndefinedFiberError
        raise UndefinedFiberError(f"density vanishes at x={x}")
    half = bp.beta / 2.0
    lo, hi = 0.0, evaluate_density(g, path[-1])
    for k in range(len(word) - 1, -1, -1):
        offset = half * evaluate_density(g, bp.beta * path[k]) if word[k] == 1 else 0.0
        lo, hi = half * lo + offset, half * hi + offset
    return (lo, hi)


def sample_region(g: DensityGrid, count: int, seed: int = 0,
                  batch: int = 1_000_000) -> tuple[np.ndarray, np.ndarray]:
    """Uniform points under the density graph by rejection from the box."""
    rng = np.random.default_rng(seed)
    top = g.sup_estimate
    xs_out, ys_out = [], []
    got = 0
    while got < count:
        m = min(batch, max(4 * (count - got), 1024))
        xs = rng.uniform(g.lo, g.hi, m)
        ys = rng.uniform(0.0, top, m)
        keep = ys <= evaluate_density(g, xs)
        xs, ys = xs[keep], ys[keep]
        take = min(len(xs), count - got)
        xs_out.append(xs[:take])
        ys_out.append(ys[:take])
        got += take
    return np.concatenate(xs_out), np.concatenate(ys_out)


def region_reference_histogram(g: DensityGrid, bins: int) -> np.ndarray:
    """Expected bin masses of the uniform law on the region, bins x bins
    over the bounding box [lo,hi] x [0, sup]."""
    top = g.sup_estimate
    ref = np.zeros((bins, bins))
    col = np.floor((g.midpoints() - g.lo) / ((g.hi - g.lo) / bins)).astype(int)
    col = np.clip(col, 0, bins - 1)
    dy = top / bins
    for j in range(bins):
        y0 = j * dy
        part = np.clip(g.values - y0, 0.0, dy) * g.cell_width
        np.add.at(ref[:, j], col, part)
    return ref / np.sum(ref)


def pushforward_histogram(g: DensityGrid, bp: BetaParam, sample_count: int,
                          steps: int, seed: int, bins: int = 64) -> np.ndarray:
    xs, ys = sample_region(g, sample_count, seed=seed)
    for _ in range(steps):
        xs, ys, _ = phi_many(xs, ys, g, bp)
    top = g.sup_estimate
    H, _, _ = np.histogram2d(
        np.clip(xs, g.lo, np.nextafter(g.hi, g.lo)),
        np.clip(ys, 0.0, np.nextafter(top, 0.0)),
        bins=bins, range=[[g.lo, g.hi], [0.0, top]])
    return H / sample_count


def check_measure_preservation(g: DensityGrid, bp: BetaParam,
                               sample_count: int = 10 ** 6, steps: int = 1,
                               seed: int = 0, bins: int = 64) -> float:
    """Total-variation distance between the empirical pushforward histogram
    and the uniform-on-the-region reference; steps=0 gives the noise floor."""
    emp = pushforward_histogram(g, bp, sample_count, steps, seed, bins)
    ref = region_reference_histogram(g, bins)
    return 0.5 * float(np.sum(np.abs(emp - ref)))


def branch_areas(g: DensityGrid, bp: BetaParam) -> tuple[float, float]:
    """Areas of the two branch domains; each should be 1/2 at grid tolerance."""
    mids = g.midpoints()
    roof0 = (bp.beta / 2.0) * evaluate_density(g, bp.beta * mids)
    a0 = float(np.sum(np.minimum(roof0, g.values)) * g.cell_width)
    total = g.total_mass
    return a0, total - a0


def conjugacy_defect(g: DensityGrid, bp: BetaParam, starts: int = 1000,
                     steps: int = 30, seed: int = 0) -> float:
    """Max |x-projection of the orbit - word action on x0| over random starts.

    The x-coordinate recomputed by applying the emitted digits through the
    expansion maps must match the orbit's own first coordinate.
    """
    xs, ys = sample_region(g, starts, seed=seed)
    x0 = xs.copy()
    words = np.empty((starts, steps), dtype=np.int8)
    for k in range(steps):
        xs, ys, d = phi_many(xs, ys, g, bp)
        words[:, k] = d
    worst = 0.0
    for i in range(starts):
        replay = apply_word(words[i].tolist(), float(x0[i]), bp)
        worst = max(worst, abs(replay - float(xs[i])))
    return worst
