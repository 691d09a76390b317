"""Piecewise-constant densities and the mass-redistribution (Ulam) solver.

The Bernoulli-convolution density solves

    h(x) = (beta/2) * (h(beta*x) + h(beta*x - 1)),

equivalently it is the fixed point of pushing mass through the two
contractions S_i(x) = (x+i)/beta with weight 1/2 each.  The same scatter
machinery, with l branches (scale, offset, weight), also solves the
projected self-similar densities on the fractal side, so it is written
generically here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .numerics import BetaParam


@dataclass
class DensityGrid:
    """Cell-average density on [lo, hi) split into equal half-open cells."""

    lo: float
    hi: float
    values: np.ndarray

    @property
    def cell_count(self) -> int:
        return len(self.values)

    @property
    def cell_width(self) -> float:
        return (self.hi - self.lo) / self.cell_count

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.values) * self.cell_width)

    @property
    def sup_estimate(self) -> float:
        return float(np.max(self.values))

    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.cell_count + 1)

    def midpoints(self) -> np.ndarray:
        w = self.cell_width
        return self.lo + w * (np.arange(self.cell_count) + 0.5)

    def masses(self) -> np.ndarray:
        return self.values * self.cell_width

    def cdf(self, x) -> np.ndarray:
        """Piecewise-linear CDF of the cell-average density."""
        x = np.asarray(x, dtype=float)
        w = self.cell_width
        cum = np.concatenate([[0.0], np.cumsum(self.masses())])
        t = np.clip((x - self.lo) / w, 0.0, self.cell_count)
        idx = np.minimum(t.astype(int), self.cell_count - 1)
        frac = t - idx
        return cum[idx] + self.values[idx] * w * frac


def evaluate_density(g: DensityGrid, x):
    """Cell-average value at x (vectorised); 0 outside [lo, hi)."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    idx = np.floor((x - g.lo) / g.cell_width).astype(int)
    inside = (idx >= 0) & (idx < g.cell_count)
    out = np.zeros_like(x)
    out[inside] = g.values[idx[inside]]
    return float(out[0]) if scalar else out


def uniform_grid(lo: float, hi: float, cells: int) -> DensityGrid:
    vals = np.full(cells, 1.0 / (hi - lo))
    return DensityGrid(lo, hi, vals)


def push_matrix(lo: float, hi: float, cells: int,
                branches: list[tuple[float, float, float]]) -> sparse.csr_matrix:
    """Sparse matrix of one mass-redistribution step.

    Each branch (scale, offset, weight) sends the mass of source cell
    [a, a+w) to its image [scale*a+offset, scale*(a+w)+offset), split over
    the (at most two, since scale < 1) target cells it overlaps.
    Rows index targets, columns sources; column sums equal 1.
    """
    w = (hi - lo) / cells
    a = lo + w * np.arange(cells)
    rows, cols, vals = [], [], []
    src = np.arange(cells)
    for scale, offset, weight in branches:
        if not (0.0 < scale < 1.0):
            raise ValueError(f"branch scale must lie in (0,1), got {scale}")
        left = scale * a + offset
        right = left + scale * w
        i0 = np.floor((left - lo) / w).astype(int)
        split = lo + w * (i0 + 1)
        frac = np.clip((split - left) / (right - left), 0.0, 1.0)
        i0c = np.clip(i0, 0, cells - 1)
        i1c = np.clip(i0 + 1, 0, cells - 1)
        rows.append(i0c)
        cols.append(src)
        vals.append(weight * frac)
        rows.append(i1c)
        cols.append(src)
        vals.append(weight * (1.0 - frac))
    mat = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(cells, cells))
    return mat.tocsr()


def beta_branches(bp: BetaParam) -> list[tuple[float, float, float]]:
    b = bp.beta
    return [(1.0 / b, 0.0, 0.5), (1.0 / b, 1.0 / b, 0.5)]


def ulam_step(g: DensityGrid, bp: BetaParam) -> DensityGrid:
    """One transfer-operator step for the two beta branches."""
    mat = push_matrix(g.lo, g.hi, g.cell_count, beta_branches(bp))
    masses = mat @ g.masses()
    return DensityGrid(g.lo, g.hi, masses / g.cell_width)


@dataclass
class DensityDiagnostics:
    l1_residual: float
    sup_estimate: float
    iterations: int
    refinement_stability: float
    converged: bool


def _iterate_to_fixed_point(lo, hi, cells, branches, tol, max_iter):
    mat = push_matrix(lo, hi, cells, branches)
    w = (hi - lo) / cells
    mass = np.full(cells, 1.0 / cells)
    its = 0
    converged = False
    for its in range(1, max_iter + 1):
        new = mat @ mass
        if np.sum(np.abs(new - mass)) < tol:
            mass = new
            converged = True
            break
        mass = new
    return DensityGrid(lo, hi, mass / w), its, converged


def self_similarity_residual(g: DensityGrid, inverse_branches) -> float:
    """L1 defect of h(x) = sum_i weight_i * h(Tinv_i(x)) at cell midpoints.

    ``inverse_branches`` is a list of (weight, callable) pairs mapping x to
    the pulled-back point; h is the grid itself (0 outside support).
    """
    mids = g.midpoints()
    rhs = np.zeros_like(mids)
    for weight, tinv in inverse_branches:
        rhs += weight * evaluate_density(g, tinv(mids))
    return float(np.sum(np.abs(g.values - rhs)) * g.cell_width)


def heq_residual(g: DensityGrid, bp: BetaParam) -> float:
    """Residual of the beta self-similarity relation."""
    b = bp.beta
    return self_similarity_residual(
        g, [(b / 2.0, lambda x: b * x), (b / 2.0, lambda x: b * x - 1.0)])


def solve_density(bp: BetaParam, cells: int = 2 ** 14, tol: float = 1e-10,
                  max_iter: int = 5000, stability: bool = True,
                  ) -> tuple[DensityGrid, DensityDiagnostics]:
    """Iterate the mass redistribution from the uniform density on I_beta.

    Convergence is declared when successive iterates are closer than tol
    in L1; non-convergence only flags the diagnostics.  The stability field
    reports the relative change of the max cell value when the grid is
    doubled, a heuristic for (un)boundedness of the limiting density.
    """
    if cells < 2 ** 8:
        raise ValueError("cell_count must be at least 2^8")
    if tol <= 0:
        raise ValueError("tol must be positive")
    hi = bp.right_endpoint
    g, its, conv = _iterate_to_fixed_point(0.0, hi, cells, beta_branches(bp),
                                           tol, max_iter)
    refinement = float("nan")
    if stability:
        g2, _, _ = _iterate_to_fixed_point(0.0, hi, 2 * cells, beta_branches(bp),
                                           tol, max_iter)
        refinement = abs(g2.sup_estimate - g.sup_estimate) / g.sup_estimate
    diag = DensityDiagnostics(
        l1_residual=heq_residual(g, bp),
        sup_estimate=g.sup_estimate,
        iterations=its,
        refinement_stability=refinement,
        converged=conv,
    )
    return g, diag


def default_truncation(bp: BetaParam, cells: int) -> int:
    """Smallest L with the truncation tail beta^-L/(beta-1) below one cell width."""
    w = bp.right_endpoint / cells
    L = max(1, int(np.ceil(np.log(bp.right_endpoint / w) / np.log(bp.beta))))
    while bp.right_endpoint * bp.beta ** -L >= w:
        L += 1
    return L


def sample_density(bp: BetaParam, sample_count: int, truncation: int | None = None,
                   cells: int = 2 ** 10, seed: int = 0,
                   chunk: int = 1_000_000) -> DensityGrid:
    """Monte Carlo histogram of truncated fair-coin sums sum a_i beta^-i.

    Independent of the fixed-point solver, so the two act as mutual checks.
    """
    if truncation is None:
        truncation = default_truncation(bp, cells)
    w = bp.right_endpoint / cells
    if bp.beta ** (-truncation) / (bp.beta - 1.0) >= w:
        raise ValueError("truncation too short for the requested resolution")
    rng = np.random.default_rng(seed)
    powers = bp.beta ** -np.arange(1, truncation + 1)
    edges = np.linspace(0.0, bp.right_endpoint, cells + 1)
    counts = np.zeros(cells, dtype=np.int64)
    remaining = sample_count
    while remaining > 0:
        m = min(chunk, remaining)
        digits = rng.integers(0, 2, size=(m, truncation))
        vals = digits @ powers
        c, _ = np.histogram(vals, bins=edges)
        counts += c
        remaining -= m
    return DensityGrid(0.0, bp.right_endpoint, counts / (sample_count * w))


def coarsen(g: DensityGrid, cells: int) -> DensityGrid:
    """Block-sum the grid down to a coarser resolution (exact cell masses)."""
    if g.cell_count % cells:
        raise ValueError("target cell count must divide the current one")
    f = g.cell_count // cells
    mass = g.masses().reshape(cells, f).sum(axis=1)
    return DensityGrid(g.lo, g.hi, mass / ((g.hi - g.lo) / cells))


def l1_distance(g1: DensityGrid, g2: DensityGrid) -> float:
    """Exact L1 distance between two piecewise-constant densities.

    Grids may differ in support and resolution; the integral is taken over
    the union of all cell breakpoints.
    """
    pts = np.union1d(g1.edges(), g2.edges())
    lo = min(g1.lo, g2.lo)
    hi = max(g1.hi, g2.hi)
    pts = np.union1d(pts, [lo, hi])
    mids = 0.5 * (pts[:-1] + pts[1:])
    widths = np.diff(pts)
    diff = np.abs(evaluate_density(g1, mids) - evaluate_density(g2, mids))
    return float(np.sum(diff * widths))


def export_csv(g: DensityGrid, path) -> None:
    """cell_lo, cell_hi, value rows."""
    edges = g.edges()
    with open(path, "w") as fh:
        fh.write("cell_lo,cell_hi,value\n")
        for lo, hi, v in zip(edges[:-1], edges[1:], g.values):
            fh.write(f"{lo:.12g},{hi:.12g},{v:.12g}\n")
