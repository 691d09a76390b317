"""Self-similar sets without rotations: dimension, projections, slices.

An attractor E = union of S_i(E), S_i(v) = r_i*v + d_i, projects along a
unit direction u to a 1-D weighted system p -> r_i*p + <d_i, u> with the
natural weights r_i^s (s the Moran dimension).  Slices of E by hyperplanes
perpendicular to u are coded by the words whose projected cylinder hulls
contain the slice coordinate; cylinder words compose first-digit-outermost
so children nest inside parents and masses telescope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .density import (DensityDiagnostics, DensityGrid, _iterate_to_fixed_point,
                      evaluate_density, self_similarity_residual)


@dataclass
class IfsSpec:
    """Contracting similarities without rotations plus a declared open set."""

    dimension: int
    ratios: np.ndarray
    translations: np.ndarray
    open_lo: np.ndarray
    open_hi: np.ndarray

    def __post_init__(self):
        self.ratios = np.asarray(self.ratios, dtype=float)
        self.translations = np.asarray(self.translations, dtype=float)
        self.open_lo = np.asarray(self.open_lo, dtype=float)
        self.open_hi = np.asarray(self.open_hi, dtype=float)
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if self.translations.shape != (len(self.ratios), self.dimension):
            raise ValueError("translations must be (map_count, dimension)")
        if np.any(self.ratios <= 0) or np.any(self.ratios >= 1):
            raise ValueError("ratios must lie in (0,1)")
        self._check_open_set()

    def _check_open_set(self):
        # images of the declared box must sit inside it, disjoint interiors
        los = self.ratios[:, None] * self.open_lo[None, :] + self.translations
        his = self.ratios[:, None] * self.open_hi[None, :] + self.translations
        eps = 1e-12
        if np.any(los < self.open_lo - eps) or np.any(his > self.open_hi + eps):
            raise ValueError("open-set box does not contain its images")
        l = len(self.ratios)
        for i in range(l):
            for j in range(i + 1, l):
                overlap = np.minimum(his[i], his[j]) - np.maximum(los[i], los[j])
                if np.all(overlap > eps):
                    raise ValueError(f"open-set images {i} and {j} overlap")

    @property
    def map_count(self) -> int:
        return len(self.ratios)


def preset(name: str) -> IfsSpec:
    """Named examples: the plane carpet and the 3-D sponge, both ratio 1/3."""
    if name == "sierpinski_carpet":
        cells = [(i, j) for i in range(3) for j in range(3) if (i, j) != (1, 1)]
        trans = np.array(cells, dtype=float) / 3.0
        return IfsSpec(2, np.full(8, 1.0 / 3.0), trans,
                       np.zeros(2), np.ones(2))
    if name == "menger_sponge":
        cells = [(i, j, k) for i in range(3) for j in range(3) for k in range(3)
                 if (i == 1) + (j == 1) + (k == 1) <= 1]
        trans = np.array(cells, dtype=float) / 3.0
        return IfsSpec(3, np.full(20, 1.0 / 3.0), trans,
                       np.zeros(3), np.ones(3))
    raise ValueError(f"unknown preset {name!r}")


def moran_dimension(ifs: IfsSpec, tol: float = 1e-12) -> float:
    """Root of sum r_i^s = 1 by bisection (strictly decreasing in s)."""
    f = lambda s: float(np.sum(ifs.ratios ** s)) - 1.0
    lo, hi = 0.0, 8.0
    while f(hi) > 0.0:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def unit_vector(theta, dimension: int) -> np.ndarray:
    if dimension == 2:
        t = float(np.atleast_1d(theta)[0])
        return np.array([math.cos(t), math.sin(t)])
    t1, t2 = np.atleast_1d(theta)
    return np.array([math.cos(t1) * math.cos(t2),
                     math.sin(t1) * math.cos(t2),
                     math.sin(t2)])


def _hull_1d(ratios: np.ndarray, offsets: np.ndarray) -> tuple[float, float]:
    """Fixed interval of the 1-D system by iterating the hull map."""
    lo = float(np.min(offsets / (1.0 - ratios)))
    hi = float(np.max(offsets / (1.0 - ratios)))
    for _ in range(200):
        nlo = float(np.min(ratios * lo + offsets))
        nhi = float(np.max(ratios * hi + offsets))
        if nlo == lo and nhi == hi:
            break
        lo, hi = nlo, nhi
    return lo, hi


@dataclass
class ProjectionSpec:
    """1-D shadow of the system along u, with natural weights r_i^s."""

    u: np.ndarray
    ratios: np.ndarray
    offsets: np.ndarray
    weights: np.ndarray
    s: float
    hull: tuple[float, float]


def project_ifs(ifs: IfsSpec, theta) -> ProjectionSpec:
    u = unit_vector(theta, ifs.dimension)
    offsets = ifs.translations @ u
    s = moran_dimension(ifs)
    weights = ifs.ratios ** s
    hull = _hull_1d(ifs.ratios, offsets)
    return ProjectionSpec(u=u, ratios=ifs.ratios, offsets=offsets,
                          weights=weights, s=s, hull=hull)


def attractor_bbox(ifs: IfsSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis fixed hull of the coordinate systems."""
    lo = np.empty(ifs.dimension)
    hi = np.empty(ifs.dimension)
    for axis in range(ifs.dimension):
        lo[axis], hi[axis] = _hull_1d(ifs.ratios, ifs.translations[:, axis])
    return lo, hi


def attractor_diameter(ifs: IfsSpec) -> float:
    lo, hi = attractor_bbox(ifs)
    return float(np.linalg.norm(hi - lo))


def solve_projected_density(proj: ProjectionSpec, cells: int = 2 ** 14,
                            tol: float = 1e-10, max_iter: int = 5000,
                            support: tuple[float, float] | None = None,
                            ) -> tuple[DensityGrid, DensityDiagnostics]:
    """Fixed point of pushing cell mass through the projected branches.

    The residual diagnostic uses the differentiated self-similarity form
    with weights r_i^(s-1) and the inverse maps (x - t_i)/r_i.
    """
    lo, hi = proj.hull if support is None else support
    branches = [(float(r), float(t), float(wt))
                for r, t, wt in zip(proj.ratios, proj.offsets, proj.weights)]
    g, its, conv = _iterate_to_fixed_point(lo, hi, cells, branches, tol, max_iter)
    inv = [(float(r ** (proj.s - 1.0)),
            (lambda x, r=r, t=t: (x - t) / r))
           for r, t in zip(proj.ratios, proj.offsets)]
    diag = DensityDiagnostics(
        l1_residual=self_similarity_residual(g, inv),
        sup_estimate=g.sup_estimate,
        iterations=its,
        refinement_stability=float("nan"),
        converged=conv,
    )
    return g, diag


def chaos_game(ifs: IfsSpec, sample_count: int, seed: int = 0,
               burn: int = 32) -> np.ndarray:
    """Attractor samples driven by the natural weights r_i^s."""
    rng = np.random.default_rng(seed)
    s = moran_dimension(ifs)
    probs = ifs.ratios ** s
    probs = probs / probs.sum()
    picks = rng.choice(ifs.map_count, size=sample_count + burn, p=probs)
    lo, hi = attractor_bbox(ifs)
    pts = np.empty((sample_count + burn, ifs.dimension))
    v = 0.5 * (lo + hi)
    for k, i in enumerate(picks):
        v = ifs.ratios[i] * v + ifs.translations[i]
        pts[k] = v
    return pts[burn:]


def sample_projected_density(ifs: IfsSpec, theta, sample_count: int,
                             cells: int = 2 ** 10, seed: int = 0) -> DensityGrid:
    """Histogram of projected chaos-game output; the Monte Carlo cross-check
    for solve_projected_density."""
    proj = project_ifs(ifs, theta)
    pts = chaos_game(ifs, sample_count, seed=seed)
    vals = pts @ proj.u
    lo, hi = proj.hull
    counts, _ = np.histogram(vals, bins=np.linspace(lo, hi, cells + 1))
    w = (hi - lo) / cells
    return DensityGrid(lo, hi, counts / (sample_count * w))


@dataclass
class SliceCylinder:
    word: tuple[int, ...]
    scale: float
    offset: float
    hull: tuple[float, float]
    diameter_bound: float
    mass: float = float("nan")


@dataclass
class SliceReport:
    """Admissible cylinders of one slice with masses and diameter data."""

    theta: tuple[float, ...]
    x: float
    depth: int
    cylinders: list[SliceCylinder]
    mass_sum: float
    diameter_estimate: float
    contained_in_first_level: bool
    lower_bound: float = float("nan")

    @property
    def empty(self) -> bool:
        return len(self.cylinders) == 0


def enumerate_slice_cylinders(ifs: IfsSpec, theta, x: float, depth: int,
                              proj: ProjectionSpec | None = None) -> list[SliceCylinder]:
    """Prefix-pruned tree of cylinder words whose projected hull contains x.

    Hull containment over-approximates true slice intersection; spurious
    words shrink away with depth and only fatten covers.
    """
    if proj is None:
        proj = project_ifs(ifs, theta)
    pmin, pmax = proj.hull
    diam = attractor_diameter(ifs)
    out: list[SliceCylinder] = []
    stack = [((), 1.0, 0.0)]
    while stack:
        word, scale, offset = stack.pop()
        if not (scale * pmin + offset <= x <= scale * pmax + offset):
            continue
        if len(word) == depth:
            out.append(SliceCylinder(
                word=word, scale=scale, offset=offset,
                hull=(scale * pmin + offset, scale * pmax + offset),
                diameter_bound=scale * diam))
            continue
        for i in range(ifs.map_count):
            # compose inside: M_{w i} = M_w o S_i
            stack.append((word + (i,), scale * proj.ratios[i],
                          scale * proj.offsets[i] + offset))
    out.sort(key=lambda c: c.word)
    return out


def slice_cylinder_mass(word, x: float, theta, h: DensityGrid, s: float,
                        ifs: IfsSpec, proj: ProjectionSpec | None = None) -> float:
    """(r_{a_1}...r_{a_n})^(s-1) * h(T_w x) / h(x) for one admissible word."""
    if proj is None:
        proj = project_ifs(ifs, theta)
    hx = evaluate_density(h, x)
    if hx <= 0.0:
        from .fibers import UndefinedFiberError
        raise UndefinedFiberError(f"projected density vanishes at x={x}")
    v = x
    scale = 1.0
    for a in word:
        v = (v - proj.offsets[a]) / proj.ratios[a]
        scale *= proj.ratios[a]
    return scale ** (s - 1.0) * evaluate_density(h, v) / hx


def _cylinder_bbox_projected(ifs: IfsSpec, word, u: np.ndarray
                             ) -> tuple[np.ndarray, np.ndarray]:
    """Bounding box of the cylinder copy, as (corner-lo, corner-hi)."""
    lo, hi = attractor_bbox(ifs)
    for a in reversed(word):
        # applying the outermost map last
        lo = ifs.ratios[a] * lo + ifs.translations[a]
        hi = ifs.ratios[a] * hi + ifs.translations[a]
    return lo, hi


def _perp_basis(u: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the hyperplane perpendicular to u (rows)."""
    d = len(u)
    basis = []
    for e in np.eye(d):
        v = e - np.dot(e, u) * u
        for b in basis:
            v = v - np.dot(v, b) * b
        norm = np.linalg.norm(v)
        if norm > 1e-9:
            basis.append(v / norm)
        if len(basis) == d - 1:
            break
    return np.array(basis)


def _slice_diameter_estimate(ifs: IfsSpec, cylinders: list[SliceCylinder],
                             u: np.ndarray) -> float:
    """Hull diameter of the admissible cylinder union, seen inside the slice
    plane (boxes projected perpendicular to u)."""
    if not cylinders:
        return 0.0
    basis = _perp_basis(u)
    mins = np.full(len(basis), np.inf)
    maxs = np.full(len(basis), -np.inf)
    for c in cylinders:
        lo, hi = _cylinder_bbox_projected(ifs, c.word, u)
        corners = np.array(np.meshgrid(*zip(lo, hi))).T.reshape(-1, len(lo))
        pp = corners @ basis.T
        mins = np.minimum(mins, pp.min(axis=0))
        maxs = np.maximum(maxs, pp.max(axis=0))
    return float(np.linalg.norm(maxs - mins))


def build_slice_report(ifs: IfsSpec, theta, x: float, depth: int,
                       h: DensityGrid | None = None,
                       C: float | None = None,
                       proj: ProjectionSpec | None = None) -> SliceReport:
    if proj is None:
        proj = project_ifs(ifs, theta)
    cyls = enumerate_slice_cylinders(ifs, theta, x, depth, proj=proj)
    mass_sum = float("nan")
    if h is not None and cyls:
        for c in cyls:
            c.mass = slice_cylinder_mass(c.word, x, theta, h, proj.s, ifs, proj=proj)
        mass_sum = float(sum(c.mass for c in cyls))
    contained = bool(cyls) and len({c.word[0] for c in cyls}) == 1
    diam = _slice_diameter_estimate(ifs, cyls, proj.u)
    lower = float("nan")
    if h is not None and C is not None:
        lower = evaluate_density(h, x) / C
    theta_t = tuple(np.atleast_1d(theta).astype(float))
    return SliceReport(theta=theta_t, x=x, depth=depth, cylinders=cyls,
                       mass_sum=mass_sum, diameter_estimate=diam,
                       contained_in_first_level=contained, lower_bound=lower)


@dataclass
class SliceCodingCheck:
    delta: float
    violations: list[float]
    records: list[tuple[float, float, bool]]  # (x, diameter, contained)


def check_slice_coding(ifs: IfsSpec, theta, x_samples, depth: int
                       ) -> SliceCodingCheck:
    """Empirical pass over the slice coding condition.

    Every sampled slice must either be thick (diameter above the reported
    delta) or sit inside a single first-level cylinder; slices thinner than
    the depth resolution that are not contained are flagged.
    """
    proj = project_ifs(ifs, theta)
    resolution = float(np.max(proj.ratios) ** depth) * attractor_diameter(ifs)
    records = []
    violations = []
    thin = []
    for x in np.atleast_1d(x_samples):
        rep = build_slice_report(ifs, theta, float(x), depth, proj=proj)
        if rep.empty:
            continue
        records.append((float(x), rep.diameter_estimate,
                        rep.contained_in_first_level))
        if not rep.contained_in_first_level:
            thin.append(rep.diameter_estimate)
            if rep.diameter_estimate <= resolution:
                violations.append(float(x))
    delta = float(min(thin)) if thin else float("inf")
    return SliceCodingCheck(delta=delta, violations=violations, records=records)


def estimate_ratio_constant(ifs: IfsSpec, theta, h: DensityGrid, delta: float,
                            x_samples, depth: int = 10,
                            safety: float = 1.1) -> float:
    """Max of h(x)/diam^(s-1) over thick sampled slices, times a safety factor."""
    proj = project_ifs(ifs, theta)
    s = proj.s
    best = 0.0
    qualified = 0
    for x in np.atleast_1d(x_samples):
        rep = build_slice_report(ifs, theta, float(x), depth, proj=proj)
        if rep.empty or rep.diameter_estimate < delta:
            continue
        hx = evaluate_density(h, float(x))
        if hx <= 0.0:
            continue
        qualified += 1
        best = max(best, hx / rep.diameter_estimate ** (s - 1.0))
    if qualified == 0:
        raise ValueError("no thick slices found")
    return safety * best


def slice_lower_bound(x, h: DensityGrid, C: float):
    """h(x)/C, the computable slice Hausdorff-measure floor; 0 where h is 0."""
    return evaluate_density(h, x) / C


def marstrand_report(ifs: IfsSpec, theta, h: DensityGrid, C: float,
                     x_grid: int = 256, depth: int = 8) -> dict:
    """Integrated slice floor vs a depth-n cover estimate of the bulk measure.

    The slice floors integrate to 1/C since h has unit mass; the cover side
    is sum over all depth-n words of (r_w |E|)^s, which factorises through
    the Moran equation.
    """
    proj = project_ifs(ifs, theta)
    lo, hi = proj.hull
    xs = np.linspace(lo, hi, x_grid, endpoint=False) + (hi - lo) / (2 * x_grid)
    lower_vals = slice_lower_bound(xs, h, C)
    riemann = float(np.sum(lower_vals) * (hi - lo) / x_grid)
    diam = attractor_diameter(ifs)
    s = proj.s
    cover = float(diam ** s * np.sum(ifs.ratios ** s) ** depth)
    return {
        "schema_version": 1,
        "theta": [float(t) for t in np.atleast_1d(theta)],
        "s": s,
        "lower_integral_riemann": riemann,
        "lower_integral_exact": 1.0 / C,
        "upper_cover_estimate": cover,
        "cover_depth": depth,
        "lower_le_upper": bool(riemann <= cover),
    }


def odd_even_convolution(ifs: IfsSpec, theta, cells: int = 2 ** 12,
                         tol: float = 1e-10) -> DensityGrid:
    """Projected density rebuilt as a convolution of its odd and even parts.

    Needs a uniform contraction ratio: the odd-position sum is the ratio^2
    system, the even-position sum the same scaled by ratio.  Both factor
    densities are solved on width-matched grids and convolved discretely;
    agreement with the directly solved density is the cross-check.
    """
    r0 = float(ifs.ratios[0])
    if not np.allclose(ifs.ratios, r0, rtol=0, atol=1e-12):
        raise ValueError("odd/even split needs a uniform contraction ratio")
    proj = project_ifs(ifs, theta)
    sq_ratios = np.full(ifs.map_count, r0 * r0)
    odd = ProjectionSpec(u=proj.u, ratios=sq_ratios, offsets=proj.offsets,
                         weights=np.full(ifs.map_count, 1.0 / ifs.map_count),
                         s=proj.s, hull=_hull_1d(sq_ratios, proj.offsets))
    even_offsets = r0 * proj.offsets
    even = ProjectionSpec(u=proj.u, ratios=sq_ratios, offsets=even_offsets,
                          weights=odd.weights, s=proj.s,
                          hull=_hull_1d(sq_ratios, even_offsets))
    g_odd, _ = solve_projected_density(odd, cells=cells, tol=tol)
    w = g_odd.cell_width
    cells_even = max(1, int(math.ceil((even.hull[1] - even.hull[0]) / w)))
    g_even, _ = solve_projected_density(
        even, cells=cells_even, tol=tol,
        support=(even.hull[0], even.hull[0] + cells_even * w))
    mass = np.convolve(g_odd.masses(), g_even.masses())
    lo = g_odd.lo + g_even.lo
    conv = DensityGrid(lo, lo + len(mass) * w, mass / w)
    # resample onto the requested resolution over the full hull
    return _resample(conv, proj.hull[0], proj.hull[1], cells)


def _resample(g: DensityGrid, lo: float, hi: float, cells: int) -> DensityGrid:
    """Mass-preserving resample onto a fresh uniform grid, then renormalise."""
    edges = np.linspace(lo, hi, cells + 1)
    src = g.edges()
    cum = np.concatenate([[0.0], np.cumsum(g.masses())])
    cum_at = np.interp(edges, src, cum, left=0.0, right=cum[-1])
    mass = np.diff(cum_at)
    total = mass.sum()
    if total > 0:
        mass = mass / total
    w = (hi - lo) / cells
    return DensityGrid(lo, hi, mass / w)


def parse_ifs_file(path) -> IfsSpec:
    """Text format: 'dimension d', per-map 'map ratio t1..td',
    'open lo1..lod hi1..hid'; blank lines and #-comments ignored."""
    dimension = None
    ratios, trans = [], []
    open_lo = open_hi = None
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "dimension":
                dimension = int(parts[1])
            elif parts[0] == "map":
                vals = [float(v) for v in parts[1:]]
                ratios.append(vals[0])
                trans.append(vals[1:])
            elif parts[0] == "open":
                vals = [float(v) for v in parts[1:]]
                half = len(vals) // 2
                open_lo, open_hi = np.array(vals[:half]), np.array(vals[half:])
            else:
                raise ValueError(f"unknown directive {parts[0]!r}")
    if dimension is None or not ratios or open_lo is None:
        raise ValueError("ifs file needs dimension, maps, and an open box")
    return IfsSpec(dimension, np.array(ratios), np.array(trans), open_lo, open_hi)


def write_ifs_file(ifs: IfsSpec, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"dimension {ifs.dimension}\n")
        for r, t in zip(ifs.ratios, ifs.translations):
            comps = " ".join(f"{v:.12g}" for v in t)
            fh.write(f"map {r:.12g} {comps}\n")
        lob = " ".join(f"{v:.12g}" for v in ifs.open_lo)
        hib = " ".join(f"{v:.12g}" for v in ifs.open_hi)
        fh.write(f"open {lob} {hib}\n")
