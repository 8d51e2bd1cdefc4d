"""Cylinder cascade measures, atom-cloud discretization, and ball-mass scans.

Conditional child masses are word-independent within a level and repeat
with the system period, which makes the two-sided parent/child mass
bounds hold structurally with p equal to the smallest conditional mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coding import Word, validate_word
from .errors import BudgetError, ConfigError, PreconditionError
from .geometry import MoranSystem

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class CylinderMeasure:
    """Per-level conditional mass vectors, one per level of the system period."""

    mass_vectors: tuple[tuple[float, ...], ...]
    name: str = "custom"

    def __post_init__(self):
        if not self.mass_vectors:
            raise ConfigError("at least one mass vector required")
        for li, vec in enumerate(self.mass_vectors, start=1):
            if len(vec) < 2:
                raise ConfigError(f"level {li}: needs at least two masses")
            for j, m in enumerate(vec, start=1):
                if not 0.0 < m < 1.0:
                    raise ConfigError(
                        f"level {li} child {j}: mass {m} outside (0,1)"
                    )
            if abs(sum(vec) - 1.0) > _SUM_TOL:
                raise ConfigError(
                    f"level {li}: masses sum to {sum(vec)}, expected 1"
                )

    @classmethod
    def uniform(cls, system: MoranSystem) -> "CylinderMeasure":
        return cls(
            tuple(tuple(1.0 / spec.n for _ in range(spec.n)) for spec in system.levels),
            name="uniform",
        )

    @classmethod
    def for_system(cls, system: MoranSystem, vectors, name="custom") -> "CylinderMeasure":
        vecs = tuple(tuple(float(m) for m in v) for v in vectors)
        if len(vecs) != system.period:
            raise ConfigError(
                f"measure has {len(vecs)} levels but system period is {system.period}"
            )
        for li, (vec, spec) in enumerate(zip(vecs, system.levels), start=1):
            if len(vec) != spec.n:
                raise ConfigError(
                    f"level {li}: {len(vec)} masses for {spec.n} children"
                )
        return cls(vecs, name=name)

    @property
    def period(self) -> int:
        return len(self.mass_vectors)

    @property
    def p(self) -> float:
        """Smallest conditional mass: the two-sided bound constant."""
        return min(min(vec) for vec in self.mass_vectors)

    def level_masses(self, level: int) -> tuple[float, ...]:
        if level < 1:
            raise PreconditionError(f"level must be >= 1, got {level}")
        return self.mass_vectors[(level - 1) % len(self.mass_vectors)]

    def describe(self) -> str:
        return f"{self.name}(P={self.period})"


def mass(measure: CylinderMeasure, word: Word) -> float:
    """Product of conditional masses along `word`; 1 for the empty word."""
    out = 1.0
    for level, sym in enumerate(word, start=1):
        vec = measure.level_masses(level)
        if not 1 <= sym <= len(vec):
            raise PreconditionError(f"symbol {sym} at level {level} outside 1..{len(vec)}")
        out *= vec[sym - 1]
    return out


def energy(measure: CylinderMeasure, system: MoranSystem, word: Word, r: float) -> float:
    """Cell mass times the r-th power of its normalized diameter."""
    if r <= 0:
        raise PreconditionError(f"order r must be positive, got {r}")
    from .geometry import contraction_ratio

    return mass(measure, word) * contraction_ratio(system, word) ** r


@dataclass
class DiscretizedMeasure:
    """Finite weighted atom cloud standing in for the cylinder measure.

    One atom per word of the generating depth, placed at its cell center;
    `resolution` is the largest cell side represented by a single atom.
    """

    points: np.ndarray
    weights: np.ndarray
    words: np.ndarray
    resolution: float
    depth: int
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def support_diameter(self) -> float:
        spread = self.points.max(axis=0) - self.points.min(axis=0)
        return float(np.sqrt((spread ** 2).sum()))

    def to_csv_rows(self):
        """Rows `x1[,x2],weight,word` with dot-serialized words."""
        for i in range(len(self)):
            coords = [repr(float(c)) for c in self.points[i]]
            word = ".".join(str(int(s)) for s in self.words[i])
            yield coords + [repr(float(self.weights[i])), word]


def _expand_levels(system: MoranSystem, measure: CylinderMeasure, levels, budget: int):
    """Vectorized level-by-level expansion of cells and masses."""
    q = system.dimension
    lows = np.zeros((1, q))
    sides = np.ones(1)
    weights = np.ones(1)
    words = np.zeros((1, 0), dtype=np.int32)
    count = 1
    for level in levels:
        spec = system.level_spec(level)
        ms = np.asarray(measure.level_masses(level))
        count *= spec.n
        if count > budget:
            raise BudgetError(
                f"atom budget exceeded: {count} atoms > budget={budget}"
            )
        offs = np.asarray(spec.offsets)
        rats = np.asarray(spec.ratios)
        lows = (lows[:, None, :] + sides[:, None, None] * offs[None, :, :]).reshape(-1, q)
        new_words = np.concatenate(
            [
                np.repeat(words, spec.n, axis=0),
                np.tile(np.arange(1, spec.n + 1, dtype=np.int32), len(sides))[:, None],
            ],
            axis=1,
        )
        sides = (sides[:, None] * rats[None, :]).reshape(-1)
        weights = (weights[:, None] * ms[None, :]).reshape(-1)
        words = new_words
    return lows, sides, weights, words


def discretize(
    measure: CylinderMeasure,
    system: MoranSystem,
    depth: int,
    budget: int = 1_000_000,
) -> DiscretizedMeasure:
    """One atom per depth-`depth` word at its cell center, weighted by mass."""
    if depth < 1:
        raise PreconditionError(f"depth must be >= 1, got {depth}")
    lows, sides, weights, words = _expand_levels(
        system, measure, range(1, depth + 1), budget
    )
    points = lows + 0.5 * sides[:, None]
    return DiscretizedMeasure(
        points=points,
        weights=weights,
        words=words,
        resolution=float(sides.max()),
        depth=depth,
        provenance={
            "system": system.describe(),
            "measure": measure.describe(),
            "depth": depth,
        },
    )


def rescale_conditional(
    measure: CylinderMeasure,
    system: MoranSystem,
    word: Word,
    depth: int,
    budget: int = 1_000_000,
) -> DiscretizedMeasure:
    """Conditional cloud on the cylinder of `word`, pulled back to the unit cell.

    Equals the atoms of a depth-`depth` discretization restricted to the
    cylinder, mapped by the inverse cell similitude and renormalized;
    built directly from levels len(word)+1..depth, which is the same
    object because masses are word-independent per level.
    """
    validate_word(word, system.alphabet)
    base = len(word)
    if depth <= base:
        raise PreconditionError(
            f"depth {depth} must exceed the conditioning word length {base}"
        )
    lows, sides, weights, words = _expand_levels(
        system, measure, range(base + 1, depth + 1), budget
    )
    points = lows + 0.5 * sides[:, None]
    return DiscretizedMeasure(
        points=points,
        weights=weights,
        words=words,
        resolution=float(sides.max()),
        depth=depth - base,
        provenance={
            "system": system.describe(),
            "measure": measure.describe(),
            "depth": depth,
            "conditioned_on": ".".join(str(s) for s in word),
        },
    )


def ball_mass(atoms: DiscretizedMeasure, x, eps: float) -> float:
    """Total weight of atoms within closed Euclidean distance `eps` of `x`."""
    if eps <= 0:
        raise PreconditionError(f"radius must be positive, got {eps}")
    d2 = ((atoms.points - np.asarray(x, dtype=float)) ** 2).sum(axis=1)
    return float(atoms.weights[d2 <= eps * eps].sum())


def geometric_radii(lo: float, hi: float, factor: float = 2.0) -> np.ndarray:
    """Geometric grid lo, lo*factor, ... capped at hi (always non-empty)."""
    if lo <= 0 or hi < lo or factor <= 1:
        raise PreconditionError("need 0 < lo <= hi and factor > 1")
    vals = [lo]
    while vals[-1] * factor <= hi * (1 + 1e-12):
        vals.append(vals[-1] * factor)
    return np.asarray(vals)


def default_radii(atoms: DiscretizedMeasure, factor: float = 2.0, floor_mult: float = 4.0) -> np.ndarray:
    lo = floor_mult * atoms.resolution
    hi = max(atoms.support_diameter() / 2.0, lo)
    return geometric_radii(lo, hi, factor)


def _sample_indices(n: int, sample_points: int | None) -> np.ndarray:
    if sample_points is None or sample_points >= n:
        return np.arange(n)
    idx = np.unique(np.round(np.linspace(0, n - 1, sample_points)).astype(int))
    return idx


def _center_masses(atoms: DiscretizedMeasure, centers: np.ndarray, radii: np.ndarray):
    """Ball masses for every (center, radius) pair via sorted-distance cumsums."""
    out = np.empty((centers.shape[0], radii.size))
    pts = atoms.points
    w = atoms.weights
    for i, c in enumerate(centers):
        d = np.sqrt(((pts - c) ** 2).sum(axis=1))
        order = np.argsort(d, kind="stable")
        ds = d[order]
        cw = np.cumsum(w[order])
        pos = np.searchsorted(ds, radii, side="right")
        out[i] = np.where(pos > 0, cw[np.minimum(pos, len(cw)) - 1], 0.0)
    return out


@dataclass
class DoublingProfile:
    d_est: float
    worst_center: tuple[float, ...]
    worst_radius: float
    radii: np.ndarray


def doubling_profile(
    atoms: DiscretizedMeasure,
    sample_points: int | None,
    radii: np.ndarray,
) -> DoublingProfile:
    """Max of ball-mass(x,2e)/ball-mass(x,e) over sampled atom centers.

    Radii must stay at or above 4x the atom resolution; below that the
    cloud no longer resolves the balls.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise PreconditionError("empty radii grid")
    if radii.min() < 4.0 * atoms.resolution * (1 - 1e-12):
        raise PreconditionError(
            f"smallest radius {radii.min()} below 4x resolution "
            f"{4 * atoms.resolution}"
        )
    idx = _sample_indices(len(atoms), sample_points)
    centers = atoms.points[idx]
    m1 = _center_masses(atoms, centers, radii)
    m2 = _center_masses(atoms, centers, 2.0 * radii)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(m1 > 0, m2 / np.where(m1 > 0, m1, 1.0), 0.0)
    flat = int(np.argmax(ratios))
    ci, ri = divmod(flat, radii.size)
    return DoublingProfile(
        d_est=float(ratios[ci, ri]),
        worst_center=tuple(float(v) for v in centers[ci]),
        worst_radius=float(radii[ri]),
        radii=radii,
    )


@dataclass
class DoublingStability:
    """Doubling estimates across increasing depths with a divergence flag."""

    depths: tuple[int, ...]
    d_ests: tuple[float, ...]
    steps: tuple[float, ...]
    warned: bool
    strictly_increasing: bool


def doubling_stability(
    system,
    measure,
    depths=(8, 10, 12),
    sample_points: int | None = None,
    floor_mult: float = 4.0,
    factor: float = 2.0,
    budget: int = 1_000_000,
) -> DoublingStability:
    """Profile the doubling estimate at several depths and warn when it
    diverges; stability means consecutive estimates agree within 2x."""
    depths = tuple(sorted(int(d) for d in depths))
    ests = []
    for depth in depths:
        atoms = discretize(measure, system, depth, budget=budget)
        radii = geometric_radii(
            floor_mult * atoms.resolution,
            max(atoms.support_diameter() / 2.0, floor_mult * atoms.resolution),
            factor,
        )
        ests.append(doubling_profile(atoms, sample_points, radii).d_est)
    steps = tuple(ests[i + 1] / ests[i] for i in range(len(ests) - 1))
    return DoublingStability(
        depths=depths,
        d_ests=tuple(ests),
        steps=steps,
        warned=any(s > 2.0 for s in steps),
        strictly_increasing=all(s > 1.0 for s in steps),
    )


@dataclass
class FrostmanReport:
    t: float
    c_est: float
    c_est_deeper: float | None
    passed: bool | None


def frostman_exponent(p: float, s_lo: float) -> float:
    """Uniform ball-mass exponent log(1-p)/log(s_lo)."""
    if not 0.0 < p < 1.0 or not 0.0 < s_lo < 1.0:
        raise PreconditionError("need p and s_lo in (0,1)")
    return math.log(1.0 - p) / math.log(s_lo)


def frostman_check(
    atoms: DiscretizedMeasure,
    p: float,
    s_lo: float,
    radii: np.ndarray | None = None,
    sample_points: int | None = None,
    deeper: DiscretizedMeasure | None = None,
) -> FrostmanReport:
    """Estimate C in ball-mass <= C * eps^t and test stability across depths.

    `passed` is set only when a deeper cloud is supplied: the estimate must
    agree within a factor of 2.
    """
    t = frostman_exponent(p, s_lo)
    if radii is None:
        radii = default_radii(atoms)
    radii = np.asarray(radii, dtype=float)

    def scan(cloud: DiscretizedMeasure) -> float:
        idx = _sample_indices(len(cloud), sample_points)
        masses = _center_masses(cloud, cloud.points[idx], radii)
        return float((masses / radii[None, :] ** t).max())

    c_est = scan(atoms)
    c_deep = scan(deeper) if deeper is not None else None
    passed = None
    if c_deep is not None:
        hi, lo = max(c_est, c_deep), min(c_est, c_deep)
        passed = bool(hi <= 2.0 * lo)
    return FrostmanReport(t=t, c_est=c_est, c_est_deeper=c_deep, passed=passed)
