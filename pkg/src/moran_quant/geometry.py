"""Axis-aligned realization of Moran constructions in dimension 1 or 2.

Every cylinder is a box (interval or square) obtained by composing the
per-level placements, so containment, interior disjointness and
boundary distances are exact box arithmetic.  The normalized diameter
of a cylinder equals the product of its level ratios because the base
cell is the unit box.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .coding import Alphabet, Word, validate_word
from .errors import ConfigError, InvalidWordError, NoWitnessError, PreconditionError

_TOL = 1e-12


@dataclass(frozen=True)
class LevelSpec:
    """One level of the construction: child ratios and lower-corner offsets
    inside the unit parent cell."""

    ratios: tuple[float, ...]
    offsets: tuple[tuple[float, ...], ...]

    @property
    def n(self) -> int:
        return len(self.ratios)


@dataclass(frozen=True)
class MoranSystem:
    """Periodic level specs realizing cylinders inside the unit box."""

    dimension: int
    levels: tuple[LevelSpec, ...]
    name: str = "custom"
    validate: bool = True

    def __post_init__(self):
        if self.validate:
            _validate_system(self)

    @property
    def period(self) -> int:
        return len(self.levels)

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(tuple(spec.n for spec in self.levels))

    def level_spec(self, level: int) -> LevelSpec:
        """Spec governing 1-based `level` (periodic extension)."""
        if level < 1:
            raise PreconditionError(f"level must be >= 1, got {level}")
        return self.levels[(level - 1) % len(self.levels)]

    def branch_count(self, level: int) -> int:
        return self.level_spec(level).n

    def describe(self) -> str:
        return f"{self.name}(q={self.dimension},P={self.period})"


def _validate_system(system: MoranSystem) -> None:
    q = system.dimension
    if q not in (1, 2):
        raise ConfigError(f"dimension must be 1 or 2, got {q}")
    if not system.levels:
        raise ConfigError("at least one level spec required")
    for li, spec in enumerate(system.levels, start=1):
        if spec.n < 2:
            raise ConfigError(f"level {li}: branch count must be >= 2, got {spec.n}")
        if len(spec.offsets) != spec.n:
            raise ConfigError(
                f"level {li}: {spec.n} ratios but {len(spec.offsets)} offsets"
            )
        for j, s in enumerate(spec.ratios, start=1):
            if not 0.0 < s < 1.0:
                raise ConfigError(f"level {li} child {j}: ratio {s} outside (0,1)")
        if q == 1 and sum(spec.ratios) > 1.0 + _TOL:
            raise ConfigError(
                f"level {li}: ratios sum to {sum(spec.ratios)} > 1 in dimension 1"
            )
        for j, off in enumerate(spec.offsets, start=1):
            if len(off) != q:
                raise ConfigError(f"level {li} child {j}: offset is not a {q}-vector")
            for axis, o in enumerate(off):
                if o < -_TOL or o + spec.ratios[j - 1] > 1.0 + _TOL:
                    raise ConfigError(
                        f"level {li} child {j}: cell leaves the parent on axis {axis}"
                    )
        # Pairwise interior disjointness of the placed child boxes; this
        # propagates to all depths because placements are per-level.
        for a in range(spec.n):
            for b in range(a + 1, spec.n):
                if _template_overlap(spec, a, b, q):
                    raise ConfigError(
                        f"level {li}: children {a + 1} and {b + 1} have "
                        "overlapping interiors"
                    )


def _template_overlap(spec: LevelSpec, a: int, b: int, q: int) -> bool:
    for axis in range(q):
        lo_a, hi_a = spec.offsets[a][axis], spec.offsets[a][axis] + spec.ratios[a]
        lo_b, hi_b = spec.offsets[b][axis], spec.offsets[b][axis] + spec.ratios[b]
        if min(hi_a, hi_b) - max(lo_a, lo_b) <= _TOL:
            return False
    return True


@dataclass(frozen=True)
class Cell:
    """Axis-aligned box: lower corner plus side length.

    `side` equals the product of the level ratios and plays the role of
    the normalized cylinder diameter (the base cell has side 1).
    """

    lower: tuple[float, ...]
    side: float

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(lo + self.side for lo in self.lower)

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def contains_point(self, x, tol: float = 0.0) -> bool:
        return all(
            lo - tol <= xi <= lo + self.side + tol for lo, xi in zip(self.lower, x)
        )


@dataclass(frozen=True)
class SeparationWitness:
    """Suffix whose cell sits strictly inside the parent cell at relative
    boundary clearance `delta`."""

    tau: Word
    delta: float


def realize(system: MoranSystem, word: Word) -> Cell:
    """Cell of the cylinder indexed by `word` (empty word gives the unit box)."""
    validate_word(word, system.alphabet)
    q = system.dimension
    lo = [0.0] * q
    side = 1.0
    for level, sym in enumerate(word, start=1):
        spec = system.level_spec(level)
        off = spec.offsets[sym - 1]
        for axis in range(q):
            lo[axis] += side * off[axis]
        side *= spec.ratios[sym - 1]
    return Cell(tuple(lo), side)


def contraction_ratio(system: MoranSystem, word: Word) -> float:
    """Product of the per-level ratios along `word`; 1 for the empty word."""
    validate_word(word, system.alphabet)
    s = 1.0
    for level, sym in enumerate(word, start=1):
        s *= system.level_spec(level).ratios[sym - 1]
    return s


def system_bounds(system: MoranSystem) -> tuple[float, float, int]:
    """(min ratio, max ratio, max branch count) over one period."""
    s_lo = min(min(spec.ratios) for spec in system.levels)
    s_hi = max(max(spec.ratios) for spec in system.levels)
    n0 = max(spec.n for spec in system.levels)
    return s_lo, s_hi, n0


def _boundary_clearance(parent: Cell, child: Cell) -> float:
    """Distance from `child` to the boundary of `parent`, assuming nesting."""
    c = math.inf
    for axis in range(parent.dimension):
        c = min(
            c,
            child.lower[axis] - parent.lower[axis],
            (parent.lower[axis] + parent.side) - (child.lower[axis] + child.side),
        )
    return c


def _suffixes(system: MoranSystem, base_len: int, max_len: int):
    out = []
    for length in range(1, max_len + 1):
        ranges = [
            range(1, system.branch_count(base_len + h) + 1)
            for h in range(1, length + 1)
        ]
        out.extend(itertools.product(*ranges))
    out.sort()
    return out


def interior_witness(system: MoranSystem, word: Word, k0: int) -> SeparationWitness:
    """Best suffix of length <= k0 whose cell avoids the parent boundary.

    Maximizes the relative clearance; ties break to the lexicographically
    smallest suffix.  Raises :class:`NoWitnessError` when every candidate
    touches the boundary.
    """
    if k0 < 1:
        raise PreconditionError(f"k0 must be >= 1, got {k0}")
    cell = realize(system, word)
    best_tau = None
    best_delta = 0.0
    for tau in _suffixes(system, len(word), k0):
        sub = realize(system, tuple(word) + tau)
        clearance = _boundary_clearance(cell, sub)
        if clearance > 0.0 and clearance / cell.side > best_delta:
            best_delta = clearance / cell.side
            best_tau = tau
    if best_tau is None:
        raise NoWitnessError(
            f"no suffix of length <= {k0} below word {word} avoids the cell boundary"
        )
    return SeparationWitness(best_tau, best_delta)


@dataclass
class ConstructionReport:
    """Exhaustive check of the construction up to a finite depth."""

    ok: bool
    depth: int
    k0: int
    words_checked: int
    min_delta: float | None
    violation: str | None = None
    failures: list[str] = field(default_factory=list)


def verify_construction(
    system: MoranSystem, depth: int, k0: int = 2, max_words: int = 200_000
) -> ConstructionReport:
    """Check nesting, ratio law, sibling disjointness and witnesses to `depth`."""
    if depth < 1:
        raise PreconditionError(f"depth must be >= 1, got {depth}")
    q = system.dimension
    failures: list[str] = []
    min_delta = math.inf
    checked = 0
    # Witness geometry only depends on the word length mod period.
    witness_cache: dict[int, float | None] = {}

    frontier: list[tuple[Word, Cell]] = [((), realize(system, ()))]
    for level in range(1, depth + 1):
        spec_children: list[tuple[Word, Cell]] = []
        for word, cell in frontier:
            spec = system.level_spec(level)
            kids = []
            for sym in range(1, spec.n + 1):
                child_word = tuple(word) + (sym,)
                child = realize(system, child_word)
                checked += 1
                if checked > max_words:
                    raise PreconditionError(
                        f"verification exceeds max_words={max_words}"
                    )
                expect = cell.side * spec.ratios[sym - 1]
                if abs(child.side - expect) > _TOL * max(1.0, expect):
                    failures.append(f"{child_word}: side {child.side} != {expect}")
                for axis in range(q):
                    if (
                        child.lower[axis] < cell.lower[axis] - _TOL
                        or child.lower[axis] + child.side
                        > cell.lower[axis] + cell.side + _TOL
                    ):
                        failures.append(f"{child_word}: escapes parent on axis {axis}")
                        break
                kids.append((child_word, child))
            for (wa, ca), (wb, cb) in itertools.combinations(kids, 2):
                if _cells_overlap_interior(ca, cb):
                    failures.append(f"siblings {wa} and {wb} overlap")
            spec_children.extend(kids)

        _check_witnesses(system, frontier, k0, witness_cache, failures)
        for residue, delta in witness_cache.items():
            if delta is not None:
                min_delta = min(min_delta, delta)
        frontier = spec_children
        if failures:
            break
    if not failures:
        _check_witnesses(system, frontier, k0, witness_cache, failures)
        for delta in witness_cache.values():
            if delta is not None:
                min_delta = min(min_delta, delta)

    return ConstructionReport(
        ok=not failures,
        depth=depth,
        k0=k0,
        words_checked=checked,
        min_delta=None if min_delta is math.inf else min_delta,
        violation=failures[0] if failures else None,
        failures=failures,
    )


def _check_witnesses(system, frontier, k0, cache, failures) -> None:
    """Witness check keyed by word length mod period: the relative witness
    geometry is identical for equal residues."""
    for word, _cell in frontier:
        residue = len(word) % system.period
        if residue not in cache:
            try:
                cache[residue] = interior_witness(system, word, k0).delta
            except NoWitnessError:
                cache[residue] = None
        if cache[residue] is None:
            failures.append(f"{word}: no interior witness within {k0} levels")
            return


def _cells_overlap_interior(a: Cell, b: Cell) -> bool:
    for axis in range(a.dimension):
        lo_a, hi_a = a.lower[axis], a.lower[axis] + a.side
        lo_b, hi_b = b.lower[axis], b.lower[axis] + b.side
        if min(hi_a, hi_b) - max(lo_a, lo_b) <= _TOL * max(a.side, b.side):
            return False
    return True


def box_distance(a: Cell, b: Cell) -> float:
    """Euclidean distance between two boxes (0 when they touch or overlap)."""
    acc = 0.0
    for axis in range(a.dimension):
        gap = max(
            0.0,
            b.lower[axis] - (a.lower[axis] + a.side),
            a.lower[axis] - (b.lower[axis] + b.side),
        )
        acc += gap * gap
    return math.sqrt(acc)


def point_box_distance(x, cell: Cell) -> float:
    """Euclidean distance from a point to a box."""
    acc = 0.0
    for axis in range(cell.dimension):
        gap = max(0.0, cell.lower[axis] - x[axis], x[axis] - (cell.lower[axis] + cell.side))
        acc += gap * gap
    return math.sqrt(acc)


# ---------------------------------------------------------------------------
# Built-in templates


def cantor(gap: float = 1 / 3) -> MoranSystem:
    """Two children of ratio (1-gap)/2 separated by a central gap."""
    if not 0.0 < gap < 1.0:
        raise ConfigError(f"cantor gap must be in (0,1), got {gap}")
    ratio = (1.0 - gap) / 2.0
    spec = LevelSpec(ratios=(ratio, ratio), offsets=((0.0,), (1.0 - ratio,)))
    return MoranSystem(dimension=1, levels=(spec,), name=f"cantor({gap:g})")


def binary_full() -> MoranSystem:
    """Two touching halves of the unit interval."""
    spec = LevelSpec(ratios=(0.5, 0.5), offsets=((0.0,), (0.5,)))
    return MoranSystem(dimension=1, levels=(spec,), name="binary-full")


def carpet4(rho: float = 0.25) -> MoranSystem:
    """Four corner squares of side rho inside the unit square."""
    if not 0.0 < rho <= 0.5:
        raise ConfigError(f"carpet4 ratio must be in (0,1/2], got {rho}")
    c = 1.0 - rho
    spec = LevelSpec(
        ratios=(rho, rho, rho, rho),
        offsets=((0.0, 0.0), (c, 0.0), (0.0, c), (c, c)),
    )
    return MoranSystem(dimension=2, levels=(spec,), name=f"carpet4({rho:g})")


def periodic(levels, dimension: int = 1, name: str = "periodic") -> MoranSystem:
    """System from explicit per-level specs, repeating with period len(levels)."""
    specs = tuple(
        spec
        if isinstance(spec, LevelSpec)
        else LevelSpec(
            ratios=tuple(float(r) for r in spec["ratios"]),
            offsets=tuple(tuple(float(v) for v in off) for off in spec["offsets"]),
        )
        for spec in levels
    )
    return MoranSystem(dimension=dimension, levels=specs, name=name)


def demo_periodic() -> MoranSystem:
    """Period-2 demo: a Cantor-style level alternating with three separated
    fifths; every level is strongly separated."""
    lvl_a = LevelSpec(ratios=(1 / 3, 1 / 3), offsets=((0.0,), (2 / 3,)))
    lvl_b = LevelSpec(ratios=(0.2, 0.2, 0.2), offsets=((0.0,), (0.4,), (0.8,)))
    return MoranSystem(dimension=1, levels=(lvl_a, lvl_b), name="periodic-demo")
