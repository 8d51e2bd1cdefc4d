"""Stopping-time antichains, neighbor structure, and the constants ledger.

The antichain at index k collects the first words along each branch whose
mass-diameter energy drops strictly below the k-th power of the stopping
base eta_r = min(p * s_min^r, 8^-r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coding import Word
from .errors import BudgetError, PreconditionError
from .geometry import MoranSystem, interior_witness, system_bounds
from .measure import (
    CylinderMeasure,
    default_radii,
    discretize,
    doubling_profile,
    frostman_check,
    frostman_exponent,
)

GRADE_EXACT = "exact-formula"
GRADE_ESTIMATE = "empirical-estimate"
GRADE_BOUND = "bound-only"


def stopping_base(p: float, s_lo: float, r: float) -> float:
    """eta_r = min(p * s_lo^r, 8^-r)."""
    if r <= 0:
        raise PreconditionError(f"order r must be positive, got {r}")
    return min(p * s_lo ** r, 8.0 ** (-r))


@dataclass
class LambdaAntichain:
    """Maximal antichain of first words with energy below eta_r^k."""

    k: int
    r: float
    eta_r: float
    words: tuple[Word, ...]
    lows: np.ndarray
    sides: np.ndarray
    masses: np.ndarray
    energies: np.ndarray

    @property
    def phi(self) -> int:
        return len(self.words)

    @property
    def max_depth(self) -> int:
        return max(len(w) for w in self.words)


def build_lambda(
    system: MoranSystem,
    measure: CylinderMeasure,
    k: int,
    r: float,
    max_words: int = 500_000,
) -> LambdaAntichain:
    """Depth-first descent emitting each word at the first strict threshold drop.

    Energies decrease strictly along branches, so every branch terminates;
    the result is a maximal finite antichain.
    """
    if k < 0:
        raise PreconditionError(f"k must be >= 0, got {k}")
    s_lo, _s_hi, _n0 = system_bounds(system)
    eta = stopping_base(measure.p, s_lo, r)
    threshold = eta ** k
    q = system.dimension

    words: list[Word] = []
    lows: list[tuple[float, ...]] = []
    sides: list[float] = []
    masses: list[float] = []
    energies: list[float] = []

    # Stack holds nodes with energy >= threshold pending expansion.
    stack: list[tuple[Word, tuple[float, ...], float, float]] = []
    root = ((), (0.0,) * q, 1.0, 1.0)
    if 1.0 < threshold:  # cannot happen for k >= 0 since eta <= 1
        raise PreconditionError("empty-word energy below threshold")
    stack.append(root)
    while stack:
        word, lo, side, m = stack.pop()
        level = len(word) + 1
        spec = system.level_spec(level)
        ms = measure.level_masses(level)
        # Reverse push keeps the emission order lexicographic.
        for sym in range(spec.n, 0, -1):
            c_side = side * spec.ratios[sym - 1]
            c_lo = tuple(
                lo[a] + side * spec.offsets[sym - 1][a] for a in range(q)
            )
            c_m = m * ms[sym - 1]
            c_energy = c_m * c_side ** r
            child = word + (sym,)
            if c_energy < threshold:
                words.append(child)
                lows.append(c_lo)
                sides.append(c_side)
                masses.append(c_m)
                energies.append(c_energy)
                if len(words) > max_words:
                    raise BudgetError(
                        f"antichain size exceeds max_words={max_words}"
                    )
            else:
                stack.append((child, c_lo, c_side, c_m))

    order = sorted(range(len(words)), key=lambda i: words[i])
    return LambdaAntichain(
        k=k,
        r=r,
        eta_r=eta,
        words=tuple(words[i] for i in order),
        lows=np.asarray([lows[i] for i in order]),
        sides=np.asarray([sides[i] for i in order]),
        masses=np.asarray([masses[i] for i in order]),
        energies=np.asarray([energies[i] for i in order]),
    )


@dataclass
class GrowthReport:
    """Sandwich check phi_k <= phi_{k+1} <= N1 * phi_k."""

    h0: int
    n1: int
    phis: list[int]
    factors: list[float]
    ok: bool
    violations: list[str]


def growth_bounds(system: MoranSystem, measure: CylinderMeasure, r: float) -> tuple[int, int]:
    """H0 = floor(log eta / log((1-p) s_max^r)) + 1 and N1 = N0^H0."""
    s_lo, s_hi, n0 = system_bounds(system)
    p = measure.p
    eta = stopping_base(p, s_lo, r)
    h0 = math.floor(math.log(eta) / math.log((1.0 - p) * s_hi ** r)) + 1
    return h0, n0 ** h0


def growth_check(
    system: MoranSystem,
    measure: CylinderMeasure,
    r: float,
    k_max: int,
    max_words: int = 500_000,
) -> GrowthReport:
    if k_max < 1:
        raise PreconditionError(f"k_max must be >= 1, got {k_max}")
    h0, n1 = growth_bounds(system, measure, r)
    phis = [
        build_lambda(system, measure, k, r, max_words=max_words).phi
        for k in range(k_max + 1)
    ]
    violations = []
    factors = []
    for k in range(k_max):
        factors.append(phis[k + 1] / phis[k])
        if not phis[k] <= phis[k + 1] <= n1 * phis[k]:
            violations.append(
                f"k={k}: phi {phis[k]} -> {phis[k + 1]} outside [1,{n1}]x"
            )
    return GrowthReport(
        h0=h0, n1=n1, phis=phis, factors=factors, ok=not violations,
        violations=violations,
    )


@dataclass
class NeighborStructure:
    """Quarter-diameter neighborhood incidences over one antichain."""

    antichain: LambdaAntichain
    neighbors: tuple[np.ndarray, ...]
    m_sigma: np.ndarray
    star_diameter: np.ndarray
    star_mass: np.ndarray
    star_energy: np.ndarray


def _pairwise_box_gaps(lows, sides, q, block=512):
    """Generator of (row slice, distance block) for box-to-box distances."""
    his = lows + sides[:, None]
    n = lows.shape[0]
    for start in range(0, n, block):
        stop = min(start + block, n)
        acc = np.zeros((stop - start, n))
        for axis in range(q):
            gap = np.maximum(
                lows[None, :, axis] - his[start:stop, None, axis],
                lows[start:stop, None, axis] - his[None, :, axis],
            )
            np.maximum(gap, 0.0, out=gap)
            acc += gap * gap
        yield slice(start, stop), np.sqrt(acc)


def _union_diameter(lows, sides, q) -> float:
    """Exact diameter of a union of boxes: max pairwise corner displacement."""
    his = lows + sides[:, None]
    best = 0.0
    n = lows.shape[0]
    for a in range(n):
        for b in range(a, n):
            acc = 0.0
            for axis in range(q):
                span = max(his[b, axis] - lows[a, axis], his[a, axis] - lows[b, axis])
                acc += span * span
            best = max(best, acc)
    return math.sqrt(best)


def neighbor_sets(system: MoranSystem, lam: LambdaAntichain) -> NeighborStructure:
    """Members whose quarter-diameter closed neighborhoods intersect.

    For boxes the exact test is box-distance <= s_sigma/4 + s_omega/4.
    """
    q = system.dimension
    lows, sides = lam.lows, lam.sides
    thresh_half = sides / 4.0
    neighbor_lists: list[np.ndarray] = []
    for rows, dist in _pairwise_box_gaps(lows, sides, q):
        limit = thresh_half[rows.start : rows.stop, None] + thresh_half[None, :]
        for i_local in range(dist.shape[0]):
            neighbor_lists.append(np.nonzero(dist[i_local] <= limit[i_local])[0])

    n = lam.phi
    m_sigma = np.asarray([len(ns) for ns in neighbor_lists], dtype=int)
    star_diam = np.empty(n)
    star_mass = np.empty(n)
    for i, ns in enumerate(neighbor_lists):
        star_diam[i] = _union_diameter(lows[ns], sides[ns], q)
        star_mass[i] = lam.masses[ns].sum()
    star_energy = star_mass * star_diam ** lam.r
    return NeighborStructure(
        antichain=lam,
        neighbors=tuple(neighbor_lists),
        m_sigma=m_sigma,
        star_diameter=star_diam,
        star_mass=star_mass,
        star_energy=star_energy,
    )


@dataclass
class ComparabilityReport:
    """Formula-grade bounds against the empirical extremes over neighbor pairs."""

    ok: bool
    violations: list[str]
    side_ratio_range: tuple[float, float]
    mass_ratio_range: tuple[float, float]
    max_m_sigma: int
    star_energy_ratio_range: tuple[float, float]


def comparability_check(structure: NeighborStructure, ledger) -> ComparabilityReport:
    lam = structure.antichain
    c2 = ledger["C_2"].value
    c3 = ledger["C_3"].value
    m0 = ledger["M_0"].value
    d1 = ledger["D_1"].value
    violations: list[str] = []
    s_lo_ratio, s_hi_ratio = math.inf, 0.0
    m_lo_ratio, m_hi_ratio = math.inf, 0.0
    for i, ns in enumerate(structure.neighbors):
        s_ratio = lam.sides[ns] / lam.sides[i]
        m_ratio = lam.masses[ns] / lam.masses[i]
        s_lo_ratio = min(s_lo_ratio, s_ratio.min())
        s_hi_ratio = max(s_hi_ratio, s_ratio.max())
        m_lo_ratio = min(m_lo_ratio, m_ratio.min())
        m_hi_ratio = max(m_hi_ratio, m_ratio.max())
        if (s_ratio < c2).any() or (s_ratio >= 1.0 / c2).any():
            violations.append(f"word {lam.words[i]}: side comparability out of range")
        if (m_ratio < c3).any() or (m_ratio > 1.0 / c3).any():
            violations.append(f"word {lam.words[i]}: mass comparability out of range")
    if structure.m_sigma.max() > m0:
        violations.append(f"max M_sigma {structure.m_sigma.max()} exceeds M_0 {m0}")
    e_ratio = structure.star_energy / lam.energies
    if (e_ratio < d1).any() or (e_ratio > 1.0 / d1).any():
        violations.append("star energy outside the two-sided D_1 band")
    return ComparabilityReport(
        ok=not violations,
        violations=violations,
        side_ratio_range=(float(s_lo_ratio), float(s_hi_ratio)),
        mass_ratio_range=(float(m_lo_ratio), float(m_hi_ratio)),
        max_m_sigma=int(structure.m_sigma.max()),
        star_energy_ratio_range=(float(e_ratio.min()), float(e_ratio.max())),
    )


def covering_M(eta: float, q: int) -> int:
    """Points needed so any diameter-1 set in R^q has an (eta/2)-net that size.

    A centered grid with ceil(1 + 2/eta) points per axis covers a unit box
    within eta/2 per axis, so codepoints on the net keep the r-th power
    error at or below eta^r for any supported dimension.
    """
    if not 0.0 < eta <= 1.0:
        raise PreconditionError(f"eta must be in (0,1], got {eta}")
    if q < 1:
        raise PreconditionError(f"dimension must be >= 1, got {q}")
    return int(math.ceil(1.0 + 2.0 / eta)) ** q


@dataclass
class LedgerEntry:
    name: str
    value: float | int | None
    grade: str
    formula: str
    inputs: dict = field(default_factory=dict)


class ConstantsLedger:
    """Ordered name -> entry map with provenance-carrying entries."""

    def __init__(self):
        self._entries: dict[str, LedgerEntry] = {}

    def add(self, name, value, grade, formula, **inputs):
        self._entries[name] = LedgerEntry(name, value, grade, formula, inputs)

    def __getitem__(self, name: str) -> LedgerEntry:
        return self._entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def entries(self):
        return list(self._entries.values())

    def value(self, name: str):
        return self._entries[name].value


def _witness_per_residue(system: MoranSystem, k0: int):
    """One witness per word-length residue; relative geometry repeats."""
    reps = {}
    for residue in range(system.period):
        word = tuple(1 for _ in range(residue))
        reps[residue] = interior_witness(system, word, k0)
    return reps


def constants_ledger(
    system: MoranSystem,
    measure: CylinderMeasure,
    r: float,
    H: int,
    k0: int = 2,
    profile_depth: int = 8,
    sample_points: int | None = None,
    budget: int = 1_000_000,
) -> ConstantsLedger:
    """Evaluate the explicit constant chain; estimates are graded as such."""
    if H < 2:
        raise PreconditionError(f"H must be >= 2, got {H}")
    led = ConstantsLedger()
    q = system.dimension
    s_lo, s_hi, n0 = system_bounds(system)
    p = measure.p

    witnesses = _witness_per_residue(system, k0)
    delta = min(w.delta for w in witnesses.values())
    k0_eff = max(len(w.tau) for w in witnesses.values())
    # Word-independent masses make the witness mass ratio an exact product.
    d0 = math.inf
    for residue, wit in witnesses.items():
        acc = 1.0
        for h, sym in enumerate(wit.tau, start=1):
            acc *= measure.level_masses(residue + h)[sym - 1]
        d0 = min(d0, acc)

    atoms = discretize(measure, system, profile_depth, budget=budget)
    radii = default_radii(atoms)
    d_est = doubling_profile(atoms, sample_points, radii).d_est
    d_est = max(d_est, 1.0)
    t = frostman_exponent(p, s_lo)
    c4_est = frostman_check(atoms, p, s_lo, radii=radii, sample_points=sample_points).c_est

    led.add("q", q, GRADE_EXACT, "ambient dimension")
    led.add("p", p, GRADE_EXACT, "min_k min_j m_{k,j}")
    led.add("s_lo", s_lo, GRADE_EXACT, "inf_k min_j s_{k,j}")
    led.add("s_hi", s_hi, GRADE_EXACT, "sup_k max_j s_{k,j}")
    led.add("N_0", n0, GRADE_EXACT, "sup_k n_k")
    led.add("delta", delta, GRADE_EXACT, "best boundary clearance over suffixes <= k_0",
            k0=k0)
    led.add("k_0", k0_eff, GRADE_EXACT, "witness suffix length bound")
    eta = stopping_base(p, s_lo, r)
    led.add("eta_r", eta, GRADE_EXACT, "min(p*s_lo^r, 8^-r)", p=p, s_lo=s_lo, r=r)
    led.add("D_0", d0, GRADE_EXACT,
            "min over residues of the witness-suffix mass product", k0=k0)
    led.add("D", d_est, GRADE_ESTIMATE,
            "max ball-mass ratio m(x,2e)/m(x,e) over sampled centers",
            depth=profile_depth)
    h0 = math.floor(math.log(eta) / math.log((1.0 - p) * s_hi ** r)) + 1
    led.add("H_0", h0, GRADE_EXACT, "floor(log eta_r / log((1-p)s_hi^r)) + 1")
    led.add("N_1", n0 ** h0, GRADE_EXACT, "N_0^H_0")
    k2 = math.floor(math.log(H) / math.log(2.0)) + 1
    led.add("k_2", k2, GRADE_EXACT, "floor(log H / log 2) + 1", H=H)
    c1h = d0 * p ** k2 * (delta * s_lo ** k2) ** r
    led.add("C_1H", c1h, GRADE_EXACT, "D_0 p^k_2 (delta s_lo^k_2)^r", H=H)
    k3 = 1
    while 2 ** k3 <= 45.0 / (16.0 * delta):
        k3 += 1
    led.add("k_3", k3, GRADE_EXACT, "min{k : 2^k > 45/(16 delta)}")
    c2 = (eta / d_est ** k3) ** (1.0 / r)
    led.add("C_2", c2, GRADE_ESTIMATE, "(eta_r / D^k_3)^(1/r)")
    c3 = eta * c2 ** r
    led.add("C_3", c3, GRADE_ESTIMATE, "eta_r C_2^r")
    m0 = (5.0 * (1.0 + 1.0 / c2)) ** q * (2.0 * c2 * delta) ** (-q)
    led.add("M_0", m0, GRADE_ESTIMATE, "(5(1+C_2^-1))^q (2 C_2 delta)^-q")
    led.add("L_0", 49 ** q, GRADE_EXACT, "49^q")
    led.add("t", t, GRADE_EXACT, "log(1-p)/log(s_lo)")
    led.add("C_4", c4_est, GRADE_ESTIMATE,
            "max ball-mass / eps^t over sampled centers", depth=profile_depth)
    c4t = 1.25 * (1.0 + 1.0 / c2 + 1.0 / c2 ** 2)
    led.add("C_4_tilde", c4t, GRADE_ESTIMATE, "(5/4)(1 + C_2^-1 + C_2^-2)")
    led.add("C_5", c4_est * c4t ** t, GRADE_ESTIMATE, "C_4 C_4_tilde^t")
    d1 = c3 / (m0 * (2.5 * (1.0 + 1.0 / c2)) ** r)
    led.add("D_1", d1, GRADE_ESTIMATE, "M_0^-1 C_3 ((5/2)(1+C_2^-1))^-r")
    k4 = math.floor(-math.log(16.0) / math.log(s_hi)) + 1
    led.add("k_4", k4, GRADE_EXACT, "floor(-log 16 / log s_hi) + 1")
    c6 = p ** k4 * 16.0 ** (-r)
    led.add("C_6", c6, GRADE_EXACT, "p^k_4 16^-r")
    k5 = math.floor(math.log(delta / 4.0) / math.log(s_hi)) + 1
    led.add("k_5", k5, GRADE_EXACT, "floor(log(delta/4)/log s_hi) + 1")
    c7 = p ** k5 * (delta / 4.0) ** r
    led.add(
        "C_7", c7, GRADE_BOUND,
        "p^k_5 (delta/4)^r branch only; the other branch needs M_5 (external)",
    )
    xi = 0.75 * (4.0 * H * c4_est) ** (-r / t)
    led.add("xi_H_r", xi, GRADE_ESTIMATE, "(3/4)(4 H C_4)^(-r/t)", H=H)
    m1 = covering_M(min(1.0, (0.5 * c6 * d1) ** (1.0 / r)), q)
    led.add("M_1", m1, GRADE_BOUND, "M((C_6 D_1 / 2)^(1/r)) via the grid bound")
    led.add("M_2", m1 + 49 ** q, GRADE_BOUND, "M_1 + L_0")
    for name in ("M_3", "M_4", "M_5"):
        led.add(name, None, GRADE_BOUND,
                "depends on zeta_{l,r} (external reference); not computable here")
    m6 = covering_M(min(1.0, (0.25 * c7) ** (1.0 / r)), q)
    led.add("M_6", m6, GRADE_BOUND, "M((C_7/4)^(1/r)) via the grid bound")
    led.add("M_7", None, GRADE_BOUND, "M((D_1 eta_r C_7/4)^(1/r)) + M_0 M_5 + M_6 + L_0; needs M_5")
    led.add("M_8", None, GRADE_BOUND, "M_0 M_7; needs M_7")
    return led
