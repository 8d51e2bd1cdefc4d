"""Voronoi-cell diagnostics of codebooks against cylinder measures.

Per-cell error integrals, min/max cell errors against the per-point
share of the total error, codepoint counts in inflated cylinders,
coverage radii, cell/cylinder incidences, and the antichain energy
comparison.  All counts are exact functions of the codebook and the
box geometry; atoms double as the support proxy.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .antichain import LambdaAntichain, build_lambda
from .errors import PreconditionError
from .geometry import MoranSystem, realize
from .measure import CylinderMeasure, DiscretizedMeasure, discretize
from .quantizer import Codebook, LloydConfig, _sq_dists, lloyd


@dataclass
class CellReport:
    """Per-codepoint masses and error integrals for one codebook."""

    labels: np.ndarray
    cell_mass: np.ndarray
    cell_error: np.ndarray
    j_lo: float
    j_hi: float
    total: float


def voronoi_cells(atoms: DiscretizedMeasure, book, r: float) -> CellReport:
    """Assign atoms to nearest codepoints (ties to the lowest index)."""
    points = book.points if isinstance(book, Codebook) else np.atleast_2d(book)
    if points.shape[0] == 0:
        raise PreconditionError("empty codebook")
    d2 = _sq_dists(atoms.points, points)
    labels = d2.argmin(axis=1)
    d2min = d2[np.arange(len(labels)), labels]
    contrib = atoms.weights * d2min ** (r / 2.0)
    n = points.shape[0]
    cell_mass = np.bincount(labels, weights=atoms.weights, minlength=n)
    cell_error = np.bincount(labels, weights=contrib, minlength=n)
    return CellReport(
        labels=labels,
        cell_mass=cell_mass,
        cell_error=cell_error,
        j_lo=float(cell_error.min()),
        j_hi=float(cell_error.max()),
        total=float(cell_error.sum()),
    )


def _point_box_dists(points: np.ndarray, lows: np.ndarray, sides: np.ndarray):
    """(n_points, n_boxes) Euclidean point-to-box distances."""
    his = lows + sides[:, None]
    acc = np.zeros((points.shape[0], lows.shape[0]))
    for axis in range(points.shape[1]):
        gap = np.maximum(
            lows[None, :, axis] - points[:, axis, None],
            points[:, axis, None] - his[None, :, axis],
        )
        np.maximum(gap, 0.0, out=gap)
        acc += gap * gap
    return np.sqrt(acc)


@dataclass
class KappaStats:
    """Codepoint counts in the eighth-diameter inflated cylinders.

    A codepoint can lie in several inflated boxes when cells touch, so
    the per-word counts need not partition the codebook."""

    per_word: np.ndarray
    kappa_min: int
    kappa_max: int
    kappa_c: int


def kappa_stats(book, lam: LambdaAntichain) -> KappaStats:
    points = book.points if isinstance(book, Codebook) else np.atleast_2d(book)
    dists = _point_box_dists(points, lam.lows, lam.sides)
    inside = dists <= lam.sides[None, :] / 8.0
    per_word = inside.sum(axis=0).astype(int)
    uncovered = int((~inside.any(axis=1)).sum())
    return KappaStats(
        per_word=per_word,
        kappa_min=int(per_word.min()),
        kappa_max=int(per_word.max()),
        kappa_c=uncovered,
    )


def _atoms_word_masks(atoms: DiscretizedMeasure, lam: LambdaAntichain):
    """Atom membership per antichain word via exact prefix matching."""
    words = atoms.words
    if words.shape[1] < lam.max_depth:
        raise PreconditionError(
            f"atom depth {words.shape[1]} below antichain depth {lam.max_depth}"
        )
    for w in lam.words:
        ell = len(w)
        yield (words[:, :ell] == np.asarray(w, dtype=words.dtype)).all(axis=1)


@dataclass
class CoverageReport:
    per_word: np.ndarray
    max_ratio: float


def coverage_check(atoms: DiscretizedMeasure, book, lam: LambdaAntichain) -> CoverageReport:
    """Largest atom-to-codebook distance inside each cylinder, relative to
    the cylinder diameter."""
    points = book.points if isinstance(book, Codebook) else np.atleast_2d(book)
    d = np.sqrt(_sq_dists(atoms.points, points).min(axis=1))
    ratios = np.empty(lam.phi)
    for i, mask in enumerate(_atoms_word_masks(atoms, lam)):
        ratios[i] = d[mask].max() / lam.sides[i] if mask.any() else 0.0
    return CoverageReport(per_word=ratios, max_ratio=float(ratios.max()))


def incidence_check(atoms: DiscretizedMeasure, labels: np.ndarray, lam: LambdaAntichain):
    """(max cylinders met per Voronoi cell, max cells meeting one cylinder)."""
    word_of_atom = np.full(len(atoms), -1, dtype=int)
    for i, mask in enumerate(_atoms_word_masks(atoms, lam)):
        word_of_atom[mask] = i
    pairs = {(int(a), int(s)) for a, s in zip(labels, word_of_atom) if s >= 0}
    cyl_per_cell: dict[int, int] = {}
    cell_per_cyl: dict[int, int] = {}
    for a, s in pairs:
        cyl_per_cell[a] = cyl_per_cell.get(a, 0) + 1
        cell_per_cyl[s] = cell_per_cyl.get(s, 0) + 1
    return max(cyl_per_cell.values()), max(cell_per_cyl.values())


@dataclass
class RatioRow:
    n: int
    k: int
    e_pow: float
    j_lo: float
    j_hi: float
    ratio_lo: float
    ratio_hi: float
    kappa_min: int
    kappa_max: int
    kappa_c: int
    coverage_max: float


@dataclass
class RatioTable:
    r: float
    m_hat: int
    rows: list[RatioRow]
    codebooks: dict[int, Codebook] = field(default_factory=dict)

    COLUMNS = (
        "n", "k", "e_r_pow", "j_lo", "j_hi", "ratio_lo", "ratio_hi",
        "kappa_min", "kappa_max", "kappa_c", "coverage_max",
    )

    def as_rows(self):
        for row in self.rows:
            yield [
                row.n, row.k, repr(row.e_pow), repr(row.j_lo), repr(row.j_hi),
                repr(row.ratio_lo), repr(row.ratio_hi),
                row.kappa_min, row.kappa_max, row.kappa_c,
                repr(row.coverage_max),
            ]


def _pairing(phis: list[int], m_hat: int, n: int) -> int:
    """Largest k with m_hat * phi_k <= n (0 when none qualifies)."""
    k = 0
    for i, phi in enumerate(phis):
        if m_hat * phi <= n:
            k = i
    return k


def _max_workers() -> int:
    raw = os.environ.get("MORAN_QUANT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def ratio_table(
    system: MoranSystem,
    measure: CylinderMeasure,
    r: float,
    n_values,
    depth: int,
    m_hat: int = 1,
    cfg: LloydConfig | None = None,
    budget: int = 1_000_000,
    max_words: int = 500_000,
) -> RatioTable:
    """Per-n codebooks with cell-error ratios and antichain diagnostics."""
    cfg = cfg or LloydConfig()
    n_values = sorted(set(int(n) for n in n_values))
    atoms = discretize(measure, system, depth, budget=budget)
    if n_values[-1] > len(atoms):
        raise PreconditionError(
            f"n={n_values[-1]} exceeds the {len(atoms)} atoms at depth {depth}"
        )
    lams: list[LambdaAntichain] = [build_lambda(system, measure, 0, r, max_words)]
    while m_hat * lams[-1].phi <= n_values[-1]:
        lams.append(
            build_lambda(system, measure, lams[-1].k + 1, r, max_words)
        )
    phis = [lam.phi for lam in lams]

    def run(n: int) -> tuple[RatioRow, Codebook]:
        book = lloyd(
            atoms, n, r,
            restarts=cfg.restarts,
            seed=cfg.seed + 1_000_003 * n,
            tol=cfg.tol,
            max_iter=cfg.max_iter,
        )
        cells = voronoi_cells(atoms, book, r)
        k = _pairing(phis, m_hat, n)
        lam = lams[k]
        kappa = kappa_stats(book, lam)
        cover = coverage_check(atoms, book, lam)
        e = book.distortion
        row = RatioRow(
            n=n, k=k, e_pow=e, j_lo=cells.j_lo, j_hi=cells.j_hi,
            ratio_lo=n * cells.j_lo / e if e > 0 else 1.0,
            ratio_hi=n * cells.j_hi / e if e > 0 else 1.0,
            kappa_min=kappa.kappa_min,
            kappa_max=kappa.kappa_max,
            kappa_c=kappa.kappa_c,
            coverage_max=cover.max_ratio,
        )
        return row, book

    workers = _max_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, n_values))
    else:
        results = [run(n) for n in n_values]
    table = RatioTable(r=r, m_hat=m_hat, rows=[row for row, _ in results])
    for n, (_, book) in zip(n_values, results):
        table.codebooks[n] = book
    return table


@dataclass
class EnergySumRow:
    k: int
    n: int
    e_pow: float
    sum_energy: float
    phi_eta: float
    ratio_e: float
    ratio_sum: float


@dataclass
class EnergySumReport:
    rows: list[EnergySumRow]
    band_e: float
    band_sum: float
    ok_e: bool
    ok_sum: bool


def energy_sum_check(
    system: MoranSystem,
    measure: CylinderMeasure,
    r: float,
    ks,
    depth: int,
    m_hat: int = 1,
    cfg: LloydConfig | None = None,
    band_tol: float = 4.0,
    budget: int = 1_000_000,
) -> EnergySumReport:
    """Compare the quantization error at n(k) = m_hat * phi_k with the
    antichain energy sum and with phi_k * eta^k."""
    cfg = cfg or LloydConfig()
    atoms = discretize(measure, system, depth, budget=budget)
    rows: list[EnergySumRow] = []
    for k in sorted(set(int(k) for k in ks)):
        lam = build_lambda(system, measure, k, r)
        n = m_hat * lam.phi
        if n > len(atoms):
            raise PreconditionError(
                f"n(k)={n} exceeds the {len(atoms)} atoms at depth {depth}"
            )
        book = lloyd(
            atoms, n, r,
            restarts=cfg.restarts,
            seed=cfg.seed + 1_000_003 * n,
            tol=cfg.tol,
            max_iter=cfg.max_iter,
        )
        sum_e = float(lam.energies.sum())
        phi_eta = lam.phi * lam.eta_r ** k
        rows.append(
            EnergySumRow(
                k=k, n=n, e_pow=book.distortion, sum_energy=sum_e,
                phi_eta=phi_eta,
                ratio_e=book.distortion / phi_eta,
                ratio_sum=sum_e / phi_eta,
            )
        )
    ratio_e = [row.ratio_e for row in rows]
    ratio_sum = [row.ratio_sum for row in rows]
    band_e = max(ratio_e) / min(ratio_e)
    band_sum = max(ratio_sum) / min(ratio_sum)
    return EnergySumReport(
        rows=rows,
        band_e=band_e,
        band_sum=band_sum,
        ok_e=band_e <= band_tol,
        ok_sum=band_sum <= band_tol,
    )


@dataclass
class CellBoundReport:
    integral: float
    energy: float
    lower: float
    upper: float
    ok_lower: bool
    ok_upper: bool


def cell_bound_check(
    system: MoranSystem,
    measure: CylinderMeasure,
    atoms: DiscretizedMeasure,
    sigma,
    alpha,
    r: float,
    zeta: float,
    H: int,
    ledger,
) -> CellBoundReport:
    """Two-sided bound on the cell error integral for books near the cell.

    The codebook must sit inside the zeta-inflated cell and have exactly
    H >= 2 points; the lower constant is rebuilt from the ledger inputs
    so any H works.
    """
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    if alpha.shape[0] != H or H < 2:
        raise PreconditionError(f"need card(alpha) == H >= 2, got {alpha.shape[0]}")
    cell = realize(system, tuple(sigma))
    lows = np.asarray([cell.lower])
    sides = np.asarray([cell.side])
    dists = _point_box_dists(alpha, lows, sides)[:, 0]
    if (dists > zeta * cell.side * (1 + 1e-12)).any():
        raise PreconditionError(
            "codebook point outside the zeta-inflated cell"
        )
    sigma = tuple(int(s) for s in sigma)
    ell = len(sigma)
    mask = (atoms.words[:, :ell] == np.asarray(sigma, dtype=atoms.words.dtype)).all(axis=1)
    d2 = _sq_dists(atoms.points[mask], alpha).min(axis=1)
    integral = float(atoms.weights[mask] @ d2 ** (r / 2.0))

    from .measure import energy as cell_energy

    e_val = cell_energy(measure, system, sigma, r)
    d0 = ledger["D_0"].value
    p = ledger["p"].value
    delta = ledger["delta"].value
    s_lo = ledger["s_lo"].value
    k2 = math.floor(math.log(H) / math.log(2.0)) + 1
    c1h = d0 * p ** k2 * (delta * s_lo ** k2) ** r
    lower = c1h * e_val
    upper = (1.0 + zeta) ** r * e_val
    return CellBoundReport(
        integral=integral,
        energy=e_val,
        lower=lower,
        upper=upper,
        ok_lower=integral >= lower,
        ok_upper=integral <= upper,
    )
