"""Numerical n-point quantization of atom clouds.

Lloyd iteration with seeded distance-squared initialization and
best-of-restarts, plus an exact small-instance oracle that enumerates
set partitions.  All tie-breaking is by lowest index so runs are
bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .geometry import MoranSystem
from .measure import CylinderMeasure, DiscretizedMeasure

ORACLE_MAX_ATOMS = 12
ORACLE_MAX_POINTS = 4


@dataclass
class LloydConfig:
    restarts: int = 8
    seed: int = 0
    tol: float = 1e-10
    max_iter: int = 500


@dataclass
class Codebook:
    points: np.ndarray
    r: float
    distortion: float
    restarts: int
    iterations: int
    converged: bool
    seed: int


@dataclass
class CurveRow:
    n: int
    e_pow: float
    flagged: bool = False


@dataclass
class ErrorCurve:
    r: float
    rows: list[CurveRow]
    codebooks: dict[int, Codebook] = field(default_factory=dict)


def _points_weights(atoms):
    if isinstance(atoms, DiscretizedMeasure):
        return atoms.points, atoms.weights
    pts, w = atoms
    return np.asarray(pts, dtype=float), np.asarray(w, dtype=float)


def _sq_dists(points: np.ndarray, book: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - book[None, :, :]
    return (diff * diff).sum(axis=2)


def distortion(atoms, book, r: float) -> float:
    """Sum of weight * (distance to nearest codepoint)^r over the atoms."""
    points, weights = _points_weights(atoms)
    book = np.atleast_2d(np.asarray(book, dtype=float))
    if book.shape[0] == 0:
        raise PreconditionError("empty codebook")
    d2 = _sq_dists(points, book).min(axis=1)
    return float(weights @ d2 ** (r / 2.0))


def _cell_center(points, weights, r, tol, max_iter, start=None):
    """Exact 1-center for r=2; damped reweighted fixed point otherwise."""
    wsum = weights.sum()
    mean = (weights[:, None] * points).sum(axis=0) / wsum
    if r == 2.0:
        cost = float(weights @ ((points - mean) ** 2).sum(axis=1))
        return mean, cost

    def cost_at(c):
        d2 = ((points - c) ** 2).sum(axis=1)
        return float(weights @ d2 ** (r / 2.0))

    scale = float((points.max(axis=0) - points.min(axis=0)).max()) or 1.0
    c = np.array(start if start is not None else mean, dtype=float)
    f = cost_at(c)
    for _ in range(max_iter):
        d = np.sqrt(((points - c) ** 2).sum(axis=1))
        d = np.maximum(d, 1e-20)
        irls_w = weights * d ** (r - 2.0)
        target = (irls_w[:, None] * points).sum(axis=0) / irls_w.sum()
        step = 1.0
        cand, fc = target, cost_at(target)
        while fc > f and step > 1e-8:
            step *= 0.5
            cand = c + step * (target - c)
            fc = cost_at(cand)
        if fc > f:
            break
        move = float(np.abs(cand - c).max())
        c, f = cand, fc
        if move < tol * scale:
            break
    return c, f


def _dsq_init(points, weights, n, rng):
    """Seeded distance-squared-proportional initialization."""
    m = points.shape[0]
    probs = weights / weights.sum()
    chosen = [int(rng.choice(m, p=probs))]
    d2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < n:
        mass = weights * d2
        total = mass.sum()
        if total <= 0.0:
            # All remaining atoms coincide with chosen centers.
            pick = int(np.argmax(d2))
        else:
            pick = int(rng.choice(m, p=mass / total))
        chosen.append(pick)
        d2 = np.minimum(d2, ((points - points[pick]) ** 2).sum(axis=1))
    return points[chosen].copy()


def _repair_empty(points, weights, book, labels, d2min, r):
    """Reseed empty cells at the atom with the largest error contribution."""
    n = book.shape[0]
    counts = np.bincount(labels, minlength=n)
    guard = 0
    while (counts == 0).any() and guard < 3 * n:
        guard += 1
        empty = int(np.argmin(counts))
        contrib = weights * d2min ** (r / 2.0)
        worst = int(np.argmax(contrib))
        book[empty] = points[worst]
        d2 = _sq_dists(points, book)
        labels = d2.argmin(axis=1)
        d2min = d2[np.arange(len(labels)), labels]
        counts = np.bincount(labels, minlength=n)
    return book, labels, d2min


def _lloyd_single(points, weights, book, r, tol, max_iter):
    n = book.shape[0]
    prev = math.inf
    iterations = 0
    converged = False
    for it in range(1, max_iter + 1):
        iterations = it
        d2 = _sq_dists(points, book)
        labels = d2.argmin(axis=1)
        d2min = d2[np.arange(len(labels)), labels]
        book, labels, d2min = _repair_empty(points, weights, book, labels, d2min, r)
        cur = float(weights @ d2min ** (r / 2.0))
        if cur > prev * (1.0 + 1e-9) + 1e-300:
            raise RuntimeError("distortion increased across a Lloyd step")
        for cell in range(n):
            mask = labels == cell
            if not mask.any():
                continue
            book[cell], _ = _cell_center(
                points[mask], weights[mask], r, tol, max_iter, start=book[cell]
            )
        if prev - cur <= tol * max(cur, 1e-300):
            converged = True
            prev = cur
            break
        prev = cur
    final = distortion((points, weights), book, r)
    return book, min(final, prev), iterations, converged


def lloyd(
    atoms,
    n: int,
    r: float = 2.0,
    restarts: int = 8,
    seed: int = 0,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> Codebook:
    """Best-of-restarts Lloyd quantizer on the atom cloud."""
    points, weights = _points_weights(atoms)
    if n < 1:
        raise PreconditionError(f"n must be >= 1, got {n}")
    if r < 1:
        raise PreconditionError(f"order r must be >= 1, got {r}")
    distinct = np.unique(points, axis=0).shape[0]
    if n > distinct:
        raise PreconditionError(
            f"n={n} exceeds the {distinct} distinct atom locations"
        )
    best = None
    for restart in range(max(1, restarts)):
        rng = np.random.default_rng(np.random.SeedSequence([seed, restart]))
        init = _dsq_init(points, weights, n, rng)
        book, dist, iters, conv = _lloyd_single(
            points, weights, init, r, tol, max_iter
        )
        # Coinciding centers can only appear through a degenerate final
        # update; one more pass makes the shadowed duplicates empty cells
        # and repairs them.
        tries = 0
        while np.unique(book, axis=0).shape[0] < n and tries < 3:
            tries += 1
            book, dist, extra, conv = _lloyd_single(
                points, weights, book, r, tol, max_iter
            )
            iters += extra
        if best is None or dist < best[0]:
            best = (dist, book, iters, conv)
    dist, book, iters, conv = best
    return Codebook(
        points=book,
        r=r,
        distortion=dist,
        restarts=max(1, restarts),
        iterations=iters,
        converged=conv,
        seed=seed,
    )


def _partitions(m: int, max_blocks: int):
    """Restricted-growth strings: set partitions of range(m) into <= max_blocks."""
    labels = [0] * m

    def rec(i, used):
        if i == m:
            yield labels, used
            return
        top = min(used + 1, max_blocks)
        for b in range(top):
            labels[i] = b
            yield from rec(i + 1, max(used, b + 1))

    yield from rec(1, 1)


def brute_force(atoms, n: int, r: float = 2.0) -> Codebook:
    """Exact oracle: enumerate set partitions, solve each cell's 1-center.

    Enumerating partitions dominates enumerating assignments because the
    optimal assignment for fixed centers is a Voronoi partition.
    """
    points, weights = _points_weights(atoms)
    m = points.shape[0]
    if m > ORACLE_MAX_ATOMS or n > ORACLE_MAX_POINTS:
        raise PreconditionError(
            f"oracle limits: m <= {ORACLE_MAX_ATOMS}, n <= {ORACLE_MAX_POINTS}"
        )
    if n < 1:
        raise PreconditionError(f"n must be >= 1, got {n}")
    distinct = np.unique(points, axis=0).shape[0]
    if n > distinct:
        raise PreconditionError(
            f"n={n} exceeds the {distinct} distinct atom locations"
        )

    best_cost = math.inf
    best_blocks = -1
    best_centers = None
    for labels, used in _partitions(m, n):
        centers = []
        cost = 0.0
        pruned = False
        for b in range(used):
            mask = [i for i in range(m) if labels[i] == b]
            c, f = _cell_center(
                points[mask], weights[mask], r, tol=1e-14, max_iter=2000
            )
            centers.append(c)
            cost += f
            if cost > best_cost:
                pruned = True
                break
        if pruned:
            continue
        # Equal-cost ties prefer more blocks so n distinct points survive
        # degenerate instances.
        if cost < best_cost - 1e-18 or (
            cost <= best_cost + 1e-18 and used > best_blocks
        ):
            best_cost = min(cost, best_cost)
            best_blocks = used
            best_centers = np.asarray(centers)
    return Codebook(
        points=best_centers,
        r=r,
        distortion=float(best_cost),
        restarts=0,
        iterations=0,
        converged=True,
        seed=0,
    )


def error_curve(atoms, n_values, r: float, cfg: LloydConfig) -> ErrorCurve:
    """Lloyd per n with the monotone-decrease postcondition enforced."""
    rows: list[CurveRow] = []
    books: dict[int, Codebook] = {}
    prev_e = math.inf
    for n in sorted(n_values):
        book = lloyd(
            atoms, n, r,
            restarts=cfg.restarts,
            seed=cfg.seed + 1_000_003 * n,
            tol=cfg.tol,
            max_iter=cfg.max_iter,
        )
        flagged = False
        if book.distortion >= prev_e:
            retry = lloyd(
                atoms, n, r,
                restarts=2 * cfg.restarts,
                seed=cfg.seed + 1_000_003 * n + 1,
                tol=cfg.tol,
                max_iter=cfg.max_iter,
            )
            if retry.distortion < book.distortion:
                book = retry
            flagged = book.distortion >= prev_e
        rows.append(CurveRow(n=n, e_pow=book.distortion, flagged=flagged))
        books[n] = book
        prev_e = book.distortion
    return ErrorCurve(r=r, rows=rows, codebooks=books)


def self_similar_variance(system: MoranSystem, measure: CylinderMeasure) -> float:
    """Closed-form one-point quadratic error for period-1 systems.

    Solves the similarity fixed points for the mean and the variance:
    m = sum p_i f_i(m), V = sum p_i (s_i^2 V + |f_i(m) - m|^2).
    """
    if system.period != 1 or measure.period != 1:
        raise PreconditionError("closed form requires a period-1 system")
    spec = system.levels[0]
    probs = np.asarray(measure.mass_vectors[0])
    ratios = np.asarray(spec.ratios)
    lows = np.asarray(spec.offsets, dtype=float)
    mean = (probs[:, None] * lows).sum(axis=0) / (1.0 - (probs * ratios).sum())
    images = lows + ratios[:, None] * mean[None, :]
    sq = ((images - mean[None, :]) ** 2).sum(axis=1)
    return float((probs * sq).sum() / (1.0 - (probs * ratios ** 2).sum()))
