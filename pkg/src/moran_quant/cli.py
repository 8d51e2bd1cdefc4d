"""Command-line driver: config ingestion, experiment orchestration, CSV output.

Subcommands: verify, antichain, constants, quantize, gersho.  A single
JSON config drives everything; flags override config keys.  Every
artifact is written atomically and runs are byte-reproducible for a
fixed seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__
from .antichain import build_lambda, constants_ledger, growth_check, neighbor_sets
from .coding import word_str
from .config import ExperimentConfig, load
from .errors import MoranQuantError
from .gersho import RatioTable, ratio_table, voronoi_cells
from .geometry import system_bounds, verify_construction
from .measure import discretize
from .quantizer import error_curve


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_csv(path: Path, header, rows) -> None:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    _atomic_write(path, buf.getvalue())


def _write_manifest(outdir: Path, command: str, cfg: ExperimentConfig, artifacts) -> None:
    manifest = {
        "command": command,
        "config_hash": cfg.config_hash(),
        "seed": cfg.quantizer.seed,
        "version": __version__,
        "artifacts": sorted(artifacts),
    }
    _atomic_write(
        outdir / "manifest.json",
        json.dumps(manifest, sort_keys=True, indent=2) + "\n",
    )


def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_verify(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg)
    report = verify_construction(cfg.system, depth=min(cfg.depth, 6), k0=cfg.k0)
    s_lo, s_hi, n0 = system_bounds(cfg.system)
    rows = [
        ["construction", "pass" if report.ok else "fail", report.violation or ""],
        ["min_delta", repr(report.min_delta) if report.min_delta else "", ""],
        ["words_checked", report.words_checked, ""],
        ["s_lo", repr(s_lo), ""],
        ["s_hi", repr(s_hi), ""],
        ["N_0", n0, ""],
    ]
    _write_csv(out / "verify.csv", ["check", "value", "detail"], rows)
    _write_manifest(out, "verify", cfg, ["verify.csv"])
    return 0 if report.ok else 1


def cmd_antichain(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg)
    artifacts = []
    growth = growth_check(cfg.system, cfg.measure, cfg.r, max(1, cfg.k_max))
    rows = []
    for k, phi in enumerate(growth.phis):
        factor = growth.factors[k - 1] if k >= 1 else ""
        rows.append([k, phi, repr(factor) if factor != "" else ""])
    _write_csv(out / "growth.csv", ["k", "phi", "factor"], rows)
    artifacts.append("growth.csv")
    for k in range(1, cfg.k_max + 1):
        lam = build_lambda(cfg.system, cfg.measure, k, cfg.r)
        structure = neighbor_sets(cfg.system, lam)
        rows = [
            [
                word_str(w),
                len(w),
                repr(float(lam.energies[i])),
                int(structure.m_sigma[i]),
                repr(float(structure.star_diameter[i])),
                repr(float(structure.star_mass[i])),
            ]
            for i, w in enumerate(lam.words)
        ]
        name = f"antichain_k{k}.csv"
        _write_csv(
            out / name,
            ["word", "depth", "energy", "M_sigma", "star_diameter", "star_mass"],
            rows,
        )
        artifacts.append(name)
    _write_manifest(out, "antichain", cfg, artifacts)
    return 0 if growth.ok else 1


def cmd_constants(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg)
    ledger = constants_ledger(
        cfg.system, cfg.measure, cfg.r, cfg.constants_H,
        k0=cfg.k0, profile_depth=min(cfg.depth, 8), budget=cfg.budget,
    )
    rows = [
        [e.name, "" if e.value is None else repr(e.value), e.grade, e.formula]
        for e in ledger.entries()
    ]
    _write_csv(out / "ledger.csv", ["name", "value", "grade", "formula"], rows)
    _write_manifest(out, "constants", cfg, ["ledger.csv"])
    return 0


def cmd_quantize(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg)
    atoms = discretize(cfg.measure, cfg.system, cfg.depth, budget=cfg.budget)
    curve = error_curve(atoms, cfg.n_values, cfg.r, cfg.quantizer)
    artifacts = ["curve.csv"]
    _write_csv(
        out / "curve.csv",
        ["n", "e_r_pow"],
        [[row.n, repr(row.e_pow)] for row in curve.rows],
    )
    q = cfg.system.dimension
    coord_cols = ["x1"] if q == 1 else ["x1", "x2"]
    for n, book in curve.codebooks.items():
        cells = voronoi_cells(atoms, book, cfg.r)
        rows = []
        for i in range(book.points.shape[0]):
            coords = [repr(float(c)) for c in book.points[i]]
            rows.append(
                [i] + coords + [
                    repr(float(cells.cell_mass[i])),
                    repr(float(cells.cell_error[i])),
                ]
            )
        name = f"codebook_n{n}.csv"
        _write_csv(
            out / name,
            ["index"] + coord_cols + ["cell_mass", "cell_distortion"],
            rows,
        )
        artifacts.append(name)
    _write_manifest(out, "quantize", cfg, artifacts)
    return 0


def _scatter_svg(rows) -> str:
    """Minimal deterministic scatter of the two cell-error ratios vs n."""
    width, height, margin = 640, 480, 50
    ns = [row.n for row in rows]
    ys = [row.ratio_lo for row in rows] + [row.ratio_hi for row in rows]
    x_lo, x_hi = min(ns), max(ns)
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def sx(v):
        return margin + (v - x_lo) / x_span * (width - 2 * margin)

    def sy(v):
        return height - margin - (v - y_lo) / y_span * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 10}" font-size="12">n</text>',
        f'<text x="10" y="{margin - 10}" font-size="12">n*J/e^r '
        f'(lo=blue, hi=red)</text>',
    ]
    for row in rows:
        parts.append(
            f'<circle cx="{sx(row.n):.2f}" cy="{sy(row.ratio_lo):.2f}" '
            f'r="3" fill="blue"/>'
        )
        parts.append(
            f'<circle cx="{sx(row.n):.2f}" cy="{sy(row.ratio_hi):.2f}" '
            f'r="3" fill="red"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_gersho(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg)
    table = ratio_table(
        cfg.system, cfg.measure, cfg.r, cfg.n_values, cfg.depth,
        m_hat=cfg.pairing_multiplier, cfg=cfg.quantizer, budget=cfg.budget,
    )
    _write_csv(out / "ratios.csv", RatioTable.COLUMNS, table.as_rows())
    artifacts = ["ratios.csv"]
    if cfg.svg:
        _atomic_write(out / "ratios.svg", _scatter_svg(table.rows))
        artifacts.append("ratios.svg")
    _write_manifest(out, "gersho", cfg, artifacts)
    return 0


_COMMANDS = {
    "verify": cmd_verify,
    "antichain": cmd_antichain,
    "constants": cmd_constants,
    "quantize": cmd_quantize,
    "gersho": cmd_gersho,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moran-quant",
        description="Moran-set quantization experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--r", type=float, help="override quantization order")
        p.add_argument("--depth", type=int, help="override discretization depth")
        p.add_argument("--seed", type=int, help="override quantizer seed")
        p.add_argument("--restarts", type=int, help="override Lloyd restarts")
        p.add_argument("--tol", type=float, help="override Lloyd tolerance")
        p.add_argument("--k-max", type=int, dest="k_max", help="override k range")
        p.add_argument("--n", type=int, help="quantize a single codebook size")
        p.add_argument("--output-dir", dest="output_dir", help="override output dir")
        p.add_argument("--svg", action="store_true", help="also emit ratios.svg")
    return parser


def _apply_overrides(cfg_raw: dict, args) -> dict:
    """Flags win over config keys."""
    if args.r is not None:
        cfg_raw["r"] = args.r
    if args.depth is not None:
        cfg_raw["depth"] = args.depth
    if args.k_max is not None:
        cfg_raw["k_max"] = args.k_max
    if args.n is not None:
        cfg_raw["n_values"] = [args.n]
        cfg_raw.pop("n_range", None)
    if args.output_dir is not None:
        cfg_raw["output_dir"] = args.output_dir
    if args.svg:
        cfg_raw["svg"] = True
    quant = dict(cfg_raw.get("quantizer", {}))
    if args.seed is not None:
        quant["seed"] = args.seed
    if args.restarts is not None:
        quant["restarts"] = args.restarts
    if args.tol is not None:
        quant["tol"] = args.tol
    if quant:
        cfg_raw["quantizer"] = quant
    return cfg_raw


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        raw = json.loads(Path(args.config).read_text())
    except FileNotFoundError:
        print(f"config error: no such file {args.config}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(
            f"config error: {args.config}: line {exc.lineno} "
            f"column {exc.colno}: {exc.msg}",
            file=sys.stderr,
        )
        return 2
    try:
        from .config import from_dict

        cfg = from_dict(_apply_overrides(raw, args))
        return _COMMANDS[args.command](cfg)
    except MoranQuantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
