"""Command-line front end.

    mrgeom sg-cells --level N --out DIR [--figures]
    mrgeom sg-plot  --level N --out DIR
    mrgeom check SUITE [--level N] [--grid M] [--graph FILE] [--seed S] [--tol T] [--out DIR]

Exit codes: 0 success, 1 failed check or I/O error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import checks, plotting, sg
from .graph_form import GraphFormError

log = logging.getLogger("mrgeom")

CSV_COLUMNS = ("word", "level", "nu", "G11", "G12", "G22", "Z11", "Z12", "Z22", "eig_ratio", "y1_center", "y2_center")


@dataclass(frozen=True)
class RunConfig:
    command: str
    level: int = 8
    grid: int = 8
    out: Path = Path(".")
    tol: float | None = None
    seed: int = checks.DEFAULT_SEED
    suite: str | None = None
    graph: Path | None = None
    figures: bool = False


def _level(text: str) -> int:
    n = int(text)
    if not 0 <= n <= sg.MAX_LEVEL:
        raise argparse.ArgumentTypeError(f"level must be between 0 and {sg.MAX_LEVEL}")
    return n


def _grid(text: str) -> int:
    n = int(text)
    if n < 2:
        raise argparse.ArgumentTypeError("grid must be at least 2")
    return n


def write_cells_csv(level: int, path: Path) -> Path:
    t = sg.cell_table(level)
    ratios = t.eig_ratios()
    centers = t.centers
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for k, word in enumerate(t.words):
            g, z = t.gram[k], t.z[k]
            w.writerow(
                [word, level]
                + [repr(float(v)) for v in (t.nu[k], g[0, 0], g[0, 1], g[1, 1], z[0, 0], z[0, 1], z[1, 1], ratios[k], centers[k, 0], centers[k, 1])]
            )
    return path


def cmd_sg_cells(cfg: RunConfig) -> int:
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = write_cells_csv(cfg.level, cfg.out / "cells.csv")
    log.info("wrote %s", path)
    if cfg.figures:
        fig = plotting.plot_rank_one(sg.rank_one_decay(cfg.level), cfg.out / "rank_one.svg")
        log.info("wrote %s", fig)
    return 0


def cmd_sg_plot(cfg: RunConfig) -> int:
    vs = sg.coordinates_at_vertices(cfg.level)
    path = plotting.plot_gasket(vs.coords, cfg.level, cfg.out / "gasket.svg")
    log.info("wrote %s (%d points)", path, len(vs))
    return 0


def cmd_check(cfg: RunConfig) -> int:
    report = checks.run_suite(cfg.suite, level=cfg.level, grid=cfg.grid, graph=cfg.graph, seed=cfg.seed, tol=cfg.tol)
    text = json.dumps(report, indent=2, allow_nan=True)
    if cfg.out != Path("."):
        cfg.out.mkdir(parents=True, exist_ok=True)
        (cfg.out / f"check_{cfg.suite}.json").write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0 if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mrgeom", description="Finite energy coordinates on the Sierpinski gasket and reference models.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    cells = sub.add_parser("sg-cells", help="write cells.csv for one level")
    cells.add_argument("--level", type=_level, required=True)
    cells.add_argument("--out", type=Path, default=Path("."))
    cells.add_argument("--figures", action="store_true", help="also render rank_one.svg")

    plot = sub.add_parser("sg-plot", help="write gasket.svg, the image of V_n under y")
    plot.add_argument("--level", type=_level, required=True)
    plot.add_argument("--out", type=Path, default=Path("."))

    chk = sub.add_parser("check", help="run a check suite and print the JSON report")
    chk.add_argument("suite", choices=checks.SUITES + ("all",))
    chk.add_argument("--level", type=_level, default=8)
    chk.add_argument("--grid", type=_grid, default=8)
    chk.add_argument("--graph", type=Path)
    chk.add_argument("--seed", type=int, default=checks.DEFAULT_SEED)
    chk.add_argument("--tol", type=float, help="tolerance for the exact (machine precision) checks")
    chk.add_argument("--out", type=Path, default=Path("."))
    return p


COMMANDS = {"sg-cells": cmd_sg_cells, "sg-plot": cmd_sg_plot, "check": cmd_check}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    cfg = RunConfig(
        command=args.command,
        level=args.level,
        grid=getattr(args, "grid", 8),
        out=args.out,
        tol=getattr(args, "tol", None),
        seed=getattr(args, "seed", checks.DEFAULT_SEED),
        suite=getattr(args, "suite", None),
        graph=getattr(args, "graph", None),
        figures=getattr(args, "figures", False),
    )
    try:
        return COMMANDS[cfg.command](cfg)
    except (OSError, GraphFormError) as exc:
        print(f"mrgeom: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
