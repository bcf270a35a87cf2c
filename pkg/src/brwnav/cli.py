"""Command-line front end: solve, compare, ingest.

Exit codes: 0 success, 1 input/configuration error, 2 solver
non-convergence. Artifacts are written atomically and embed the run
config plus a content hash of the input, so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis, export
from .graph import (
    GraphIngestError,
    file_sha256,
    load_edge_list,
    load_openflights,
    restrict_to_component,
    write_edge_list,
)
from .solver import ConvergenceError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NO_CONVERGENCE = 2

OUT_DIR_ENV = "BRWNAV_OUT"


class _Parser(argparse.ArgumentParser):
    """Argument errors are input errors (exit 1), not the argparse default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT_ERROR, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    input: Path
    format: str
    targets: list[str] = field(default_factory=list)
    gammas: list[float] = field(default_factory=list)
    tol: float = 1e-12
    max_iter: int | None = None
    seed: int = 0
    out_dir: Path = Path(".")
    exports: list[str] = field(default_factory=lambda: ["json", "csv"])
    capacity: Path | None = None

    def validate(self, need_targets: bool = True) -> None:
        if self.tol <= 0:
            raise ValueError("--tol must be positive")
        if need_targets and not self.targets:
            raise ValueError("at least one --target is required")
        if need_targets and not self.gammas:
            raise ValueError("at least one --gamma is required")
        if any(g < 0 for g in self.gammas):
            raise ValueError("--gamma must be nonnegative")

    def as_dict(self) -> dict:
        return {
            "input": str(self.input),
            "format": self.format,
            "targets": list(self.targets),
            "gammas": list(self.gammas),
            "tol": self.tol,
            "max_iter": self.max_iter,
            "seed": self.seed,
            "exports": sorted(self.exports),
            "capacity": str(self.capacity) if self.capacity else None,
        }


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="edge list or routes file")
    p.add_argument(
        "--format", default="tsv", choices=["tsv", "csv", "openflights"],
        help="input format (default tsv: whitespace-separated edge list)",
    )
    p.add_argument(
        "--capacity", default=None,
        help="equipment capacity CSV (openflights format only)",
    )
    p.add_argument(
        "--out", default=None,
        help=f"output directory (default ${OUT_DIR_ENV} or current directory)",
    )
    p.add_argument("--tol", type=float, default=1e-12, help="solver tolerance")
    p.add_argument("--max-iter", type=int, default=None, help="solver iteration cap")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized validation")
    p.add_argument(
        "--export", action="append", default=None,
        help="artifact formats: json, csv, dot (repeatable or comma-separated)",
    )


def _add_solve_args(p: argparse.ArgumentParser) -> None:
    _add_common_args(p)
    p.add_argument("--target", action="append", required=True, help="target node label")
    p.add_argument(
        "--gamma", action="append", required=True, type=float,
        help="transition-cost weight, in nats (repeatable)",
    )
    p.add_argument(
        "--gamma-in-bits", action="store_true",
        help="interpret --gamma in bits: each value is multiplied by ln 2",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="brwnav", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_solve = sub.add_parser("solve", help="solve one or more (target, gamma) instances")
    _add_solve_args(p_solve)

    p_compare = sub.add_parser("compare", help="gamma sweep comparison table")
    _add_solve_args(p_compare)

    p_ingest = sub.add_parser("ingest", help="normalize input to a canonical edge list")
    _add_common_args(p_ingest)
    return parser


def _config_from_args(args) -> RunConfig:
    exports = []
    for item in args.export or []:
        exports.extend(s.strip() for s in item.split(",") if s.strip())
    exports = exports or ["json", "csv"]
    bad = set(exports) - {"json", "csv", "dot"}
    if bad:
        raise ValueError(f"unknown export formats: {sorted(bad)}")
    out_dir = args.out or os.environ.get(OUT_DIR_ENV) or "."
    gammas = list(getattr(args, "gamma", None) or [])
    if getattr(args, "gamma_in_bits", False):
        gammas = [g * math.log(2.0) for g in gammas]
    return RunConfig(
        input=Path(args.input),
        format=args.format,
        targets=list(getattr(args, "target", None) or []),
        gammas=gammas,
        tol=args.tol,
        max_iter=args.max_iter,
        seed=args.seed,
        out_dir=Path(out_dir),
        exports=exports,
        capacity=Path(args.capacity) if args.capacity else None,
    )


def _load_graph(config: RunConfig):
    if not config.input.exists():
        raise GraphIngestError(f"input file not found: {config.input}")
    if config.format == "openflights":
        return load_openflights(config.input, config.capacity)
    return load_edge_list(config.input, format=config.format)


def _safe(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", label)


def _provenance(config: RunConfig) -> dict:
    return {
        "config": config.as_dict(),
        "input_sha256": file_sha256(config.input),
    }


def _csv_comments(prov: dict) -> list[str]:
    return [
        "config: " + json.dumps(prov["config"], sort_keys=True),
        "input_sha256: " + prov["input_sha256"],
    ]


def cmd_solve(config: RunConfig) -> int:
    config.validate()
    g_full = _load_graph(config)
    prov = _provenance(config)
    stem = config.input.stem
    gammas = sorted(set(config.gammas))
    if len(gammas) < len(config.gammas):
        logger.warning("duplicate gamma values deduplicated")
    for target in config.targets:
        g = restrict_to_component(g_full, target)
        previous_loss = None
        for gamma in gammas:
            sol, star, fld, report = analysis.solve_navigation(
                g, target, gamma,
                tol=config.tol, max_iter=config.max_iter,
                initial_loss=previous_loss,
            )
            previous_loss = sol.loss
            base = config.out_dir / f"{stem}.{_safe(target)}.g{gamma:g}"
            if "json" in config.exports:
                export.write_json_atomic(
                    Path(f"{base}.solution.json"),
                    export.solution_to_json_obj(sol, star, g.labels, prov),
                )
                export.write_json_atomic(
                    Path(f"{base}.costs.json"),
                    export.cost_report_to_json_obj(report, g.labels, prov),
                )
            if "csv" in config.exports:
                export.write_text_atomic(
                    Path(f"{base}.costs.csv"),
                    export.cost_report_csv(report, g.labels, _csv_comments(prov)),
                )
                export.write_text_atomic(
                    Path(f"{base}.mfpt.csv"),
                    export.mfpt_csv(fld, g.labels, _csv_comments(prov)),
                )
            if "dot" in config.exports:
                export.write_text_atomic(
                    Path(f"{base}.policy.dot"),
                    export.policy_to_dot(star, g.labels),
                )
            nontarget = [u for u in range(g.n) if u != fld.target]
            mean_mfpt = float(sum(fld.values[u] for u in nontarget) / max(1, len(nontarget)))
            print(
                f"target={target} gamma={gamma:g} mean_mfpt={mean_mfpt:.2f} "
                f"max_kl={report.max_kl:.1f} bits bound={report.trajectory_bound:.1f} bits "
                f"full_table={report.full_table_bits:.1f} bits decision={report.coding_decision}"
            )
    return EXIT_OK


def cmd_compare(config: RunConfig) -> int:
    config.validate()
    g_full = _load_graph(config)
    prov = _provenance(config)
    stem = config.input.stem
    for target in config.targets:
        g = restrict_to_component(g_full, target)
        rows = analysis.gamma_sweep(
            g, target, config.gammas, tol=config.tol, max_iter=config.max_iter,
        )
        base = config.out_dir / f"{stem}.{_safe(target)}.compare"
        if "json" in config.exports:
            export.write_json_atomic(
                Path(f"{base}.json"), export.comparison_json_obj(rows, prov)
            )
        if "csv" in config.exports:
            export.write_text_atomic(
                Path(f"{base}.csv"), export.comparison_csv(rows, _csv_comments(prov))
            )
        print(f"target={target}")
        print(f"  {'gamma':>8} {'mean_mfpt':>10} {'max_kl':>8} {'bound':>8} {'table':>12} decision")
        for r in rows:
            print(
                f"  {r.gamma:>8g} {r.mean_mfpt:>10.2f} {r.max_kl:>8.1f} "
                f"{r.trajectory_bound:>8.1f} {r.full_table_bits:>12.1f} {r.coding_decision}"
            )
    return EXIT_OK


def cmd_ingest(config: RunConfig) -> int:
    config.validate(need_targets=False)
    g = _load_graph(config)
    prov = _provenance(config)
    stem = config.input.stem
    if stem.endswith(".edges"):
        stem = stem[: -len(".edges")]
    edges_path = config.out_dir / f"{stem}.edges.tsv"
    config.out_dir.mkdir(parents=True, exist_ok=True)
    write_edge_list(g, edges_path)
    meta = {
        "provenance": prov,
        "graph_meta": export.to_jsonable(dict(g.meta)),
        "nodes": g.n,
        "edges": g.edge_count,
    }
    export.write_json_atomic(config.out_dir / f"{stem}.ingest.json", meta)
    print(f"ingested {config.input}: n={g.n} m={g.edge_count} -> {edges_path}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _config_from_args(args)
        if args.command == "solve":
            return cmd_solve(config)
        if args.command == "compare":
            return cmd_compare(config)
        if args.command == "ingest":
            return cmd_ingest(config)
        raise ValueError(f"unknown command {args.command!r}")
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (GraphIngestError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
