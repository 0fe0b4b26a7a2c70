"""Command-line entry point.

Subcommands: generate (synthetic dataset CSV), stats (distribution
summaries behind the usual imbalance figures), run (execute configured
scenarios), compare (side-by-side metric tables with inflation deltas).
Every run is driven entirely by explicit config and seeds; outputs are
written atomically and never overwritten without --force.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import dataset as ds
from .experiment import (
    ComparisonReport,
    METRIC_KEYS,
    Placement,
    ScenarioResult,
    ScenarioSpec,
    compare_scenarios,
    run_scenario,
)


class CliError(RuntimeError):
    """Fatal command error; the message names the failing stage."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One file that fully determines an experiment."""

    data: dict
    scenarios: tuple[ScenarioSpec, ...]
    out_dir: str

    def __post_init__(self):
        if not self.scenarios:
            raise ValueError("config needs at least one scenario")
        names = [s.name for s in self.scenarios]
        if len(set(names)) != len(names):
            raise ValueError("scenario names must be unique")
        keys = set(self.data)
        if keys not in ({"csv"}, {"csv", "schema"}, {"synthetic"}):
            raise ValueError(
                "data source must be {'csv': path[, 'schema': 'creditcard']} "
                "or {'synthetic': {...}}"
            )

    def to_dict(self) -> dict:
        return {
            "data": self.data,
            "out_dir": self.out_dir,
            "scenarios": [s.to_dict() for s in self.scenarios],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            scenarios = tuple(
                ScenarioSpec.from_dict(s) for s in d["scenarios"]
            )
            return cls(
                data=d["data"],
                scenarios=scenarios,
                out_dir=d.get("out_dir", "results"),
            )
        except KeyError as exc:
            raise ValueError(f"config is missing key {exc}") from exc

    def load_dataset(self) -> ds.TabularDataset:
        if "csv" in self.data:
            schema = None
            if self.data.get("schema") == "creditcard":
                schema = ds.CREDITCARD_SCHEMA
            return ds.load_csv(self.data["csv"], schema=schema)
        return ds.generate_synthetic_imbalanced(**self.data["synthetic"])


def _override_seeds(node, seed: int):
    """Recursively replace every 'seed' key so one flag repins all RNGs."""
    if isinstance(node, dict):
        return {
            k: (seed if k == "seed" else _override_seeds(v, seed))
            for k, v in node.items()
        }
    if isinstance(node, list):
        return [_override_seeds(v, seed) for v in node]
    return node


def _load_config(path: Path, seed_override: int | None) -> ExperimentConfig:
    if not path.exists():
        raise CliError(f"config: no such file: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CliError(f"config: {path} line {exc.lineno}: {exc.msg}") from exc
    if seed_override is not None:
        raw = _override_seeds(raw, seed_override)
    try:
        return ExperimentConfig.from_dict(raw)
    except (ValueError, TypeError) as exc:
        raise CliError(f"config: {path}: {exc}") from exc


def _write_text(path: Path, text: str, force: bool) -> None:
    if path.exists() and not force:
        raise CliError(f"output: {path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2) + "\n"


def cmd_generate(args) -> int:
    seed = args.seed if args.seed_override is None else args.seed_override
    try:
        data = ds.generate_synthetic_imbalanced(
            n_rows=args.n_rows,
            positive_fraction=args.positive_fraction,
            n_features=args.n_features,
            class_separation=args.class_separation,
            seed=seed,
        )
    except ValueError as exc:
        raise CliError(f"generate: {exc}") from exc
    out = Path(args.output)
    if out.exists() and not args.force:
        raise CliError(f"output: {out} exists; pass --force to overwrite")
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_name(out.name + ".tmp")
    ds.save_csv(data, tmp)
    tmp.replace(out)
    counts, fraction = ds.class_distribution(data)
    print(f"wrote {out}: {data.n_rows} rows, {counts[1]} positive ({fraction:.4%})")
    return 0


def cmd_stats(args) -> int:
    schema = ds.CREDITCARD_SCHEMA if args.schema == "creditcard" else None
    try:
        data = ds.load_csv(args.input, schema=schema)
    except (OSError, ValueError) as exc:
        raise CliError(f"data loading: {exc}") from exc
    out_dir = Path(args.out_dir)

    counts, fraction = ds.class_distribution(data)
    _write_text(
        out_dir / "class_distribution.json",
        _json_text(
            {
                "counts": {str(k): v for k, v in counts.items()},
                "minority_fraction": fraction,
            }
        ),
        args.force,
    )

    column = args.column
    if column is None:
        column = "Amount" if "Amount" in data.feature_names else data.feature_names[0]
    try:
        summary = ds.amount_summary_by_class(data, column)
    except KeyError as exc:
        raise CliError(f"stats: {exc.args[0]}") from exc
    _write_text(
        out_dir / "amount_summary.json",
        _json_text({"column": column, "by_class": {str(k): v for k, v in summary.items()}}),
        args.force,
    )

    matrix, constant = ds.correlation_matrix(data)
    lines = ["," + ",".join(data.feature_names)]
    for name, row in zip(data.feature_names, matrix):
        lines.append(name + "," + ",".join(repr(v) for v in row.tolist()))
    if constant:
        print(f"note: constant column(s) reported with zero correlation: {', '.join(constant)}")
    _write_text(out_dir / "correlation_matrix.csv", "\n".join(lines) + "\n", args.force)

    print(f"wrote stats for {args.input} to {out_dir}")
    return 0


def cmd_run(args) -> int:
    config = _load_config(Path(args.config), args.seed_override)
    presplit = [
        s.name
        for s in config.scenarios
        if s.placement == Placement.SAMPLING_BEFORE_SPLIT
    ]
    if presplit and not args.allow_presplit_sampling:
        raise CliError(
            "config: scenario(s) "
            + ", ".join(presplit)
            + " sample before the split, which leaks test information; "
            "pass --allow-presplit-sampling to run them anyway"
        )

    try:
        data = config.load_dataset()
    except Exception as exc:
        raise CliError(f"data loading: {exc}") from exc

    out_dir = Path(args.out_dir) if args.out_dir else Path(config.out_dir)
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        futures = [
            (spec, pool.submit(run_scenario, data, spec))
            for spec in config.scenarios
        ]
        for spec, future in futures:
            try:
                result = future.result()
            except Exception as exc:
                raise CliError(f"scenario '{spec.name}': {exc}") from exc
            path = out_dir / f"{spec.name}-{spec.split.seed}.result.json"
            _write_text(path, _json_text(result.to_dict()), args.force)
            m = result.metrics
            print(
                f"{spec.name}: f1={m.f1:.4f} recall={m.recall:.4f} "
                f"precision={m.precision:.4f} auc={m.auc:.4f} "
                f"verdict={result.leakage.verdict.value} -> {path}"
            )
    return 0


def _format_table(report: ComparisonReport) -> str:
    headers = ["scenario", "placement"] + list(METRIC_KEYS) + ["verdict"]
    rows = []
    for entry in report.table:
        row = [entry["name"], entry["placement"]]
        for key in METRIC_KEYS:
            value = entry[key]
            row.append(f"{value:.4f}" if key == "mcc" else f"{value * 100:.2f}%")
        row.append(entry["verdict"])
        rows.append(row)
    widths = [
        max(len(headers[c]), *(len(r[c]) for r in rows)) for c in range(len(headers))
    ]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    if report.inflation:
        lines.append("")
        lines.append("inflation (pre-split minus post-split, percentage points):")
        for entry in report.inflation:
            deltas = ", ".join(
                f"{k}={entry['deltas'][k] * 100:+.2f}" for k in METRIC_KEYS
            )
            lines.append(f"  {entry['minuend']} vs {entry['subtrahend']}: {deltas}")
    if report.leaky_outperforming_clean:
        lines.append("")
        lines.append(
            "warning: leaky scenario(s) outperform every clean one on f1: "
            + ", ".join(report.leaky_outperforming_clean)
        )
    lines.append("")
    lines.append("all scores are positive-class metrics, not macro averages")
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    results = []
    for path in args.results:
        p = Path(path)
        if not p.exists():
            raise CliError(f"compare: no such result file: {p}")
        try:
            results.append(ScenarioResult.from_dict(json.loads(p.read_text(encoding="utf-8"))))
        except (ValueError, KeyError) as exc:
            raise CliError(f"compare: {p}: {exc}") from exc
    try:
        report = compare_scenarios(results)
    except ValueError as exc:
        raise CliError(f"compare: {exc}") from exc
    out_dir = Path(args.out_dir)
    text = _format_table(report)
    _write_text(out_dir / "comparison.json", _json_text(report.to_dict()), args.force)
    _write_text(out_dir / "comparison.txt", text, args.force)
    print(text, end="")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument(
        "--seed-override",
        type=int,
        default=None,
        help="replace every configured seed with this value",
    )
    shared.add_argument("--out-dir", default=None, help="directory for output files")
    shared.add_argument(
        "--force", action="store_true", help="overwrite existing output files"
    )
    shared.add_argument(
        "--allow-presplit-sampling",
        action="store_true",
        help="acknowledge that sampling before the split leaks and run anyway",
    )
    shared.add_argument(
        "--workers", type=int, default=1, help="concurrent scenario workers"
    )

    parser = argparse.ArgumentParser(
        prog="leakguard",
        description="leakage-guarded experiments for imbalanced binary classification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", parents=[shared], help="write a synthetic dataset CSV")
    p_gen.add_argument("--n-rows", type=int, default=20000)
    p_gen.add_argument("--positive-fraction", type=float, default=0.01)
    p_gen.add_argument("--n-features", type=int, default=10)
    p_gen.add_argument("--class-separation", type=float, default=1.2)
    p_gen.add_argument("--seed", type=int, default=42)
    p_gen.add_argument("--output", required=True, help="destination CSV path")
    p_gen.set_defaults(func=cmd_generate)

    p_stats = sub.add_parser(
        "stats", parents=[shared], help="write class/amount/correlation summaries"
    )
    p_stats.add_argument("--input", required=True, help="source CSV path")
    p_stats.add_argument(
        "--schema", choices=["creditcard"], default=None, help="enforce a known schema"
    )
    p_stats.add_argument(
        "--column", default=None, help="column for the per-class summary"
    )
    p_stats.set_defaults(func=cmd_stats)

    p_run = sub.add_parser("run", parents=[shared], help="run all configured scenarios")
    p_run.add_argument("config", help="experiment config JSON path")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser(
        "compare", parents=[shared], help="compare scenario result files"
    )
    p_cmp.add_argument("results", nargs="+", help="*.result.json paths")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.out_dir is None and args.command in ("stats", "compare"):
        args.out_dir = "."
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive catch-all
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
