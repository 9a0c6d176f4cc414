"""Command-line surface: configuration loading, stage execution, report emission.

Exit codes: 0 success, 1 input/configuration error, 2 runtime/training failure.
Every run writes a resolved-config snapshot (config_resolved.json) next to its
outputs. FACTORBENCH_OUTPUT_ROOT, when set, prefixes relative output dirs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from pathlib import Path

from .errors import InputError
from .harness.config import ExperimentConfig, apply_overrides
from .harness.report import EvalReport
from .harness.runner import run_experiment

OUTPUT_ROOT_ENV = "FACTORBENCH_OUTPUT_ROOT"

_VERB_STAGE = {
    "datagen": "data",
    "train-gan": "generator",
    "train-baseline": "baseline",
    "scan": "scan",
    "intervene": "interventions",
    "evaluate": "settings",
    "acai": "acai",
    "run-all": None,
}

TABLE_COLUMNS = ("Setting", "Interv.", "Acc", "Acc_gap", "Acc_min", "CAI_0.5", "CAI_0.75")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="factorbench", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    for verb in _VERB_STAGE:
        p = sub.add_parser(verb, help=f"run the pipeline through its {_VERB_STAGE[verb] or 'final'} stage")
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="dotted-path config override, value parsed as JSON")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        p.add_argument("--fresh", action="store_true", help="ignore existing stage checkpoints")

    p = sub.add_parser("report", help="regenerate tables/figures from a finished run")
    p.add_argument("--from", dest="from_dir", required=True, help="directory holding report.json")
    p.add_argument("--out", default=None, help="emit into this directory (defaults to --from)")
    return parser


def _resolve_config(args) -> ExperimentConfig:
    path = Path(args.config)
    if not path.exists():
        raise InputError(f"config file not found: {path}")
    with open(path) as f:
        raw = json.load(f)
    raw = apply_overrides(raw, args.overrides)
    if args.out is not None:
        raw["output_dir"] = args.out
    if args.seed is not None:
        raw["seed"] = args.seed
    config = ExperimentConfig.from_dict(raw)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not Path(config.output_dir).is_absolute():
        from dataclasses import replace

        config = replace(config, output_dir=str(Path(root) / config.output_dir))
    return config


def parse_and_dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage to stderr
        return 0 if exc.code in (0, None) else 1

    try:
        if args.verb == "report":
            report_path = Path(args.from_dir) / "report.json"
            if not report_path.exists():
                raise InputError(f"no report.json under {args.from_dir}")
            report = EvalReport.load(report_path)
            emit_report(report, args.out or args.from_dir)
            return 0
        config = _resolve_config(args)
        run_experiment(config, resume=not args.fresh, until=_VERB_STAGE[args.verb])
        return 0
    except (InputError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime / training failure
        print(f"failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(parse_and_dispatch(sys.argv[1:]))


# ---- report emission ----------------------------------------------------


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _best_mask(rows: list[dict], key: str, higher_better: bool) -> list[bool]:
    vals = [r[key] for r in rows]
    best = max(vals) if higher_better else min(vals)
    return [v == best for v in vals]


def _markdown_section(setting: str, rows: list[dict]) -> list[str]:
    marks = {
        "acc": _best_mask(rows, "acc", True),
        "acc_gap": _best_mask(rows, "acc_gap", False),
        "acc_min": _best_mask(rows, "acc_min", True),
        "cai_05": _best_mask(rows, "cai_05", True),
        "cai_75": _best_mask(rows, "cai_75", True),
    }
    lines = []
    for j, row in enumerate(rows):
        cells = [setting if j == 0 else "", row["name"]]
        for key in ("acc", "acc_gap", "acc_min", "cai_05", "cai_75"):
            text = f"{row[key]:.2f}"
            cells.append(f"**{text}**" if marks[key][j] else text)
        lines.append("| " + " | ".join(cells) + " |")
    return lines


def _emit_code_table(report: EvalReport, code: int, out: Path) -> None:
    sections = [
        ("Unsup. Invariance", report.unsupervised.get(code, [])),
        ("Factor Generalization", report.generalization.get(code, [])),
    ]
    acai_rows = []
    semisup = report.semisupervised
    if semisup:
        acai_rows = [semisup["row"]]
        sections.append(("Semisup. Invariance", acai_rows))

    md = [
        f"## Code {code} (real factor: {report.real_factor})",
        "",
        "| " + " | ".join(TABLE_COLUMNS) + " |",
        "|" + "---|" * len(TABLE_COLUMNS),
    ]
    for setting, rows in sections:
        if rows:
            md.extend(_markdown_section(setting, rows))
    (out / f"table_code{code}.md").write_text("\n".join(md) + "\n")

    with open(out / f"table_code{code}.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(TABLE_COLUMNS)
        for setting, rows in sections:
            for row in rows:
                writer.writerow(
                    [setting, row["name"]]
                    + [_fmt(row[k]) for k in ("acc", "acc_gap", "acc_min", "cai_05", "cai_75")]
                )


def _emit_sensitivity(report: EvalReport, out: Path) -> None:
    ranking = report.sensitivity_ranking
    codes = [str(r["code"]) for r in ranking]
    md = [
        "## Sorted sensitive codes (baseline)",
        "",
        "| Metric | " + " | ".join(f"C{c}" for c in codes) + " |",
        "|" + "---|" * (len(codes) + 1),
        "| Accuracy | " + " | ".join(f"{r['acc']:.2f}" for r in ranking) + " |",
        "| Accuracy Gap | " + " | ".join(f"{r['acc_gap']:.2f}" for r in ranking) + " |",
        "| Min Accuracy | " + " | ".join(f"{r['acc_min']:.2f}" for r in ranking) + " |",
    ]
    (out / "sensitivity.md").write_text("\n".join(md) + "\n")
    with open(out / "sensitivity.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["code", "acc", "acc_gap", "acc_min"])
        for r in ranking:
            writer.writerow([r["code"], _fmt(r["acc"]), _fmt(r["acc_gap"]), _fmt(r["acc_min"])])


def emit_report(report: EvalReport, out_dir: str | Path, generator=None, traversal_seed: int = 0) -> list[Path]:
    """Write per-code markdown/CSV tables and the sensitivity ranking table.

    Emission is a pure function of the report, so regeneration is
    bit-identical. With a generator supplied, traversal montages are also
    rendered; otherwise existing PNGs are left as-is. Incomplete reports emit
    what exists and warn.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if not report.unsupervised and not report.generalization:
        warnings.warn("report holds no completed settings; emitting sensitivity table only")
    if not report.semisupervised:
        warnings.warn("report has no validated-selection row; tables omit the ACAI section")
    for code in report.examined_codes:
        _emit_code_table(report, code, out)
        written += [out / f"table_code{code}.md", out / f"table_code{code}.csv"]
    if report.sensitivity_ranking:
        _emit_sensitivity(report, out)
        written += [out / "sensitivity.md", out / "sensitivity.csv"]
    if generator is not None:
        from .generative.handles import save_montage, traversal_grid

        for code in report.examined_codes:
            grid = traversal_grid(generator, code, 8, 5, seed=traversal_seed)
            path = out / f"traversal_code{code}.png"
            save_montage(grid, path)
            written.append(path)
    return written


def recompute_cai_from_csv(path: str | Path) -> list[dict]:
    """Re-derive CAI from a table CSV's own Acc/Acc_gap columns and the
    baseline row of the same setting block (round-trip check support)."""
    rows = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            rows.append(row)
    by_setting: dict[str, list[dict]] = {}
    for row in rows:
        by_setting.setdefault(row["Setting"], []).append(row)
    out = []
    for setting, block in by_setting.items():
        base = next((r for r in block if r["Interv."] == "Base"), None)
        if base is None:  # ACAI section references the generalization baseline
            base = next(r for r in by_setting["Factor Generalization"] if r["Interv."] == "Base")
        b_acc, b_gap = float(base["Acc"]), float(base["Acc_gap"])
        for r in block:
            acc, gap = float(r["Acc"]), float(r["Acc_gap"])
            out.append(
                {
                    "Setting": setting,
                    "Interv.": r["Interv."],
                    "stored_cai_05": float(r["CAI_0.5"]),
                    "stored_cai_75": float(r["CAI_0.75"]),
                    "recomputed_cai_05": 0.5 * (b_gap - gap) + 0.5 * (acc - b_acc),
                    "recomputed_cai_75": 0.75 * (b_gap - gap) + 0.25 * (acc - b_acc),
                }
            )
    return out


if __name__ == "__main__":
    main()
