"""Command-line evaluation toolkit over session logs and questionnaire CSVs.

Subcommands: ``tct`` (session-log JSON), ``ttest``/``dz`` (CSV with columns
a,b), ``rtlx`` (CSV with the six subscale columns), ``umux`` (CSV with pu,peu),
``wsci`` (CSV, one row per subject, one column per condition). CSV inputs have
one header row. Output is aligned ``key = value`` lines in a fixed order.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

from bladecas.stats import (
    EvalError,
    PairedSample,
    TlxResponse,
    UmuxResponse,
    cohens_dz,
    paired_t_test,
    rtlx,
    tct_summary,
    umux_lite,
    within_subject_ci,
)


def _print_aligned(pairs: list[tuple[str, str]]) -> None:
    width = max(len(k) for k, _ in pairs)
    for key, value in pairs:
        print(f"{key.ljust(width)} = {value}")


def _read_csv(path, expected_cols: int | None = None) -> list[list[float]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EvalError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if expected_cols is not None and len(row) != expected_cols:
                raise EvalError(f"{path}:{lineno}: expected {expected_cols} columns, "
                                f"got {len(row)}")
            if len(row) != len(header):
                raise EvalError(f"{path}:{lineno}: row width differs from header")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise EvalError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise EvalError(f"{path}: no data rows")
    return rows


def cmd_tct(args) -> None:
    with open(args.log_file, "r", encoding="utf-8") as fh:
        log = json.load(fh)
    out = tct_summary(log)
    pairs = [(f"tct_{b['serial']}_s", f"{b['tct_s']:.3f}") for b in out["blades"]]
    pairs += [
        ("tct_total_s", f"{out['total_s']:.3f}"),
        ("tct_mean_s", f"{out['mean_s']:.3f}"),
        ("tct_sd_s", f"{out['sd_s']:.3f}"),
    ]
    for action_id in range(1, 7):
        pairs.append((f"action{action_id}_total_s",
                      f"{out['action_totals_s'][action_id]:.3f}"))
    for b in out["blades"]:
        pairs.append((f"action3_skipped_{b['serial']}",
                      str(b["action3_skipped"]).lower()))
        pairs.append((f"action4_skipped_{b['serial']}",
                      str(b["action4_skipped"]).lower()))
    _print_aligned(pairs)


def _paired_sample(path) -> PairedSample:
    rows = _read_csv(path, expected_cols=2)
    return PairedSample(tuple(r[0] for r in rows), tuple(r[1] for r in rows))


def cmd_ttest(args) -> None:
    t, df, p = paired_t_test(_paired_sample(args.csv))
    _print_aligned([
        ("t", f"{t:.6f}"),
        ("df", str(df)),
        ("p_two_tailed", f"{p:.6f}"),
    ])


def cmd_dz(args) -> None:
    sample = _paired_sample(args.csv)
    dz = cohens_dz(sample)
    t, _, _ = paired_t_test(sample)
    _print_aligned([
        ("dz", f"{dz:.6f}"),
        ("t_over_sqrt_n", f"{t / math.sqrt(sample.n):.6f}"),
        ("n", str(sample.n)),
    ])


def cmd_rtlx(args) -> None:
    rows = _read_csv(args.csv, expected_cols=6)
    scores = [rtlx(TlxResponse(*row)) for row in rows]
    pairs = [(f"rtlx_{i + 1}", f"{score:.3f}") for i, score in enumerate(scores)]
    pairs.append(("rtlx_mean", f"{sum(scores) / len(scores):.3f}"))
    _print_aligned(pairs)


def cmd_umux(args) -> None:
    rows = _read_csv(args.csv, expected_cols=2)
    scores = [umux_lite(UmuxResponse(*row)) for row in rows]
    pairs = [(f"umux_lite_{i + 1}", f"{score:.3f}") for i, score in enumerate(scores)]
    pairs.append(("umux_lite_mean", f"{sum(scores) / len(scores):.3f}"))
    _print_aligned(pairs)


def cmd_wsci(args) -> None:
    rows = _read_csv(args.csv)
    out = within_subject_ci(rows, level=args.level)
    pairs = [("level", f"{args.level:g}")]
    for i, (mean, half) in enumerate(out, start=1):
        pairs.append((f"condition{i}_mean", f"{mean:.6f}"))
        pairs.append((f"condition{i}_ci_half_width", f"{half:.6f}"))
    _print_aligned(pairs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eval", description="Repair-study evaluation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tct", help="summarize a session log (JSON)")
    p.add_argument("log_file")
    p.set_defaults(func=cmd_tct)

    p = sub.add_parser("ttest", help="two-tailed paired t-test (CSV: a,b)")
    p.add_argument("csv")
    p.set_defaults(func=cmd_ttest)

    p = sub.add_parser("dz", help="paired effect size (CSV: a,b)")
    p.add_argument("csv")
    p.set_defaults(func=cmd_dz)

    p = sub.add_parser("rtlx", help="task-load scores (CSV: 6 subscales)")
    p.add_argument("csv")
    p.set_defaults(func=cmd_rtlx)

    p = sub.add_parser("umux", help="usability scores (CSV: pu,peu)")
    p.add_argument("csv")
    p.set_defaults(func=cmd_umux)

    p = sub.add_parser("wsci", help="within-subject CIs (CSV: subjects x conditions)")
    p.add_argument("csv")
    p.add_argument("--level", type=float, default=0.95)
    p.set_defaults(func=cmd_wsci)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (EvalError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
