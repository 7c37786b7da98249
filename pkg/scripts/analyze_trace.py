#!/usr/bin/env python3
"""
Summarize outer-iteration trace CSVs written by `gtare.py solve --trace`.

Usage:
    python scripts/analyze_trace.py trace.csv
    python scripts/analyze_trace.py --compare trace_a.csv trace_b.csv
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np
import pandas as pd

EIG_FLOOR = -1e-8
SMALL_Z = 1e-3


def _eig_columns(frame: pd.DataFrame, prefix: str) -> list:
    return [c for c in frame.columns if c.startswith(prefix)]


def summarize_trace(frame: pd.DataFrame) -> dict:
    """Convergence statistics of one trace."""
    z_cols = _eig_columns(frame, "z_eig_")
    m_cols = _eig_columns(frame, "m_eig_")
    z_norm = frame["z_norm"].to_numpy()

    ratios = z_norm[1:] / np.where(z_norm[:-1] > 0, z_norm[:-1], np.nan)
    ratios = ratios[np.isfinite(ratios)]
    small = frame.loc[frame[z_cols].max(axis=1) < SMALL_Z, "k"] if z_cols else pd.Series(dtype=int)
    later = frame[frame["k"] >= 1]

    def column_max(name: str) -> float:
        if name not in frame.columns or frame[name].isna().all():
            return math.nan
        return float(frame[name].max())

    return {
        'records': int(len(frame)),
        'final_z_norm': float(z_norm[-1]) if len(z_norm) else math.nan,
        'final_residual': float(frame["residual_norm"].iloc[-1]) if len(frame) else math.nan,
        'min_z_eig': float(frame[z_cols].min().min()) if z_cols else math.nan,
        'min_m_eig': float(later[m_cols].min().min()) if m_cols and len(later) else math.nan,
        'first_small_k': int(small.iloc[0]) if len(small) else None,
        'median_ratio': float(np.median(ratios)) if len(ratios) else math.nan,
        'newton_iters': int(frame["newton_iters"].sum()) if "newton_iters" in frame.columns else None,
        'worst_c_k_defect': column_max("c_k_defect"),
        'worst_recursion_deviation': column_max("recursion_deviation"),
        'min_bound_slack': float(frame["bound_slack"].min()) if "bound_slack" in frame.columns and not frame["bound_slack"].isna().all() else math.nan,
    }


def print_report(stats: dict, title: str = "Trace Summary"):
    print("=" * 80)
    print(f" {title}")
    print("=" * 80)
    print()

    print("CONVERGENCE")
    print("-" * 80)
    print(f"  Outer records:       {stats['records']}")
    print(f"  Final |Z|:           {stats['final_z_norm']:.3e}")
    print(f"  Final |G(P + Z)|:    {stats['final_residual']:.3e}")
    print(f"  Median |Z| ratio:    {stats['median_ratio']:.3f}")
    if stats['newton_iters'] is not None:
        print(f"  Newton iterations:   {stats['newton_iters']}")
    first = stats['first_small_k']
    print(f"  max eig Z < {SMALL_Z:g}:   {'k = ' + str(first) if first is not None else 'never'}")
    print()

    print("INVARIANTS")
    print("-" * 80)
    checks = [
        ("Z_k >= 0", stats['min_z_eig'], stats['min_z_eig'] >= EIG_FLOOR),
        ("M_k >= 0 (k >= 1)", stats['min_m_eig'], math.isnan(stats['min_m_eig']) or stats['min_m_eig'] >= EIG_FLOOR),
    ]
    for label, value, ok in checks:
        print(f"  {label:<22} min eig {value:>11.3e}  {'✓' if ok else '✗'}")
    print(f"  {'c_k defect':<22} worst   {stats['worst_c_k_defect']:>11.3e}")
    print(f"  {'recursion deviation':<22} worst   {stats['worst_recursion_deviation']:>11.3e}")
    if not math.isnan(stats['min_bound_slack']):
        ok = stats['min_bound_slack'] >= EIG_FLOOR
        print(f"  {'certificate bound':<22} min     {stats['min_bound_slack']:>11.3e}  {'✓' if ok else '✗'}")
    print("=" * 80)
    print()


def compare_reports(stats1: dict, stats2: dict, label1: str, label2: str):
    print("=" * 80)
    print(f" COMPARISON: {label1} vs {label2}")
    print("=" * 80)
    print()
    print(f"{'Metric':<25} {label1:<20} {label2:<20}")
    print("-" * 80)
    print(f"{'Outer records':<25} {stats1['records']:<20} {stats2['records']:<20}")
    print(f"{'Final |Z|':<25} {stats1['final_z_norm']:<20.3e} {stats2['final_z_norm']:<20.3e}")
    print(f"{'Final residual':<25} {stats1['final_residual']:<20.3e} {stats2['final_residual']:<20.3e}")
    print(f"{'Median |Z| ratio':<25} {stats1['median_ratio']:<20.3f} {stats2['median_ratio']:<20.3f}")
    if stats1['newton_iters'] is not None and stats2['newton_iters'] is not None:
        print(f"{'Newton iterations':<25} {stats1['newton_iters']:<20} {stats2['newton_iters']:<20}")
    print()

    diff = stats2['records'] - stats1['records']
    if diff < 0:
        print(f"  {label2} needs {-diff} fewer outer records")
    elif diff > 0:
        print(f"  {label2} needs {diff} more outer records")
    else:
        print("  Same number of outer records")
    print("=" * 80)
    print()


def main():
    parser = argparse.ArgumentParser(description="Analyze GTARE outer-iteration traces")
    parser.add_argument("trace", nargs="?", help="Path to a trace CSV")
    parser.add_argument("--compare", nargs=2, metavar=("CSV1", "CSV2"), help="Compare two traces")
    args = parser.parse_args()

    try:
        if args.compare:
            path1, path2 = Path(args.compare[0]), Path(args.compare[1])
            stats1 = summarize_trace(pd.read_csv(path1))
            stats2 = summarize_trace(pd.read_csv(path2))
            compare_reports(stats1, stats2, path1.stem, path2.stem)
        elif args.trace:
            path = Path(args.trace)
            print_report(summarize_trace(pd.read_csv(path)), f"Trace: {path.name}")
        else:
            parser.print_help()
            sys.exit(1)
    except Exception as e:
        print(f"Error: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
