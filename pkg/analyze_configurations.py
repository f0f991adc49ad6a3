#!/usr/bin/env python3
"""Analyze implementation usage across the configurations of a JSON report"""
import sys
from collections import Counter

import pandas as pd

from emit import parse_report


def configurations_frame(configurations):
    """One row per (configuration, path) with the chosen implementation."""
    rows = []
    for idx, cfg in enumerate(configurations):
        for path, impl in cfg.choices:
            rows.append({"configuration": idx, "path": path, "implementation": impl})
    return pd.DataFrame(rows, columns=["configuration", "path", "implementation"])


def implementation_usage(df):
    """How often each implementation is chosen per path, and its share of the configurations."""
    if df.empty:
        return pd.DataFrame(columns=["path", "implementation", "count", "share"])
    total = df["configuration"].nunique()
    usage = (
        df.groupby(["path", "implementation"])
        .size()
        .reset_index(name="count")
        .sort_values(["path", "count", "implementation"], ascending=[True, False, True])
        .reset_index(drop=True)
    )
    usage["share"] = usage["count"] / total
    return usage


def path_variety(df):
    """Number of distinct implementations seen per path, fewest first."""
    if df.empty:
        return pd.Series(dtype=int)
    return df.groupby("path")["implementation"].nunique().sort_values(kind="stable")


def implementation_pairs(df, path_a, path_b):
    """Counter of (implementation at path_a, implementation at path_b) over configurations."""
    if df.empty:
        return Counter()
    wide = df.pivot(index="configuration", columns="path", values="implementation")
    if path_a not in wide or path_b not in wide:
        return Counter()
    return Counter(zip(wide[path_a].fillna("-"), wide[path_b].fillna("-")))


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: analyze_configurations.py REPORT.json")
        return 3

    with open(argv[0], encoding="utf-8") as fh:
        configurations = parse_report(fh.read())
    df = configurations_frame(configurations)

    print("=== IMPLEMENTATION USAGE ===")
    print(f"Total configurations: {len(configurations)}")
    print(f"Requirement paths: {df['path'].nunique()}")
    print()

    usage = implementation_usage(df)
    for path, group in usage.groupby("path", sort=True):
        print(f"{path}:")
        for _, row in group.iterrows():
            print(f"  {row['count']:4d} ({row['share']:.0%}) {row['implementation']}")

    print()
    print("=== PATHS WITH FEWEST ALTERNATIVES ===")
    for path, count in path_variety(df).head(10).items():
        print(f"{count:2d} implementations: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
