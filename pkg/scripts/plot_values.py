"""Plot value functions and policies from a ``solve`` output directory.

Needs matplotlib (``pip install -e .[plot]``). Not used by the tests.

Usage: python3 scripts/plot_values.py out/values.csv [--png figure.png]
"""

from __future__ import annotations

import argparse
import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read(path: str):
    values, policies = defaultdict(list), defaultdict(list)
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            t, x = int(row["timestep"]), float(row["x"])
            values[t].append((x, float(row["value"])))
            if row["policy_action"]:
                policies[t].append((x, float(row["policy_action"])))
    return values, policies


def main() -> None:
    p = argparse.ArgumentParser(description="plot solve output")
    p.add_argument("values_csv")
    p.add_argument("--png", default="values.png")
    args = p.parse_args()
    values, policies = read(args.values_csv)
    fig, (ax_v, ax_u) = plt.subplots(1, 2, figsize=(10, 4))
    for t in sorted(values):
        xs, ys = zip(*values[t])
        ax_v.plot(xs, ys, label=f"i={t}")
    for t in sorted(policies):
        xs, us = zip(*policies[t])
        ax_u.plot(xs, us, label=f"i={t}")
    ax_v.set(xlabel="x", ylabel="cost-to-go")
    ax_u.set(xlabel="x", ylabel="action u")
    if len(values) <= 10:
        ax_v.legend()
        ax_u.legend()
    fig.tight_layout()
    fig.savefig(args.png, dpi=120)
    print(f"wrote {args.png}")


if __name__ == "__main__":
    main()
