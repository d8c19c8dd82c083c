"""Plot stage-0 safety curves from a run's summary.csv.

One line per ambiguity radius; larger radii sit pointwise below smaller ones.
"""

import argparse
import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("summary", help="summary.csv produced by a run")
    parser.add_argument("--out", default="summary.png", help="output image path")
    args = parser.parse_args()

    curves: dict[float, list[tuple[float, float]]] = defaultdict(list)
    with open(args.summary, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["epsilon", "x", "v0"]:
            print(f"unexpected columns {reader.fieldnames} in {args.summary}",
                  file=sys.stderr)
            return 2
        for row in reader:
            curves[float(row["epsilon"])].append((float(row["x"]), float(row["v0"])))

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for eps in sorted(curves):
        points = sorted(curves[eps])
        ax.plot([x for x, _ in points], [v for _, v in points],
                marker=".", label=f"eps = {eps:g}")
    ax.set_xlabel("temperature x")
    ax.set_ylabel("stage-0 safety value")
    ax.set_ylim(-0.05, 1.05)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
