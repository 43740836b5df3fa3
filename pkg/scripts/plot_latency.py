#!/usr/bin/env python3
"""Plot a latency dump produced by `tiersim run --dump-latencies`.

With matplotlib installed, writes a per-class latency histogram PNG;
without it, prints a text histogram so the dump stays usable anywhere.

usage: plot_latency.py dump.csv [out.png]
"""

import csv
import sys
from collections import defaultdict


def load(path):
    per_class = defaultdict(list)
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            per_class[row["class"]].append(
                int(row["t_complete_ps"]) - int(row["t_inject_ps"]))
    return per_class


def text_histogram(per_class, buckets=30):
    for klass, samples in sorted(per_class.items()):
        samples.sort()
        lo, hi = samples[0], samples[-1]
        width = max(1, (hi - lo) // buckets + 1)
        counts = defaultdict(int)
        for s in samples:
            counts[(s - lo) // width] += 1
        peak = max(counts.values())
        print(f"\n{klass}: n={len(samples)} min={lo} max={hi} "
              f"mean={sum(samples) / len(samples):.0f} (ps)")
        for b in sorted(counts):
            bar = "#" * max(1, counts[b] * 50 // peak)
            print(f"  {lo + b * width:>12} ps | {bar} {counts[b]}")


def main():
    if len(sys.argv) < 2:
        print(__doc__)
        return 2
    per_class = load(sys.argv[1])
    if not per_class:
        print("no samples in dump")
        return 1
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        text_histogram(per_class)
        return 0
    fig, axes = plt.subplots(1, len(per_class), figsize=(6 * len(per_class), 4))
    if len(per_class) == 1:
        axes = [axes]
    for ax, (klass, samples) in zip(axes, sorted(per_class.items())):
        ax.hist(samples, bins=50)
        ax.set_title(f"{klass} latency")
        ax.set_xlabel("ps")
        ax.set_ylabel("samples")
    out = sys.argv[2] if len(sys.argv) > 2 else "latency.png"
    fig.tight_layout()
    fig.savefig(out)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
