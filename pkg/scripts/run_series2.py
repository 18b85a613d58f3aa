#!/usr/bin/env python
"""TTL / link-availability series: per-TTL charts and TTL 4 vs 7 comparisons."""

import argparse
from pathlib import Path

from flood_anycast.config import SimulationConfig
from flood_anycast.experiment import series2, sweep, write_outputs
from flood_anycast.plotting import plot

METRICS = ["relative_traffic", "response_ratio", "duplicate_ratio", "avg_hops", "avg_response_time"]


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="results/series2")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--requests", type=int, default=2000)
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    base = SimulationConfig(requests=args.requests, seed=args.master_seed)
    spec = series2(replicates=tuple(range(args.seeds)))
    paths = write_outputs(sweep(spec, base, workers=args.workers), spec, base, args.out)
    out = Path(args.out)
    fig = 6
    for ttl in (4, 7):
        for metric in METRICS:
            plot(paths["aggregate"], metric, "link_availability", out / f"fig{fig:02d}_{metric}_ttl{ttl}.svg",
                 {"ttl": ttl}, title=f"{metric} versus radius, TTL={ttl}")
            fig += 1
    for metric in METRICS:
        plot(paths["aggregate"], metric, "link_availability,ttl", out / f"fig{fig:02d}_{metric}_ttl4_vs_7.svg")
        fig += 1
    print(f"charts in {out}")


if __name__ == "__main__":
    main()
