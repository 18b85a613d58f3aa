#!/usr/bin/env python
"""Speed series: all five metrics versus radius for v_max in {5, 30, 50} km/h."""

import argparse
from pathlib import Path

from flood_anycast.config import SimulationConfig
from flood_anycast.experiment import series1, sweep, write_outputs
from flood_anycast.plotting import plot

METRICS = ["relative_traffic", "response_ratio", "duplicate_ratio", "avg_hops", "avg_response_time"]


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="results/series1")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--requests", type=int, default=2000)
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    base = SimulationConfig(requests=args.requests, seed=args.master_seed)
    spec = series1(replicates=tuple(range(args.seeds)))
    paths = write_outputs(sweep(spec, base, workers=args.workers), spec, base, args.out)
    for i, metric in enumerate(METRICS, start=1):
        svg = plot(paths["aggregate"], metric, "vmax_kmh", Path(args.out) / f"fig{i:02d}_{metric}.svg")
        print(svg)


if __name__ == "__main__":
    main()
