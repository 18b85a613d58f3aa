"""Parameter sweeps, multi-seed replication and CSV aggregation."""

from __future__ import annotations

import csv
import itertools
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import SimulationConfig
from .engine import run
from .metrics import DUPLICATE_DENOMINATOR, MetricsRecord

RADII = (30.0, 60.0, 90.0, 120.0, 150.0, 180.0, 210.0)
DEFAULT_REPLICATES = 5

COORD_COLUMNS = ("radius_m", "ttl", "link_availability", "vmax_kmh", "p_change")
METRIC_COLUMNS = ("response_ratio", "avg_hops", "relative_traffic", "avg_response_time_ms", "duplicate_ratio")
RUN_COLUMNS = COORD_COLUMNS + ("seed", "requests") + METRIC_COLUMNS

_RECORD_FIELD = {
    "response_ratio": "response_ratio",
    "avg_hops": "avg_hops",
    "relative_traffic": "relative_traffic",
    "avg_response_time_ms": "avg_response_time",
    "duplicate_ratio": "duplicate_ratio",
}


class SweepError(RuntimeError):
    def __init__(self, config: SimulationConfig, cause: BaseException):
        self.config = config
        self.cause = cause
        super().__init__(f"run failed for seed={config.seed} config={config!r}: {cause!r}")


@dataclass(frozen=True)
class SweepSpec:
    radii: tuple = RADII
    ttls: tuple = (7,)
    availabilities: tuple = (0.7,)
    vmax_kmh: tuple = (5.0,)
    p_values: tuple = (0.0,)
    replicates: tuple = tuple(range(DEFAULT_REPLICATES))
    requests: Optional[int] = None  # None: keep the base config's value

    def cells(self):
        return list(itertools.product(self.radii, self.ttls, self.availabilities, self.vmax_kmh, self.p_values))

    def __len__(self):
        return len(self.cells()) * len(self.replicates)


def series1(**kw) -> SweepSpec:
    """Speed series: l = 0.7, TTL 7, p = 0, v_max in {5, 30, 50} km/h."""
    return SweepSpec(ttls=(7,), availabilities=(0.7,), vmax_kmh=(5.0, 30.0, 50.0), p_values=(0.0,), **kw)


def series2(**kw) -> SweepSpec:
    """TTL / availability series: TTL in {4, 7}, five availabilities, 5 km/h."""
    return SweepSpec(ttls=(4, 7), availabilities=(0.05, 0.1, 0.3, 0.5, 0.7), vmax_kmh=(5.0,), p_values=(0.0,), **kw)


def derive_seed(master_seed: int, replicate: int) -> int:
    """64-bit run seed from the master seed and the replicate index.

    The other run coordinates are deliberately left out so every cell of a
    sweep sees the same placements and link draws for a given replicate.
    """
    words = np.random.SeedSequence([master_seed, replicate]).generate_state(2, dtype=np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


def run_configs(spec: SweepSpec, base: SimulationConfig) -> list[SimulationConfig]:
    configs = []
    for radius, ttl, l, vmax, p in spec.cells():
        for rep in spec.replicates:
            cfg = replace(
                base,
                radius=float(radius),
                ttl=int(ttl),
                link_availability=float(l),
                vmax_kmh=float(vmax),
                direction_change_p=float(p),
                seed=derive_seed(base.seed, rep),
                requests=spec.requests or base.requests,
            )
            configs.append(cfg)
    return configs


def _run_one(config: SimulationConfig) -> MetricsRecord:
    try:
        return run(config)
    except Exception as exc:  # re-raised with the exact config for reproduction
        raise SweepError(config, exc) from exc


def execute(configs: Sequence[SimulationConfig], workers: int = 1) -> list[MetricsRecord]:
    if workers <= 1:
        return [_run_one(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, configs, chunksize=1))


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_row(config: SimulationConfig, record: MetricsRecord) -> dict:
    row = {
        "radius_m": config.radius,
        "ttl": config.ttl,
        "link_availability": config.link_availability,
        "vmax_kmh": config.vmax_kmh,
        "p_change": config.direction_change_p,
        "seed": config.seed,
        "requests": config.requests,
    }
    for col, attr in _RECORD_FIELD.items():
        row[col] = getattr(record, attr)
    return row


def aggregate(rows: Sequence[dict]) -> list[dict]:
    """Mean and sample standard deviation per cell, over defined values only."""
    cells: dict[tuple, list[dict]] = {}
    for row in rows:
        cells.setdefault(tuple(row[c] for c in COORD_COLUMNS), []).append(row)
    out = []
    for key, members in cells.items():
        agg = dict(zip(COORD_COLUMNS, key))
        agg["n"] = len(members)
        for col in METRIC_COLUMNS:
            values = [m[col] for m in members if m[col] is not None]
            agg[f"{col}_n"] = len(values)
            agg[f"{col}_mean"] = statistics.fmean(values) if values else None
            agg[f"{col}_std"] = statistics.stdev(values) if len(values) > 1 else None
        out.append(agg)
    return out


def aggregate_columns() -> list[str]:
    cols = list(COORD_COLUMNS) + ["n"]
    for col in METRIC_COLUMNS:
        cols += [f"{col}_n", f"{col}_mean", f"{col}_std"]
    return cols


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row[c]) for c in columns])


def _parse_cell(col: str, raw: str):
    if raw == "":
        return None
    if col in ("ttl", "seed", "requests", "n") or col.endswith("_n"):
        return int(raw)
    return float(raw)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: _parse_cell(k, v) for k, v in row.items()} for row in csv.DictReader(fh)]


@dataclass
class SweepResult:
    configs: list
    records: list
    rows: list
    aggregate: list


def sweep(spec: SweepSpec, base: SimulationConfig, workers: int = 1) -> SweepResult:
    configs = run_configs(spec, base)
    records = execute(configs, workers)
    rows = [run_row(c, r) for c, r in zip(configs, records)]
    return SweepResult(configs, records, rows, aggregate(rows))


def write_outputs(result: SweepResult, spec: SweepSpec, base: SimulationConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"runs": out / "runs.csv", "aggregate": out / "aggregate.csv", "meta": out / "meta.json"}
    write_csv(paths["runs"], RUN_COLUMNS, result.rows)
    write_csv(paths["aggregate"], aggregate_columns(), result.aggregate)
    meta = {
        "master_seed": base.seed,
        "spec": asdict(spec),
        "base_config": {k: v for k, v in asdict(base).items() if k != "seed"},
        "duplicate_ratio_denominator": DUPLICATE_DENOMINATOR,
        "relative_traffic_counts": "request retransmissions + reply transmissions by non-source nodes, per request sent",
        "std": "sample standard deviation (n - 1)",
    }
    paths["meta"].write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return paths


def cell_means(rows: Sequence[dict], metric: str, **where) -> dict:
    """Seed-mean of ``metric`` per radius among rows matching ``where``."""
    by_radius: dict[float, list] = {}
    for row in rows:
        if all(row[k] == v for k, v in where.items()):
            by_radius.setdefault(row["radius_m"], [])
            if row[metric] is not None:
                by_radius[row["radius_m"]].append(row[metric])
    return {r: (statistics.fmean(v) if v else math.nan) for r, v in sorted(by_radius.items())}
