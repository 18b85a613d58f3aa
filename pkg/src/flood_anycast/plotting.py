"""Metric-versus-radius line charts from an aggregate CSV."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiment import COORD_COLUMNS, METRIC_COLUMNS, read_csv  # noqa: E402

METRIC_ALIASES = {"avg_response_time": "avg_response_time_ms"}
GROUP_ALIASES = {"vmax": "vmax_kmh", "l": "link_availability", "p": "p_change", "radius": "radius_m"}
GROUP_KEYS = tuple(c for c in COORD_COLUMNS if c != "radius_m")

LABELS = {
    "response_ratio": "Response ratio",
    "avg_hops": "Average number of hops",
    "relative_traffic": "Relative traffic",
    "avg_response_time_ms": "Average response time, ms",
    "duplicate_ratio": "Duplicate ratio",
    "vmax_kmh": "Vmax (km/h)",
    "link_availability": "l",
    "ttl": "TTL",
    "p_change": "p",
}


class PlotError(ValueError):
    """Bad plot request (unknown metric or key, empty input)."""


def resolve_metric(name: str) -> str:
    name = METRIC_ALIASES.get(name, name)
    if name not in METRIC_COLUMNS:
        raise PlotError(f"unknown metric '{name}'; valid: {', '.join(METRIC_COLUMNS)}")
    return name


def resolve_group(spec: str) -> tuple[str, ...]:
    keys = []
    for part in spec.split(","):
        key = GROUP_ALIASES.get(part.strip(), part.strip())
        if key not in GROUP_KEYS:
            raise PlotError(f"unknown group key '{part}'; valid: {', '.join(GROUP_KEYS)}")
        keys.append(key)
    return tuple(keys)


def parse_filters(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        key = GROUP_ALIASES.get(key.strip(), key.strip())
        if not sep or key not in COORD_COLUMNS:
            raise PlotError(f"bad filter '{item}'; use key=value with key in {', '.join(COORD_COLUMNS)}")
        out[key] = int(value) if key == "ttl" else float(value)
    return out


def plot(aggregate_csv, metric: str, group: str, out_path, filters=None, title=None) -> Path:
    """Write one SVG chart: x = radius, one polyline per group value."""
    metric = resolve_metric(metric)
    keys = resolve_group(group)
    where = parse_filters(filters) if not isinstance(filters, dict) else filters
    rows = [r for r in read_csv(aggregate_csv) if all(r[k] == v for k, v in where.items())]
    if not rows:
        raise PlotError(f"no rows to plot in {aggregate_csv} (filters: {where or 'none'})")

    lines: dict[tuple, list] = {}
    for row in rows:
        lines.setdefault(tuple(row[k] for k in keys), []).append(row)
    for members in lines.values():
        radii = [r["radius_m"] for r in members]
        if len(set(radii)) != len(radii):
            others = [c for c in GROUP_KEYS if c not in keys and len({r[c] for r in members}) > 1]
            raise PlotError(f"several rows per radius; add {others} to --group or fix them with --filter")

    plt.rcParams["svg.hashsalt"] = "flood-anycast"
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    markers = "osD^vP*X"
    for i, (value, members) in enumerate(sorted(lines.items())):
        members = sorted(members, key=lambda r: r["radius_m"])
        pts = [(r["radius_m"], r[f"{metric}_mean"]) for r in members if r[f"{metric}_mean"] is not None]
        if not pts:
            continue
        label = ", ".join(f"{LABELS.get(k, k)}={v:g}" for k, v in zip(keys, value))
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker=markers[i % len(markers)], label=label)
    ax.set_xlabel("Transmission radius, m")
    ax.set_ylabel(LABELS[metric])
    ax.set_title(title or f"{LABELS[metric]} versus transmission radius")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out
