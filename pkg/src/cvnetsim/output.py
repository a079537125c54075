"""CSV emission for runs and sweeps.

Numbers are formatted with fixed rules (integers verbatim, floats in
fixed-point with 6 or 4 decimals) so identical runs give
byte-identical files. Nothing time- or host-dependent is written.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .metrics import (
    PACKET_COLUMNS,
    delay_percentiles,
    mean_delay,
    packet_loss_ratio,
    throughput,
    tx_bitrate,
)
from .scenario import RunResult
from .traffic import DELIVERED

FLOW_COLUMNS = [
    "run_id", "flow_id", "dest_node", "sent", "delivered", "lost", "in_flight",
    "loss_pct", "mean_delay_ms", "throughput_kbps", "tx_bitrate_kbps",
]
METRIC_COLUMNS = ["loss_pct", "mean_delay_ms", "throughput_kbps", "tx_bitrate_kbps"]
SUMMARY_COLUMNS = [
    "run_id", "tech", "cv_count", "max_speed_mps", "packet_size", "offered_rate_bps", "seed",
    *METRIC_COLUMNS,
    # extras, not part of the core metric set
    "extra_delay_p50_ms", "extra_delay_p95_ms", "extra_sinr_p5_db",
    "config_sha256", "version",
]
SINR_COLUMNS = ["run_id", "time_ns", "node_id", "sinr_db"]
OUTPUT_FILES = ("packets.csv", "flows.csv", "summary.csv", "sinr.csv")


def fmt(value: Optional[float], digits: int = 6) -> str:
    """Empty for absent values, fixed-point otherwise."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    out = format(value, f".{digits}f")
    return "0." + "0" * digits if out == "-0." + "0" * digits else out


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def packet_rows(result: RunResult):
    for p in result.packets:
        delivered = p.final_status == DELIVERED
        yield (
            result.run_id, p.flow_id, p.seq, p.size, p.created,
            "" if p.tx_first is None else p.tx_first,
            p.rx if delivered else "",
            p.final_status, p.attempts,
            fmt(p.sinr_at_rx, 4) if delivered else "",
        )


def flow_rows(result: RunResult):
    dest = {f.flow_id: f.dest_node for f in result.flows}
    for fid in sorted(result.stats):
        s = result.stats[fid]
        yield (
            result.run_id, fid, dest[fid], s.sent, s.delivered, s.lost, s.in_flight,
            fmt(packet_loss_ratio(s)), fmt(mean_delay(s)), fmt(throughput(s)), fmt(tx_bitrate(s)),
        )


def _mean(values: list[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return sum(present) / len(present) if present else None


def summary_values(result: RunResult) -> dict[str, Optional[float]]:
    """Per-run means over flows; flows without a defined value are skipped."""
    stats = [result.stats[k] for k in sorted(result.stats)]
    return {
        "loss_pct": _mean([packet_loss_ratio(s) for s in stats]),
        "mean_delay_ms": _mean([mean_delay(s) for s in stats]),
        "throughput_kbps": _mean([throughput(s) for s in stats]),
        "tx_bitrate_kbps": _mean([tx_bitrate(s) for s in stats]),
    }


def summary_row(result: RunResult) -> list:
    cfg = result.config
    vals = summary_values(result)
    counted = [p for p in result.packets if p.created >= result.warmup_ns]
    p50, p95 = delay_percentiles(counted)
    sinr = result.sinr.sinr_db
    finite = sinr[np.isfinite(sinr)]
    p5 = float(np.percentile(finite, 5)) if finite.size else None
    return [
        result.run_id, cfg.tech, cfg.cv_count, fmt(cfg.max_speed), cfg.traffic.packet_size,
        fmt(cfg.traffic.offered_rate, 1), result.seed,
        *(fmt(vals[c]) for c in METRIC_COLUMNS),
        fmt(p50), fmt(p95), fmt(p5, 4), cfg.digest(), result.version,
    ]


def sinr_rows(result: RunResult):
    tr = result.sinr
    for t, n, v in zip(tr.times.tolist(), tr.node_ids.tolist(), tr.sinr_db.tolist()):
        yield result.run_id, t, n, fmt(v, 4)


def write_run(result: RunResult, out_dir: str | Path) -> dict[str, Path]:
    """Write the four run CSVs plus ``config.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / name for name in OUTPUT_FILES}
    _write_rows(paths["packets.csv"], PACKET_COLUMNS, packet_rows(result))
    _write_rows(paths["flows.csv"], FLOW_COLUMNS, flow_rows(result))
    _write_rows(paths["summary.csv"], SUMMARY_COLUMNS, [summary_row(result)])
    _write_rows(paths["sinr.csv"], SINR_COLUMNS, sinr_rows(result))
    cfg_path = out / "config.json"
    doc = {"seed": result.seed, "config": result.config.to_dict(), "version": result.version}
    cfg_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    paths["config.json"] = cfg_path
    return paths


# sweeps -----------------------------------------------------------------

def aggregate_columns(metrics: Sequence[str] = METRIC_COLUMNS) -> list[str]:
    cols = ["axis", "value", "runs"]
    for m in metrics:
        cols += [f"{m}_mean", f"{m}_q1", f"{m}_median", f"{m}_q3"]
    return cols


def aggregate_point(values: Sequence[Optional[float]]) -> tuple[Optional[float], ...]:
    """Mean and sample quartiles of the defined values."""
    arr = np.array([v for v in values if v is not None], dtype=float)
    if arr.size == 0:
        return None, None, None, None
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return float(arr.mean()), float(q1), float(med), float(q3)


def read_csv_dicts(path: str | Path) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        return list(reader.fieldnames or []), rows


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    _write_rows(Path(path), header, rows)
