"""File formats: raw field snapshots, CSV records, JSON result envelopes.

Snapshots are raw little-endian float32 (component-major) plus a JSON
sidecar carrying shape/component/time metadata.  All CSV writers use plain
repr formatting so identical data serializes byte-identically.  Writes are
atomic (temp file + rename in the target directory).
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    _atomic_write_bytes(Path(path), text.encode("utf-8"))


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


# ---------------------------------------------------------------------------
# Field snapshots: raw float32 + JSON sidecar
# ---------------------------------------------------------------------------


def write_field_snapshot(path_base, array: np.ndarray, component: str,
                         time_index: int, units: str = "normalized (c=a=1)",
                         extra: dict | None = None) -> tuple[Path, Path]:
    """Write ``<base>.raw`` (little-endian float32) and ``<base>.json``."""
    base = Path(path_base)
    raw = np.ascontiguousarray(array, dtype="<f4")
    _atomic_write_bytes(base.with_suffix(".raw"), raw.tobytes())
    meta = {
        "shape": list(array.shape),
        "dtype": "<f4",
        "order": "C",
        "component": component,
        "time_index": time_index,
        "units": units,
    }
    if extra:
        meta.update(extra)
    write_json(base.with_suffix(".json"), meta)
    return base.with_suffix(".raw"), base.with_suffix(".json")


def read_field_snapshot(path_base) -> tuple[np.ndarray, dict]:
    base = Path(path_base)
    meta = read_json(base.with_suffix(".json"))
    raw = np.fromfile(base.with_suffix(".raw"), dtype=meta["dtype"])
    return raw.reshape(meta["shape"]), meta


# ---------------------------------------------------------------------------
# CSV records
# ---------------------------------------------------------------------------


def _csv(path, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(repr(v) if isinstance(v, float) else str(v) for v in row)
                 for row in rows)
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_monitor_csv(path, times, values) -> None:
    _csv(path, "t,value", zip(map(float, times), map(float, values)))


def read_monitor_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return np.atleast_1d(data["t"]), np.atleast_1d(data["value"])


def write_spectrum_csv(path, frequencies, amplitudes) -> None:
    _csv(path, "frequency,amplitude",
         zip(map(float, frequencies), map(float, amplitudes)))


def read_spectrum_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return np.atleast_1d(data["frequency"]), np.atleast_1d(data["amplitude"])


def write_power_csv(path, power: float, flag: bool) -> None:
    _csv(path, "P,flag", [(float(power), int(flag))])


def write_ensemble_csv(path, results) -> None:
    """Per-emitter rate rows: emitter_id,x,y,ux,uy,lambda,ratio,flag."""
    rows = []
    for i, r in enumerate(results):
        e = r.emitter
        rows.append((i, float(e.position[0]), float(e.position[1]),
                     float(e.orientation[0]), float(e.orientation[1]),
                     float(e.wavelength), float(r.ratio), int(r.flagged)))
    _csv(path, "emitter_id,x,y,ux,uy,lambda,ratio,flag", rows)


def read_timestamps_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a `channel,t_ps` stream back into two sorted channel arrays."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    ch = np.atleast_1d(data["channel"]).astype(int)
    t = np.atleast_1d(data["t_ps"])
    return np.sort(t[ch == 1]), np.sort(t[ch == 2])


def write_timestamps_csv(path, streams) -> None:
    rows = [(1, float(t)) for t in streams.channel_1]
    rows += [(2, float(t)) for t in streams.channel_2]
    rows.sort(key=lambda r: r[1])
    _csv(path, "channel,t_ps", rows)


def write_histogram_csv(path, hist) -> None:
    _csv(path, "delay_ps,counts",
         ((float(c), int(n)) for c, n in zip(hist.bin_centers, hist.counts)))


def read_histogram_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return np.atleast_1d(data["delay_ps"]), np.atleast_1d(data["counts"]).astype(int)


def write_rate_map_csv(path, rate_map) -> None:
    """Matrix layout: first row detunings, then one row per offset."""
    header = "offset_x,offset_y," + ",".join(repr(float(d)) for d in rate_map.detunings)
    rows = []
    for (ox, oy), row in zip(rate_map.offsets, rate_map.values):
        rows.append((float(ox), float(oy), *[float(v) for v in row]))
    _csv(path, header, rows)


def write_gap_scan_csv(path, scan, units=None) -> None:
    lam_nm = [units.length_to_nm(v) if units is not None and units.anchored else float("nan")
              for v in scan.wavelengths]
    _csv(path, "lambda_norm,lambda_nm,mean_ratio",
         zip(map(float, scan.wavelengths), lam_nm, map(float, scan.mean_ratio)))


# ---------------------------------------------------------------------------
# Result envelope
# ---------------------------------------------------------------------------


def result_envelope(results: dict, config_hash: str, seed, version: str) -> dict:
    return {
        "tool_version": version,
        "config_hash": config_hash,
        "seed": seed,
        "results": results,
    }
