"""Config-driven experiment runner.

One JSON config file fully describes an experiment run.  ``validate``
canonicalizes a config (defaults filled, keys sorted) and reports every
problem at once; ``execute`` stages all outputs, then moves them into place
and writes a manifest with the config hash and per-file checksums, so an
identical config and seed reproduce byte-identical results.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import shutil
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import io as pio
from .ensemble import (
    EmitterSpec,
    SolverSettings,
    bandgap_scan,
    ensemble_rate_suppression,
    rate_map,
    single_emitter_rate,
)
from .fdtd import PmlSpec
from .geometry import PhotonicCrystalSpec, rasterize
from .modal import extract_cavity_mode, purcell_factor, weak_coupling_check
from .photon_stats import (
    EmitterModel,
    PulseTrain,
    fit_lifetime,
    g2_zero,
    hbt_histogram,
    simulate_photon_stream,
)
from .units import UnitSystem

EXPERIMENTS = (
    "resonance",
    "purcell",
    "single-rate",
    "ensemble",
    "rate-map",
    "bandgap",
    "photon-stats",
)
STOCHASTIC = {"ensemble", "bandgap", "photon-stats"}

ENV_OUT_ROOT = "PCSIM_OUT_ROOT"


# ---------------------------------------------------------------------------
# Schema
# ---------------------------------------------------------------------------
# Leaves are (kind, default) where kind is one of: "number", "int", "bool",
# "str", "number?" (nullable), "int?", list specs ("numlist", "pairlist",
# "overridelist").  A default of REQUIRED marks a mandatory key.

REQUIRED = object()

_GEOMETRY_SCHEMA = {
    "lattice": {"a": ("number", 1.0), "r": ("number", 0.3)},
    "slab": {"d": ("number", 0.65), "n": ("number", 3.6), "n_eff": ("number", 2.65)},
    "extent": {"nx": ("int", 9), "ny": ("int", 9)},
    "padding": ("number", 1.5),
    "defect": {
        "enabled": ("bool", False),
        "neighbor_shift": ("number", 0.05),
        "removed": ("pairlist", [[0, 0]]),
        "overrides": ("overridelist", []),
    },
}

_SOLVER_SCHEMA = {
    "dimensionality": ("str", "2d"),
    "resolution": ("number", 16.0),
    "courant": ("number", 0.5),
    "pml": {
        "thickness": ("int", 10),
        "order": ("int", 3),
        "reflection": ("number", 1e-4),
    },
    "rel_bandwidth": ("number", 0.1),
    "flux_half_size": ("number", 0.8),
    "residual_target": ("number", 0.01),
    "max_steps": ("int", 60_000),
}

_PARAMS_SCHEMAS = {
    "resonance": {
        "band": ("numlist", [0.24, 0.34]),
        "ring_time": ("number?", None),
    },
    "purcell": {
        "band": ("numlist", [0.24, 0.34]),
        "ring_time": ("number?", None),
        "coupling_g": ("number?", None),
    },
    "single-rate": {
        "position": ("numlist", [0.0, 0.0]),
        "orientation": ("numlist", [1.0, 0.0]),
        "wavelength": ("number", REQUIRED),
    },
    "ensemble": {
        "n_emitters": ("int", 50),
        "band": ("numlist", REQUIRED),
        "region_radius": ("number", 1.2),
    },
    "rate-map": {
        "band": ("numlist", [0.24, 0.34]),
        "offsets_x": ("numlist", [0.0, 0.25, 0.5, 0.75, 1.0]),
        "offsets_y": ("numlist", [0.0]),
        "detunings": ("numlist", [-10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0]),
        "q": ("number?", 1000.0),
        "f_pc": ("number", 0.2),
    },
    "bandgap": {
        "lambda_min": ("number", 2.3),
        "lambda_max": ("number", 5.5),
        "n_lambda": ("int", 40),
        "n_probe": ("int", 8),
        "region_radius": ("number", 3.0),
        "threshold": ("number", 0.5),
    },
    "photon-stats": {
        "lifetime_ps": ("number", 650.0),
        "excitation_probability": ("number", 0.9),
        "detection_efficiency": ("number", 0.05),
        "background_rate_hz": ("number", 0.0),
        "statistics": ("str", "single"),
        "repetition_ps": ("number", 13_000.0),
        "n_pulses": ("int", 100_000),
        "bin_width_ps": ("number", 130.0),
        "window_ps": ("number", 65_000.0),
        "irf_width_ps": ("number", 50.0),
        "scheme": ("str", "start-stop"),
    },
}

_NEEDS_GEOMETRY = set(EXPERIMENTS) - {"photon-stats"}


def _schema_for(experiment: str) -> dict:
    schema = {
        "experiment": ("str", REQUIRED),
        "units": {"lambda_cav_nm": ("number?", None)},
        "solver": _SOLVER_SCHEMA,
        "params": _PARAMS_SCHEMAS[experiment],
        "seed": ("int?", None),
    }
    if experiment in _NEEDS_GEOMETRY:
        schema["geometry"] = _GEOMETRY_SCHEMA
    return schema


def _check_leaf(kind: str, value, path: str, errors: list[str]):
    def err(msg):
        errors.append(f"{path}: {msg}")
        return None

    if kind == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return err(f"expected a number, got {value!r}")
        return float(value)
    if kind == "number?":
        if value is None:
            return None
        return _check_leaf("number", value, path, errors)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            return err(f"expected an integer, got {value!r}")
        return int(value)
    if kind == "int?":
        if value is None:
            return None
        return _check_leaf("int", value, path, errors)
    if kind == "bool":
        if not isinstance(value, bool):
            return err(f"expected true/false, got {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str):
            return err(f"expected a string, got {value!r}")
        return value
    if kind == "numlist":
        if not isinstance(value, list) or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in value
        ):
            return err("expected a list of numbers")
        return [float(v) for v in value]
    if kind == "pairlist":
        if not isinstance(value, list) or any(
            not isinstance(p, list) or len(p) != 2 or any(not isinstance(q, int) for q in p)
            for p in value
        ):
            return err("expected a list of [int, int] pairs")
        return [[int(a), int(b)] for a, b in value]
    if kind == "overridelist":
        if not isinstance(value, list):
            return err("expected a list of override objects")
        out = []
        for i, ov in enumerate(value):
            if not isinstance(ov, dict):
                err(f"override {i} must be an object")
                continue
            unknown = set(ov) - {"site", "shift", "radius"}
            if unknown:
                err(f"override {i} has unknown keys {sorted(unknown)}")
            entry = {
                "site": ov.get("site", [0, 0]),
                "shift": ov.get("shift", [0.0, 0.0]),
                "radius": ov.get("radius"),
            }
            out.append(entry)
        return out
    raise AssertionError(f"unhandled schema kind {kind}")


def _apply_schema(schema: dict, cfg, path: str, errors: list[str]) -> dict:
    if not isinstance(cfg, dict):
        errors.append(f"{path or 'config'}: expected an object")
        return {}
    out = {}
    for key in sorted(set(cfg) - set(schema)):
        errors.append(f"{path + '.' if path else ''}{key}: unknown key")
    for key, spec in schema.items():
        child_path = f"{path}.{key}" if path else key
        if isinstance(spec, dict):
            out[key] = _apply_schema(spec, cfg.get(key, {}), child_path, errors)
        else:
            kind, default = spec
            if key in cfg:
                out[key] = _check_leaf(kind, cfg[key], child_path, errors)
            elif default is REQUIRED:
                errors.append(f"{child_path}: required key missing")
                out[key] = None
            else:
                out[key] = default
    return out


def _geometry_spec(canon: dict) -> PhotonicCrystalSpec:
    g = canon["geometry"]
    defect = None
    if g["defect"]["enabled"]:
        from .geometry import DefectSpec, HoleOverride

        defect = DefectSpec(
            removed=tuple(tuple(s) for s in g["defect"]["removed"]),
            overrides=tuple(
                HoleOverride(
                    site=tuple(o["site"]),
                    shift=tuple(o["shift"]),
                    radius=o["radius"],
                )
                for o in g["defect"]["overrides"]
            ),
        )
    return PhotonicCrystalSpec(
        lattice_a=g["lattice"]["a"],
        hole_radius=g["lattice"]["r"],
        slab_thickness=g["slab"]["d"],
        slab_index=g["slab"]["n"],
        effective_index=g["slab"]["n_eff"],
        nx_periods=g["extent"]["nx"],
        ny_periods=g["extent"]["ny"],
        defect=defect,
    )


def validate_config(raw: dict) -> tuple[dict, list[str]]:
    """Canonical config plus the full list of validation errors."""
    errors: list[str] = []
    experiment = raw.get("experiment")
    if experiment not in EXPERIMENTS:
        errors.append(
            f"experiment: must be one of {', '.join(EXPERIMENTS)} (got {experiment!r})"
        )
        return {}, errors
    canon = _apply_schema(_schema_for(experiment), raw, "", errors)
    if errors:
        return canon, errors

    # Cross-field physics checks.
    if experiment in _NEEDS_GEOMETRY:
        try:
            spec = _geometry_spec(canon)
        except ValueError as exc:
            errors.append(f"geometry: {exc}")
            spec = None
        if experiment in ("resonance", "purcell", "rate-map") and spec is not None:
            if not canon["geometry"]["defect"]["enabled"]:
                errors.append(f"params: {experiment} needs geometry.defect.enabled = true")
        s = canon["solver"]
        if s["dimensionality"] not in ("2d", "3d"):
            errors.append("solver.dimensionality: must be '2d' or '3d'")
        dim = 2 if s["dimensionality"] == "2d" else 3
        if not 0 < s["courant"] <= 1 / math.sqrt(dim) + 1e-12:
            errors.append(
                f"solver.courant: violates the stability bound 1/sqrt({dim})"
            )
        if s["resolution"] < 8:
            errors.append("solver.resolution: must be at least 8 cells per a")
        try:
            PmlSpec(s["pml"]["thickness"], s["pml"]["order"], s["pml"]["reflection"])
        except ValueError as exc:
            errors.append(f"solver.pml: {exc}")
    if experiment in STOCHASTIC and canon["seed"] is None:
        errors.append(f"seed: required for stochastic experiment '{experiment}'")
    if experiment == "photon-stats":
        p = canon["params"]
        if p["statistics"] not in ("single", "poissonian"):
            errors.append("params.statistics: must be 'single' or 'poissonian'")
        if p["scheme"] not in ("start-stop", "full"):
            errors.append("params.scheme: must be 'start-stop' or 'full'")
        ratio = p["window_ps"] / p["bin_width_ps"]
        if abs(ratio - round(ratio)) > 1e-9:
            errors.append("params.window_ps: must be an integer multiple of bin_width_ps")
    if experiment == "ensemble" and canon["params"]["band"] is not None:
        if len(canon["params"]["band"]) != 2 or canon["params"]["band"][0] >= canon["params"]["band"][1]:
            errors.append("params.band: expected [lambda_lo, lambda_hi] with lo < hi")
    return canon, errors


def canonical_json(canon: dict) -> str:
    return json.dumps(canon, indent=2, sort_keys=True) + "\n"


def config_hash(canon: dict) -> str:
    return hashlib.sha256(canonical_json(canon).encode()).hexdigest()


def load_and_validate(path) -> tuple[dict, list[str]]:
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError:
        return {}, [f"config file not found: {path}"]
    except json.JSONDecodeError as exc:
        return {}, [f"config is not valid JSON: {exc}"]
    return validate_config(raw)


# ---------------------------------------------------------------------------
# Experiment implementations
# ---------------------------------------------------------------------------


def _units(canon) -> UnitSystem:
    return UnitSystem(lambda_cav_nm=canon["units"]["lambda_cav_nm"])


def _material(canon):
    spec = _geometry_spec(canon)
    dim = 2 if canon["solver"]["dimensionality"] == "2d" else 3
    return rasterize(
        spec,
        canon["solver"]["resolution"],
        padding=canon["geometry"]["padding"],
        dimensionality=dim,
    )


def _settings(canon) -> SolverSettings:
    s = canon["solver"]
    return SolverSettings(
        resolution=s["resolution"],
        courant=s["courant"],
        pml=PmlSpec(s["pml"]["thickness"], s["pml"]["order"], s["pml"]["reflection"]),
        rel_bandwidth=s["rel_bandwidth"],
        flux_half_size=s["flux_half_size"],
        residual_target=s["residual_target"],
        max_steps=s["max_steps"],
    )


def _mode_from_config(canon, units):
    material = _material(canon)
    return material, extract_cavity_mode(
        material,
        band=tuple(canon["params"]["band"]),
        courant=canon["solver"]["courant"],
        pml=PmlSpec(
            canon["solver"]["pml"]["thickness"],
            canon["solver"]["pml"]["order"],
            canon["solver"]["pml"]["reflection"],
        ),
        ring_time=canon["params"].get("ring_time"),
        units=units,
    )


def _run_resonance(canon, units, out: Path, pool) -> list[Path]:
    material, mode = _mode_from_config(canon, units)
    files = []
    p = out / "resonance.json"
    pio.write_json(
        p,
        pio.result_envelope(
            mode.to_json_dict(units), config_hash(canon), canon["seed"], __version__
        ),
    )
    files.append(p)
    tail = mode.diagnostics.get("probe_series")
    if tail is not None:
        dt = mode.diagnostics["dt"]
        p = out / "ringdown.csv"
        pio.write_monitor_csv(p, (np.arange(tail.size) + 1) * dt, tail)
        files.append(p)
    return files


def _run_purcell(canon, units, out: Path, pool) -> list[Path]:
    material, mode = _mode_from_config(canon, units)
    n = canon["geometry"]["slab"]["n"]
    dim = material.eps.ndim
    if dim == 2:
        v_eff = mode.v_mode * mode.wavelength / (2.0 * n)
    else:
        v_eff = mode.v_mode
    f_cav = purcell_factor(mode.q, v_eff, mode.wavelength, n)
    results = mode.to_json_dict(units)
    results.update(
        {
            "f_cav": f_cav,
            "v_eff_norm": v_eff,
            "index_used": n,
        }
    )
    g = canon["params"]["coupling_g"]
    if g is not None:
        chk = weak_coupling_check(mode.kappa.normalized, g)
        results["weak_coupling"] = {"is_weak": chk.is_weak, "margin": chk.margin}
    p = out / "purcell.json"
    pio.write_json(
        p,
        pio.result_envelope(results, config_hash(canon), canon["seed"], __version__),
    )
    return [p]


def _run_single_rate(canon, units, out: Path, pool) -> list[Path]:
    material = _material(canon)
    prm = canon["params"]
    emitter = EmitterSpec(
        position=tuple(prm["position"]),
        orientation=tuple(prm["orientation"]),
        wavelength=prm["wavelength"],
    )
    res = single_emitter_rate(material, emitter, _settings(canon))
    p1 = out / "rate.json"
    pio.write_json(
        p1,
        pio.result_envelope(
            {
                "ratio": res.ratio,
                "p_crystal": res.p_crystal,
                "p_bulk": res.p_bulk,
                "flagged": res.flagged,
                "provenance": res.provenance,
                "emitter": {
                    "position": list(emitter.position),
                    "orientation": list(emitter.orientation),
                    "wavelength": emitter.wavelength,
                },
            },
            config_hash(canon),
            canon["seed"],
            __version__,
        ),
    )
    p2 = out / "rate.csv"
    pio.write_power_csv(p2, res.ratio, res.flagged)
    return [p1, p2]


def _run_ensemble(canon, units, out: Path, pool) -> list[Path]:
    material = _material(canon)
    prm = canon["params"]
    result = ensemble_rate_suppression(
        material,
        prm["n_emitters"],
        tuple(prm["band"]),
        canon["seed"],
        region_radius=prm["region_radius"],
        settings=_settings(canon),
        executor=pool,
    )
    p1 = out / "ensemble.csv"
    pio.write_ensemble_csv(p1, result.results)
    p2 = out / "ensemble_summary.json"
    pio.write_json(
        p2,
        pio.result_envelope(
            {
                "mean": result.mean,
                "variance": result.variance,
                "n_emitters": len(result.results),
                "flagged": result.flagged,
            },
            config_hash(canon),
            canon["seed"],
            __version__,
        ),
    )
    return [p1, p2]


def _run_rate_map(canon, units, out: Path, pool) -> list[Path]:
    material, mode = _mode_from_config(canon, units)
    prm = canon["params"]
    offsets = [(x, y) for x in prm["offsets_x"] for y in prm["offsets_y"]]
    rmap = rate_map(
        mode,
        material,
        offsets,
        prm["detunings"],
        n_index=canon["geometry"]["slab"]["n"],
        q_override=prm["q"],
        f_pc=prm["f_pc"],
    )
    p1 = out / "rate_map.csv"
    pio.write_rate_map_csv(p1, rmap)
    p2 = out / "rate_map.json"
    pio.write_json(
        p2,
        pio.result_envelope(
            {
                "f_cav": rmap.f_cav,
                "f_pc": rmap.f_pc,
                "q": rmap.q,
                "lambda_cav_norm": mode.wavelength,
                "polarization": mode.polarization,
            },
            config_hash(canon),
            canon["seed"],
            __version__,
        ),
    )
    return [p1, p2]


def _run_bandgap(canon, units, out: Path, pool) -> list[Path]:
    material = _material(canon)
    prm = canon["params"]
    lams = np.linspace(prm["lambda_min"], prm["lambda_max"], prm["n_lambda"])
    scan = bandgap_scan(
        material,
        lams,
        n_probe=prm["n_probe"],
        seed=canon["seed"],
        region_radius=prm["region_radius"],
        settings=_settings(canon),
        threshold=prm["threshold"],
        executor=pool,
    )
    p1 = out / "bandgap.csv"
    pio.write_gap_scan_csv(p1, scan, units)
    gap_nm = None
    if scan.gap and units.anchored:
        gap_nm = [units.length_to_nm(scan.gap[0]), units.length_to_nm(scan.gap[1])]
    p2 = out / "bandgap.json"
    pio.write_json(
        p2,
        pio.result_envelope(
            {
                "gap_detected": scan.found,
                "gap_norm": list(scan.gap) if scan.gap else None,
                "gap_nm": gap_nm,
                "threshold": scan.threshold,
                "flagged": scan.flagged,
            },
            config_hash(canon),
            canon["seed"],
            __version__,
        ),
    )
    return [p1, p2]


def _run_photon_stats(canon, units, out: Path, pool) -> list[Path]:
    prm = canon["params"]
    model = EmitterModel(
        lifetime_ps=prm["lifetime_ps"],
        excitation_probability=prm["excitation_probability"],
        detection_efficiency=prm["detection_efficiency"],
        background_rate_hz=prm["background_rate_hz"],
        statistics=prm["statistics"],
    )
    train = PulseTrain(repetition_ps=prm["repetition_ps"])
    duration = prm["n_pulses"] * prm["repetition_ps"]
    streams = simulate_photon_stream(model, train, duration, canon["seed"])
    hist = hbt_histogram(streams, prm["bin_width_ps"], prm["window_ps"], prm["scheme"])
    g2 = g2_zero(hist, prm["repetition_ps"])
    stamps = np.sort(np.concatenate([streams.channel_1, streams.channel_2]))
    arrivals = np.mod(stamps, prm["repetition_ps"])
    fit = fit_lifetime(
        arrivals,
        bin_width_ps=max(prm["irf_width_ps"], prm["repetition_ps"] / 512),
        irf_width_ps=prm["irf_width_ps"],
        repetition_ps=prm["repetition_ps"],
    )
    p1 = out / "stream.csv"
    pio.write_timestamps_csv(p1, streams)
    p2 = out / "histogram.csv"
    pio.write_histogram_csv(p2, hist)
    p3 = out / "fits.json"
    pio.write_json(
        p3,
        pio.result_envelope(
            {
                "g2_zero": g2.value,
                "g2_sigma": g2.sigma,
                "g2_corrected": g2.corrected,
                "g2_mode": g2.mode,
                "g2_warning": g2.warning,
                "lifetime_ps": fit.tau_ps,
                "lifetime_err_ps": fit.tau_err_ps,
                "lifetime_ok": fit.ok,
                "n_pairs": hist.n_pairs,
            },
            config_hash(canon),
            canon["seed"],
            __version__,
        ),
    )
    return [p1, p2, p3]


_RUNNERS = {
    "resonance": _run_resonance,
    "purcell": _run_purcell,
    "single-rate": _run_single_rate,
    "ensemble": _run_ensemble,
    "rate-map": _run_rate_map,
    "bandgap": _run_bandgap,
    "photon-stats": _run_photon_stats,
}

_PLANNED = {
    "resonance": ["resonance.json", "ringdown.csv"],
    "purcell": ["purcell.json"],
    "single-rate": ["rate.json", "rate.csv"],
    "ensemble": ["ensemble.csv", "ensemble_summary.json"],
    "rate-map": ["rate_map.csv", "rate_map.json"],
    "bandgap": ["bandgap.csv", "bandgap.json"],
    "photon-stats": ["stream.csv", "histogram.csv", "fits.json"],
}


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def execute(canon: dict, out_dir, threads: int = 1, dry_run: bool = False) -> dict:
    """Run a validated config; returns the manifest dict.

    All outputs are written to a staging directory and moved into place
    only when the whole experiment succeeded, so failures leave no partial
    results.  The manifest records the config hash, tool version, wall
    time, and a checksum for every output file.
    """
    out = Path(out_dir)
    kind = canon["experiment"]
    if dry_run:
        manifest = {
            "dry_run": True,
            "experiment": kind,
            "config_hash": config_hash(canon),
            "tool_version": __version__,
            "planned_outputs": _PLANNED[kind],
        }
        out.mkdir(parents=True, exist_ok=True)
        pio.write_json(out / "manifest.json", manifest)
        return manifest

    out.mkdir(parents=True, exist_ok=True)
    stage = out / f".staging-{config_hash(canon)[:8]}-{os.getpid()}"
    if stage.exists():
        shutil.rmtree(stage)
    stage.mkdir(parents=True)
    t0 = time.monotonic()
    pool = None
    try:
        if threads > 1 and kind in ("ensemble", "bandgap"):
            pool = ProcessPoolExecutor(max_workers=threads)
        files = _RUNNERS[kind](canon, _units(canon), stage, pool)
        wall = time.monotonic() - t0
        outputs = {}
        for f in files:
            outputs[f.name] = _sha256(f)
        manifest = {
            "experiment": kind,
            "config_hash": config_hash(canon),
            "tool_version": __version__,
            "seed": canon["seed"],
            "wall_time_s": wall,
            "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "outputs": outputs,
        }
        for f in files:
            os.replace(f, out / f.name)
        pio.write_json(out / "manifest.json", manifest)
        return manifest
    finally:
        if pool is not None:
            pool.shutdown()
        if stage.exists():
            shutil.rmtree(stage)


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcsim",
        description="Photonic-crystal cavity emission simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in EXPERIMENTS + ("validate",):
        p = sub.add_parser(kind, help=f"{kind} experiment" if kind != "validate" else "validate a config")
        p.add_argument("--config", required=True, help="JSON config path")
        if kind != "validate":
            p.add_argument("--out", default=None, help="output directory")
            p.add_argument("--seed", type=int, default=None, help="override config seed")
            p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                           help="worker processes for ensemble experiments")
            p.add_argument("--dry-run", action="store_true",
                           help="validate and write the planned-output manifest only")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    canon, errors = load_and_validate(args.config)
    if args.command == "validate":
        if errors:
            for e in errors:
                print(f"error: {e}", file=sys.stderr)
            return 2
        sys.stdout.write(canonical_json(canon))
        return 0

    if not errors and canon["experiment"] != args.command:
        errors.append(
            f"experiment: config declares '{canon.get('experiment')}' but "
            f"subcommand is '{args.command}'"
        )
    if not errors and args.seed is not None:
        canon["seed"] = args.seed
        canon, errors = validate_config(canon)
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        return 2

    out = args.out
    if out is None:
        root = os.environ.get(ENV_OUT_ROOT, "pcsim-out")
        out = Path(root) / f"{args.command}-{config_hash(canon)[:8]}"
    try:
        manifest = execute(canon, out, threads=max(args.threads, 1), dry_run=args.dry_run)
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 1
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}/manifest.json ({len(manifest.get('outputs', {}))} outputs)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
