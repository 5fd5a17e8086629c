"""Command-line front end: JSON configs in, CSV tables and JSON metadata out.

Modes map one-to-one onto the library's analytic and brute-force entry
points. Output is deterministic: fixed evaluation order, floats printed
at 17 significant digits, metadata keys sorted, so identical configs
produce byte-identical artifacts regardless of thread count.
"""

from __future__ import annotations

import argparse
import copy
import itertools
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .params import (
    CavityParams,
    DriveParams,
    MoleculeParams,
    ProbeParams,
    TruncationPolicy,
)
from .specfun import bessel_cutoff
from . import __version__, dynamics, spectra, cavity, oracle

TOOL = "irfloquet"
VERSION = __version__

MODES = (
    "spectrum",
    "spectrum-offres",
    "cavity-spectrum",
    "coherence",
    "susceptibility",
    "quasienergies",
    "oracle",
    "validate",
    "sumrule",
)


class CliError(Exception):
    """Configuration or usage problem; maps to exit code 1."""


# Section schemas: key -> (required, default). Defaults are materialized
# into the metadata echo so a re-run does not depend on future defaults.
_SECTIONS: dict[str, dict[str, tuple[bool, Any]]] = {
    "molecule": {
        "lambda": (True, None),
        "nu": (True, None),
        "gamma": (True, None),
        "gamma_phi": (False, 0.0),
        "Gamma": (False, 0.0),
    },
    "drive": {"eta_d": (True, None), "omega_d": (True, None)},
    "probe": {"eta_p": (True, None), "detuning_grid": (True, None)},
    "cavity": {
        "g": (True, None),
        "kappa": (True, None),
        "omega_c": (True, None),
        "eta_d_c": (False, 0.0),
    },
    "truncation": {
        "eps_series": (False, 1e-12),
        "n_max_cap": (False, 64),
        "m_max_cap": (False, 128),
    },
    "hilbert": {
        "n_vib": (False, 6),
        "n_cav": (False, 0),
        "rotating_frame": (False, True),
        "allow_large": (False, False),
    },
    "integration": {
        "dt": (True, None),
        "t_end": (True, None),
        "method": (False, "rk4"),
        "period_average": (False, True),
    },
    "scan": {
        "omega_min": (True, None),
        "omega_max": (True, None),
        "n_points": (False, None),
    },
    "trace": {
        "periods": (False, 20),
        "samples_per_period": (False, 96),
        "resonant": (False, True),
        "summary": (False, False),
    },
    "quasi": {"m_range": (False, None)},
    "validate": {"tolerance": (False, 0.05), "formula": (False, "resonant")},
}

# Mode -> (required sections, optional sections). `output` and `sweep`
# are handled at the top level; oracle-backed modes stay sweep-free so
# a single run's integration settings remain in one place.
_MODE_SECTIONS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "spectrum": (("molecule", "drive", "probe"), ("truncation",)),
    "spectrum-offres": (("molecule", "drive", "probe"), ("truncation",)),
    "cavity-spectrum": (
        ("molecule", "drive", "cavity", "probe"),
        ("truncation",),
    ),
    "coherence": (("molecule", "drive", "probe"), ("trace", "truncation")),
    "susceptibility": (("molecule", "cavity", "scan"), ()),
    "quasienergies": (("molecule", "drive"), ("quasi", "truncation")),
    "oracle": (
        ("molecule", "drive", "probe", "hilbert", "integration"),
        ("cavity",),
    ),
    "validate": (
        ("molecule", "drive", "probe", "hilbert", "integration"),
        ("validate", "truncation"),
    ),
    "sumrule": (("molecule", "drive"), ("truncation",)),
}

_SWEEPABLE_MODES = frozenset(
    m for m in MODES if m not in ("oracle", "validate", "sumrule")
)


@dataclass(frozen=True)
class RunConfig:
    """Validated run description for one mode, fully deterministic."""

    mode: str
    molecule: MoleculeParams | None = None
    drive: DriveParams | None = None
    probe: ProbeParams | None = None
    cav: CavityParams | None = None
    policy: TruncationPolicy | None = None
    hilbert: "oracle.HilbertConfig | None" = None
    integration: "oracle.IntegrationConfig | None" = None
    scan: dict | None = None
    trace: dict | None = None
    quasi: dict | None = None
    validate_opts: dict | None = None
    sweep: dict | None = None
    out_path: str = ""
    echo: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ResultBundle:
    """One run's table plus everything needed to reproduce it."""

    mode: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    metadata: dict


def _expect_number(where: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CliError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _expect_int(where: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise CliError(f"{where}: expected an integer, got {value!r}")
    return value


def _expect_bool(where: str, value: Any) -> bool:
    if not isinstance(value, bool):
        raise CliError(f"{where}: expected true or false, got {value!r}")
    return value


def _read_section(src: str, raw: dict, name: str) -> dict:
    """Apply the schema for one section: unknown keys rejected, defaults
    filled in, required keys enforced."""
    data = raw[name]
    if not isinstance(data, dict):
        raise CliError(f"{src}: section '{name}' must be an object")
    schema = _SECTIONS[name]
    for key in data:
        if key not in schema:
            raise CliError(f"{src}: {name}.{key}: unknown key")
    out = {}
    for key, (required, default) in schema.items():
        if key in data:
            out[key] = data[key]
        elif required:
            raise CliError(f"{src}: {name}.{key}: required key missing")
        else:
            out[key] = default
    return out


def _detuning_grid(src: str, value: Any) -> tuple[float, ...]:
    where = f"{src}: probe.detuning_grid"
    if isinstance(value, list):
        return tuple(_expect_number(where, v) for v in value)
    if isinstance(value, dict):
        extra = set(value) - {"start", "stop", "num"}
        if extra or set(value) != {"start", "stop", "num"}:
            raise CliError(f"{where}: grid object needs exactly start/stop/num")
        num = _expect_int(where + ".num", value["num"])
        grid = np.linspace(
            _expect_number(where + ".start", value["start"]),
            _expect_number(where + ".stop", value["stop"]),
            num,
        )
        return tuple(float(v) for v in grid)
    raise CliError(f"{where}: expected a list or a start/stop/num object")


def _build(src: str, section: str, ctor, kwargs: dict):
    try:
        return ctor(**kwargs)
    except ValueError as exc:
        raise CliError(f"{src}: {section}: {exc}") from exc


def parse_config(raw: dict, src: str = "config") -> RunConfig:
    """Turn a raw JSON document into a validated RunConfig.

    Unknown sections and keys are rejected; every diagnostic is anchored
    to the offending key path.
    """
    if not isinstance(raw, dict):
        raise CliError(f"{src}: top level must be an object")
    mode = raw.get("mode")
    if mode is None:
        raise CliError(f"{src}: mode: required key missing")
    if mode not in MODES:
        raise CliError(
            f"{src}: mode: unknown mode {mode!r}; expected one of {', '.join(MODES)}"
        )
    required, optional = _MODE_SECTIONS[mode]
    allowed = set(required) | set(optional) | {"mode", "output", "sweep"}
    for key in raw:
        if key not in allowed:
            if key in _SECTIONS:
                raise CliError(
                    f"{src}: section '{key}' is not used by mode {mode}"
                )
            raise CliError(f"{src}: unknown section '{key}'")
    for name in required:
        if name not in raw:
            raise CliError(f"{src}: section '{name}' is required by mode {mode}")

    sections = {
        name: _read_section(src, raw, name)
        for name in (*required, *optional)
        if name in raw or name in required
    }
    # Optional sections that carry only defaults still get materialized
    # so the echo is complete. A section with required keys (cavity, for
    # the oracle mode) stays absent unless the config provides it.
    for name in optional:
        if name not in sections:
            schema = _SECTIONS[name]
            if not any(req for req, _ in schema.values()):
                sections[name] = {
                    key: default for key, (_, default) in schema.items()
                }

    kw: dict[str, Any] = {"mode": mode}
    echo: dict[str, Any] = {"mode": mode}

    if "molecule" in sections:
        d = sections["molecule"]
        for key in ("lambda", "nu", "gamma", "gamma_phi", "Gamma"):
            d[key] = _expect_number(f"{src}: molecule.{key}", d[key])
        kw["molecule"] = _build(
            src,
            "molecule",
            MoleculeParams,
            dict(
                lambda_=d["lambda"],
                nu=d["nu"],
                gamma=d["gamma"],
                gamma_phi=d["gamma_phi"],
                Gamma=d["Gamma"],
            ),
        )
        echo["molecule"] = d
    if "drive" in sections:
        d = sections["drive"]
        for key in ("eta_d", "omega_d"):
            d[key] = _expect_number(f"{src}: drive.{key}", d[key])
        kw["drive"] = _build(src, "drive", DriveParams, d)
        echo["drive"] = d
    if "probe" in sections:
        d = sections["probe"]
        eta_p = _expect_number(f"{src}: probe.eta_p", d["eta_p"])
        grid = _detuning_grid(src, d["detuning_grid"])
        kw["probe"] = _build(
            src, "probe", ProbeParams, dict(eta_p=eta_p, detuning_grid=grid)
        )
        echo["probe"] = {"eta_p": eta_p, "detuning_grid": list(grid)}
    if "cavity" in sections:
        d = sections["cavity"]
        for key in ("g", "kappa", "omega_c", "eta_d_c"):
            d[key] = _expect_number(f"{src}: cavity.{key}", d[key])
        kw["cav"] = _build(src, "cavity", CavityParams, d)
        echo["cavity"] = d
    if "truncation" in sections:
        d = sections["truncation"]
        d["eps_series"] = _expect_number(
            f"{src}: truncation.eps_series", d["eps_series"]
        )
        d["n_max_cap"] = _expect_int(f"{src}: truncation.n_max_cap", d["n_max_cap"])
        d["m_max_cap"] = _expect_int(f"{src}: truncation.m_max_cap", d["m_max_cap"])
        kw["policy"] = _build(src, "truncation", TruncationPolicy, d)
        echo["truncation"] = d
    if "hilbert" in sections:
        d = sections["hilbert"]
        d["n_vib"] = _expect_int(f"{src}: hilbert.n_vib", d["n_vib"])
        d["n_cav"] = _expect_int(f"{src}: hilbert.n_cav", d["n_cav"])
        d["rotating_frame"] = _expect_bool(
            f"{src}: hilbert.rotating_frame", d["rotating_frame"]
        )
        d["allow_large"] = _expect_bool(
            f"{src}: hilbert.allow_large", d["allow_large"]
        )
        kw["hilbert"] = _build(src, "hilbert", oracle.HilbertConfig, d)
        echo["hilbert"] = d
    if "integration" in sections:
        d = sections["integration"]
        d["dt"] = _expect_number(f"{src}: integration.dt", d["dt"])
        d["t_end"] = _expect_number(f"{src}: integration.t_end", d["t_end"])
        if d["method"] not in ("rk4", "adaptive"):
            raise CliError(
                f"{src}: integration.method: expected 'rk4' or 'adaptive', "
                f"got {d['method']!r}"
            )
        d["period_average"] = _expect_bool(
            f"{src}: integration.period_average", d["period_average"]
        )
        kw["integration"] = _build(src, "integration", oracle.IntegrationConfig, d)
        echo["integration"] = d
    if "scan" in sections:
        d = sections["scan"]
        d["omega_min"] = _expect_number(f"{src}: scan.omega_min", d["omega_min"])
        d["omega_max"] = _expect_number(f"{src}: scan.omega_max", d["omega_max"])
        if d["n_points"] is not None:
            d["n_points"] = _expect_int(f"{src}: scan.n_points", d["n_points"])
        kw["scan"] = d
        echo["scan"] = d
    if "trace" in sections:
        d = sections["trace"]
        d["periods"] = _expect_int(f"{src}: trace.periods", d["periods"])
        d["samples_per_period"] = _expect_int(
            f"{src}: trace.samples_per_period", d["samples_per_period"]
        )
        d["resonant"] = _expect_bool(f"{src}: trace.resonant", d["resonant"])
        d["summary"] = _expect_bool(f"{src}: trace.summary", d["summary"])
        kw["trace"] = d
        echo["trace"] = d
    if "quasi" in sections:
        d = sections["quasi"]
        if d["m_range"] is not None:
            d["m_range"] = _expect_int(f"{src}: quasi.m_range", d["m_range"])
        kw["quasi"] = d
        echo["quasi"] = d
    if "validate" in sections:
        d = sections["validate"]
        d["tolerance"] = _expect_number(f"{src}: validate.tolerance", d["tolerance"])
        if d["tolerance"] <= 0:
            raise CliError(f"{src}: validate.tolerance: must be > 0")
        if d["formula"] not in ("resonant", "offres"):
            raise CliError(
                f"{src}: validate.formula: expected 'resonant' or 'offres', "
                f"got {d['formula']!r}"
            )
        kw["validate_opts"] = d
        echo["validate"] = d

    if "sweep" in raw:
        if mode not in _SWEEPABLE_MODES:
            raise CliError(f"{src}: sweep is not supported by mode {mode}")
        kw["sweep"] = _read_sweep(src, raw["sweep"], set(required) | set(optional))
        echo["sweep"] = kw["sweep"]

    out_path = f"{mode}.csv"
    if "output" in raw:
        d = raw["output"]
        if not isinstance(d, dict) or set(d) - {"path"}:
            raise CliError(f"{src}: output: expected an object with a 'path' key")
        if "path" in d:
            if not isinstance(d["path"], str) or not d["path"]:
                raise CliError(f"{src}: output.path: expected a non-empty string")
            out_path = d["path"]
    kw["out_path"] = out_path
    echo["output"] = {"path": out_path}

    kw["echo"] = echo
    return RunConfig(**kw)


def _read_sweep(src: str, data: Any, allowed_sections: set[str]) -> dict:
    where = f"{src}: sweep"
    if not isinstance(data, dict) or set(data) != {"keys", "values"}:
        raise CliError(f"{where}: expected an object with 'keys' and 'values'")
    keys = data["keys"]
    values = data["values"]
    if not isinstance(keys, list) or not keys:
        raise CliError(f"{where}.keys: expected a non-empty list of dotted keys")
    if not isinstance(values, list) or len(values) != len(keys):
        raise CliError(f"{where}.values: expected one value list per key")
    for key, vals in zip(keys, values):
        if not isinstance(key, str) or key.count(".") != 1:
            raise CliError(f"{where}.keys: {key!r} is not a 'section.key' path")
        section, leaf = key.split(".")
        if section not in allowed_sections:
            raise CliError(
                f"{where}.keys: section '{section}' is not used by this mode"
            )
        if leaf not in _SECTIONS[section]:
            raise CliError(f"{where}.keys: {key}: unknown key")
        if not isinstance(vals, list) or not vals:
            raise CliError(f"{where}.values: list for {key} must be non-empty")
        for v in vals:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise CliError(
                    f"{where}.values: {key}: swept values must be numbers"
                )
    return {"keys": list(keys), "values": [list(v) for v in values]}


# ---------------------------------------------------------------------------
# mode runners: each returns (columns, rows, run metadata)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _run_spectrum(rc: RunConfig, resonant: bool):
    fn = spectra.spectrum_resonant if resonant else spectra.spectrum_off_resonant
    spec = fn(rc.molecule, rc.drive, rc.probe, policy=rc.policy)
    rows = list(zip(spec.detunings.tolist(), spec.values.tolist()))
    return ("delta_p", "S_analytic"), rows, _jsonable(spec.meta)


def _run_cavity_spectrum(rc: RunConfig):
    spec = cavity.spectrum_cavity(
        rc.molecule, rc.cav, rc.probe, rc.drive.omega_d, policy=rc.policy
    )
    rows = list(zip(spec.detunings.tolist(), spec.values.tolist()))
    return ("delta_p", "S_analytic"), rows, _jsonable(spec.meta)


def _run_coherence(rc: RunConfig):
    tr_opts = rc.trace
    if len(rc.probe.detuning_grid) != 1:
        raise CliError(
            "coherence mode needs probe.detuning_grid with exactly one entry"
        )
    delta_p = rc.probe.detuning_grid[0]
    grid = dynamics.trace_grid(
        rc.molecule,
        rc.drive,
        periods=tr_opts["periods"],
        samples_per_period=tr_opts["samples_per_period"],
    )
    trace = dynamics.sigma_trajectory(
        grid,
        rc.molecule,
        rc.drive,
        rc.probe,
        delta_p,
        resonant=tr_opts["resonant"],
        policy=rc.policy,
    )
    avg = dynamics.avg_coherence(trace, rc.drive)
    bare_drive = DriveParams(eta_d=0.0, omega_d=rc.drive.omega_d)
    bare = dynamics.sigma_trajectory(
        grid,
        rc.molecule,
        bare_drive,
        rc.probe,
        delta_p,
        resonant=tr_opts["resonant"],
        policy=rc.policy,
    )
    avg_bare = dynamics.avg_coherence(bare, rc.drive)
    meta = _jsonable(
        dict(
            trace.meta,
            avg_coherence=avg,
            avg_coherence_bare=avg_bare,
        )
    )
    if tr_opts["summary"]:
        ratio = avg / avg_bare if avg_bare > 0 else math.inf
        return (
            ("avg_coherence", "avg_coherence_bare", "ratio"),
            [(avg, avg_bare, ratio)],
            meta,
        )
    coh = trace.coherence
    rows = [
        (float(t), float(s.real), float(s.imag), float(c))
        for t, s, c in zip(grid, trace.sigma_expect, coh)
    ]
    return ("t", "re_sigma", "im_sigma", "coherence"), rows, meta


def _run_susceptibility(rc: RunConfig):
    scan = cavity.susceptibility_scan(
        rc.molecule,
        rc.cav,
        rc.scan["omega_min"],
        rc.scan["omega_max"],
        n_points=rc.scan["n_points"],
    )
    rows = list(zip(scan.omegas.tolist(), scan.values.tolist()))
    meta = {"peak_positions": _jsonable(list(scan.peak_positions))}
    return ("omega", "eps_m_eff_sq"), rows, meta


def _run_quasienergies(rc: RunConfig):
    m_range = rc.quasi["m_range"]
    policy = rc.policy if rc.policy is not None else TruncationPolicy()
    if m_range is None:
        x = 2.0 * rc.molecule.lambda_ * rc.drive.eta_d / rc.drive.omega_d
        m_range = bessel_cutoff(x, policy.eps_series)
    table = spectra.floquet_quasienergies(rc.molecule.lambda_, rc.drive, m_range)
    rows = [
        (int(m), float(off), float(w))
        for m, off, w in zip(table.ms, table.offsets, table.weights)
    ]
    meta = {"m_range": int(m_range), "weight_sum": float(table.weights.sum())}
    return ("m", "offset", "weight"), rows, meta


def _run_sumrule(rc: RunConfig):
    mol, drive = rc.molecule, rc.drive
    beta_mag = (
        0.0 if drive.eta_d == 0.0 else abs(dynamics.steady_beta(mol, drive).beta)
    )
    residual = spectra.sum_rule_residual(
        mol.lambda_, drive, beta_mag, policy=rc.policy
    )
    x = 2.0 * mol.lambda_ * drive.eta_d / drive.omega_d
    y = 2.0 * mol.lambda_ * beta_mag
    rows = [(mol.lambda_, x, y, residual)]
    return ("lambda", "x", "y", "residual"), rows, {"residual": residual}


def _run_oracle(rc: RunConfig, threads: int):
    spec = oracle.spectrum_oracle(
        rc.molecule,
        rc.drive,
        rc.probe,
        rc.hilbert,
        rc.integration,
        cav=rc.cav,
        threads=threads,
    )
    rows = list(zip(spec.detunings.tolist(), spec.values.tolist()))
    return ("delta_p", "S_oracle"), rows, _jsonable(spec.meta)


def _run_validate(rc: RunConfig, threads: int):
    opts = rc.validate_opts or {"tolerance": 0.05, "formula": "resonant"}
    fn = (
        spectra.spectrum_resonant
        if opts["formula"] == "resonant"
        else spectra.spectrum_off_resonant
    )
    analytic = fn(rc.molecule, rc.drive, rc.probe, policy=rc.policy)
    brute = oracle.spectrum_oracle(
        rc.molecule,
        rc.drive,
        rc.probe,
        rc.hilbert,
        rc.integration,
        threads=threads,
    )
    rel = np.abs(analytic.values - brute.values) / np.abs(brute.values)
    rows = [
        (float(d), float(a), float(o), float(r))
        for d, a, o, r in zip(
            analytic.detunings, analytic.values, brute.values, rel
        )
    ]
    meta = {
        "tolerance": opts["tolerance"],
        "formula": opts["formula"],
        "max_rel_err": float(rel.max()),
        "oracle": _jsonable(brute.meta),
        "analytic": _jsonable(analytic.meta),
    }
    breached = bool(rel.max() > opts["tolerance"])
    return ("delta_p", "S_analytic", "S_oracle", "rel_err"), rows, meta, breached


def _set_dotted(raw: dict, key: str, value: Any, src: str) -> None:
    parts = key.split(".")
    if len(parts) == 1:
        raw[key] = value
        return
    if len(parts) != 2:
        raise CliError(f"{src}: --set {key}: expected section.key")
    section, leaf = parts
    node = raw.setdefault(section, {})
    if not isinstance(node, dict):
        raise CliError(f"{src}: --set {key}: '{section}' is not an object")
    node[leaf] = value


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_csv(path: str, columns: tuple[str, ...], rows: list[tuple]) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _sidecar_path(csv_path: str) -> str:
    stem, _ = os.path.splitext(csv_path)
    return stem + ".json"


def _dispatch(rc: RunConfig, threads: int):
    """Run one configuration (one sweep combo). Returns columns, rows,
    per-run metadata, and the validate-breach flag."""
    breached = False
    if rc.mode == "spectrum":
        cols, rows, meta = _run_spectrum(rc, resonant=True)
    elif rc.mode == "spectrum-offres":
        cols, rows, meta = _run_spectrum(rc, resonant=False)
    elif rc.mode == "cavity-spectrum":
        cols, rows, meta = _run_cavity_spectrum(rc)
    elif rc.mode == "coherence":
        cols, rows, meta = _run_coherence(rc)
    elif rc.mode == "susceptibility":
        cols, rows, meta = _run_susceptibility(rc)
    elif rc.mode == "quasienergies":
        cols, rows, meta = _run_quasienergies(rc)
    elif rc.mode == "sumrule":
        cols, rows, meta = _run_sumrule(rc)
    elif rc.mode == "oracle":
        cols, rows, meta = _run_oracle(rc, threads)
    elif rc.mode == "validate":
        cols, rows, meta, breached = _run_validate(rc, threads)
    else:  # pragma: no cover - parse_config rejects unknown modes
        raise CliError(f"unknown mode {rc.mode!r}")
    return cols, rows, meta, breached


def execute(raw: dict, src: str, threads: int) -> tuple[ResultBundle, int]:
    """Validate and run a raw config document, collecting warnings and
    sweep combos into one ResultBundle. Returns the bundle and exit code."""
    base = parse_config(raw, src)
    caught: list[warnings.WarningMessage] = []
    runs: list[dict] = []
    exit_code = 0

    if base.sweep is None:
        combos = [None]
    else:
        combos = list(itertools.product(*base.sweep["values"]))

    all_rows: list[tuple] = []
    columns: tuple[str, ...] | None = None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for combo in combos:
            if combo is None:
                rc = base
                prefix: tuple = ()
                label = None
            else:
                raw_combo = copy.deepcopy(raw)
                del raw_combo["sweep"]
                for key, value in zip(base.sweep["keys"], combo):
                    _set_dotted(raw_combo, key, value, src)
                rc = parse_config(raw_combo, src)
                prefix = tuple(float(v) for v in combo)
                label = {k: v for k, v in zip(base.sweep["keys"], combo)}
            cols, rows, meta, breached = _dispatch(rc, threads)
            if breached:
                exit_code = 2
            if columns is None:
                sweep_cols = tuple(base.sweep["keys"]) if base.sweep else ()
                columns = sweep_cols + tuple(cols)
            all_rows.extend(prefix + tuple(row) for row in rows)
            runs.append({"sweep": label, "meta": meta})

    warning_texts = [str(w.message) for w in caught]
    for text in warning_texts:
        print(f"warning: {text}", file=sys.stderr)

    metadata = {
        "tool": TOOL,
        "version": VERSION,
        "mode": base.mode,
        "columns": list(columns),
        "n_rows": len(all_rows),
        "config": base.echo,
        "runs": runs,
        "warnings": warning_texts,
    }
    bundle = ResultBundle(
        mode=base.mode,
        columns=columns,
        rows=tuple(all_rows),
        metadata=metadata,
    )
    return bundle, exit_code


# ---------------------------------------------------------------------------
# presets: the bundled parameter sets behind --preset


def _fig3_config(gamma_phi: float) -> dict:
    return {
        "mode": "spectrum",
        "molecule": {
            "lambda": 0.2,
            "nu": 1.0,
            "gamma": 0.002,
            "gamma_phi": gamma_phi,
            "Gamma": 0.1,
        },
        "drive": {"eta_d": 0.1, "omega_d": 1.0},
        "probe": {
            "eta_p": 2e-05,
            "detuning_grid": {"start": -0.5, "stop": 2.5, "num": 601},
        },
        "sweep": {"keys": ["drive.omega_d"], "values": [[0.5, 1.0]]},
    }


def _fig4_config(gamma_phis: list, eta_ds: list) -> dict:
    return {
        "mode": "coherence",
        "molecule": {
            "lambda": 0.2,
            "nu": 1.0,
            "gamma": 0.005,
            "gamma_phi": 0.0,
            "Gamma": 0.25,
        },
        "drive": {"eta_d": 0.25, "omega_d": 1.0},
        "probe": {"eta_p": 0.0005, "detuning_grid": [1.0]},
        "trace": {"summary": True},
        "sweep": {
            "keys": ["molecule.gamma_phi", "drive.eta_d"],
            "values": [gamma_phis, eta_ds],
        },
    }


def _presets() -> dict[str, dict]:
    return {
        # quasienergy ladder weights against the drive parameter
        "fig2c": {
            "mode": "quasienergies",
            "molecule": {"lambda": 0.2, "nu": 1.0, "gamma": 0.002, "Gamma": 0.1},
            "drive": {"eta_d": 0.0, "omega_d": 1.0},
            "quasi": {"m_range": 16},
            "sweep": {
                "keys": ["drive.eta_d"],
                "values": [[0.25 * i for i in range(61)]],
            },
        },
        "fig3a": _fig3_config(0.0),
        "fig3b": _fig3_config(0.01),
        # coherence against dephasing at two drive strengths
        "fig4b": _fig4_config(
            [0.0, 0.0025, 0.005, 0.01, 0.025, 0.05, 0.1, 0.25, 0.5],
            [0.125, 0.25],
        ),
        # coherence against drive strength at three dephasing rates
        "fig4d": _fig4_config(
            [0.0, 0.01, 0.05],
            [0.125 * i for i in range(11)],
        ),
        "fig5a": {
            "mode": "susceptibility",
            "molecule": {"lambda": 0.2, "nu": 1.0, "gamma": 0.001, "Gamma": 0.05},
            "cavity": {"g": 0.025, "kappa": 0.05, "omega_c": 1.0},
            "scan": {"omega_min": 0.5, "omega_max": 1.5, "n_points": 2001},
            "sweep": {
                "keys": ["cavity.g"],
                "values": [[0.025, 0.05, 0.1, 0.2]],
            },
        },
        "fig5b": {
            "mode": "cavity-spectrum",
            "molecule": {
                "lambda": 0.2,
                "nu": 1.0,
                "gamma": 0.0001,
                "gamma_phi": 0.0,
                "Gamma": 0.01,
            },
            "drive": {"eta_d": 0.0, "omega_d": 1.0},
            "cavity": {
                "g": 0.015,
                "kappa": 0.06,
                "omega_c": 1.0,
                "eta_d_c": 0.048,
            },
            "probe": {
                "eta_p": 1e-05,
                "detuning_grid": {"start": -0.5, "stop": 2.5, "num": 601},
            },
            "sweep": {
                "keys": ["cavity.g"],
                "values": [[0.015, 0.03, 0.045]],
            },
        },
    }


PRESET_NAMES = tuple(sorted(_presets()))


def preset(name: str) -> RunConfig:
    """Validated figure-reproduction configuration by name."""
    table = _presets()
    if name not in table:
        raise CliError(
            f"unknown preset {name!r}; expected one of {', '.join(PRESET_NAMES)}"
        )
    return parse_config(table[name], src=f"preset:{name}")


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors go through the exit-1 path."""

    def error(self, message: str):
        raise CliError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog=TOOL,
        description=(
            "Floquet-engineered vibronic absorption spectra, coherence "
            "traces, cavity-modified sidebands, and a brute-force "
            "master-equation cross-check."
        ),
    )
    parser.add_argument("mode", choices=MODES, help="what to compute")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", metavar="PATH", help="JSON run configuration")
    source.add_argument(
        "--preset",
        metavar="NAME",
        choices=PRESET_NAMES,
        help="figure-reproduction parameter set: " + ", ".join(PRESET_NAMES),
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        metavar="N",
        help="worker threads for oracle grids (default: available cores)",
    )
    parser.add_argument(
        "--out", metavar="PATH", help="CSV output path (sidecar JSON next to it)"
    )
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config entry, e.g. --set drive.eta_d=0.2",
    )
    parser.add_argument(
        "--plot",
        action="store_true",
        help="also render a PNG figure next to the CSV",
    )
    return parser


def _load_raw(args) -> tuple[dict, str]:
    if args.preset is not None:
        raw = copy.deepcopy(_presets()[args.preset])
        src = f"preset:{args.preset}"
        if raw["mode"] != args.mode:
            raise CliError(
                f"preset {args.preset} is a {raw['mode']} run; "
                f"invoke it as: {TOOL} {raw['mode']} --preset {args.preset}"
            )
    else:
        path = args.config
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise CliError(f"{path}: {exc.strerror or exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CliError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        src = path
        if not isinstance(raw, dict):
            raise CliError(f"{src}: top level must be an object")
        raw.setdefault("mode", args.mode)
        if raw["mode"] != args.mode:
            raise CliError(
                f"{src}: mode: config says {raw['mode']!r} but the "
                f"command line asked for {args.mode!r}"
            )
    return raw, src


def _parse_override(item: str) -> tuple[str, Any]:
    if "=" not in item:
        raise CliError(f"--set {item}: expected KEY=VALUE")
    key, text = item.split("=", 1)
    key = key.strip()
    if not key:
        raise CliError(f"--set {item}: empty key")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    return key, value


def run(argv: list[str] | None = None) -> int:
    """Parse arguments, run the requested mode, write artifacts."""
    parser = _build_parser()
    args = parser.parse_args(argv)

    raw, src = _load_raw(args)
    for item in args.overrides:
        key, value = _parse_override(item)
        _set_dotted(raw, key, value, src)
    if args.out is not None:
        raw.setdefault("output", {})["path"] = args.out
    elif args.preset is not None and "output" not in raw:
        raw["output"] = {"path": f"{args.preset}.csv"}

    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    if threads < 1:
        raise CliError(f"--threads must be >= 1, got {threads}")

    bundle, exit_code = execute(raw, src, threads)

    out_csv = bundle.metadata["config"]["output"]["path"]
    sidecar = _sidecar_path(out_csv)
    if args.config is not None:
        cfg_real = os.path.realpath(args.config)
        for target in (out_csv, sidecar):
            if os.path.realpath(target) == cfg_real:
                raise CliError(
                    f"refusing to overwrite the config file with output "
                    f"{target}; pick a different --out stem"
                )
    _write_csv(out_csv, bundle.columns, list(bundle.rows))
    with open(sidecar, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(bundle.metadata, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"wrote {out_csv}")
    print(f"wrote {sidecar}")

    if args.plot:
        from . import _plot

        png = _plot.render(bundle, out_csv)
        if png:
            print(f"wrote {png}")
    return exit_code


def main(argv: list[str] | None = None) -> int:
    try:
        return run(argv)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
