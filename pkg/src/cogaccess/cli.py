"""Command-line front end.

Five subcommands over one validated config document (YAML or JSON):

    region    trace stability-region boundary curves to CSV
    optimize  solve one access-probability problem, JSON to stdout
    simulate  Monte Carlo run with empirical-vs-analytic comparison
    estimate  learning-phase -> regular-phase end-to-end run
    sweep     long-format CSV over (tau, sensing target, lambda_p) cells

Only the CLI converts units: SNRs are given in dB here and become linear
inside PhyParams.  Outputs are deterministic functions of the config
(seeds included): no timestamps, fixed row order, shortest-roundtrip
float formatting.  Exit codes: 0 success (an infeasible optimization is
still a success), 2 config error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Sequence

import yaml

from .errors import CogAccessError, ConfigError, DomainError, PrimaryUnstableError
from .optimizer import (
    Channel,
    FixedFalseAlarm,
    FixedMisdetection,
    FixedSensing,
    FixedThreshold,
    OptimizationRequest,
    OptimizationResult,
    TargetMode,
    default_b_s_grid,
    default_tau_grid,
    operating_points,
    optimize_with_margin,
    primary_delay,
    trace_region,
)
from .phy import LinkSuccess, PhyParams, SensingPoint, link_success
from .schemes import SchemeConfig, Variant, service_rates
from .sim import SimConfig, SimMode, measure_stability, run, write_trace_csv
from .estimator import EstimatorMode, learning_then_regular

__all__ = ["main", "load_config", "RunConfig"]

REGION_CSV_SCHEMA = "region/1"
SWEEP_CSV_SCHEMA = "sweep/1"
OPTIMIZE_JSON_SCHEMA = "optimize/1"
SIMULATE_JSON_SCHEMA = "simulate/1"
ESTIMATE_JSON_SCHEMA = "estimate/1"
REGION_JSON_SCHEMA = "region-summary/1"

MAX_SWEEP_CELLS = 10_000_000

_SCHEME_NAMES = [v.value for v in Variant]


# --- config validation helpers -----------------------------------------------

def _as_mapping(obj: Any, name: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{name} must be a mapping, got {type(obj).__name__}")
    return obj


def _reject_unknown(section: dict, allowed: Sequence[str], name: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {name}: {', '.join(unknown)}; allowed: {', '.join(sorted(allowed))}")


def _number(section: dict, key: str, name: str, *, lo: float | None = None,
            hi: float | None = None, default: float | None = None, required: bool = False) -> float | None:
    if key not in section:
        if required:
            raise ConfigError(f"{name}.{key} is required")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}.{key} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{name}.{key} must be finite")
    if lo is not None and value < lo:
        raise ConfigError(f"{name}.{key} must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(f"{name}.{key} must be <= {hi}, got {value}")
    return value


def _integer(section: dict, key: str, name: str, *, lo: int = 0,
             default: int | None = None, required: bool = False) -> int | None:
    if key not in section:
        if required:
            raise ConfigError(f"{name}.{key} is required")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name}.{key} must be an integer, got {value!r}")
    if value < lo:
        raise ConfigError(f"{name}.{key} must be >= {lo}, got {value}")
    return value


def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _grid_values(spec: Any, name: str, *, lo: float, hi: float) -> tuple[float, ...]:
    """A grid is either an explicit list or {start, stop, count}."""
    if isinstance(spec, list):
        if not spec:
            raise ConfigError(f"{name} grid must be non-empty")
        values = []
        for v in spec:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{name} grid entries must be numbers")
            values.append(float(v))
        if values != sorted(set(values)):
            raise ConfigError(f"{name} grid must be strictly increasing")
        if values[0] < lo or values[-1] > hi:
            raise ConfigError(f"{name} grid entries must lie in [{lo}, {hi}]")
        return tuple(values)
    spec = _as_mapping(spec, name)
    _reject_unknown(spec, ["start", "stop", "count"], name)
    start = _number(spec, "start", name, lo=lo, hi=hi, required=True)
    stop = _number(spec, "stop", name, lo=lo, hi=hi, required=True)
    count = _integer(spec, "count", name, lo=2, required=True)
    if stop <= start:
        raise ConfigError(f"{name}.stop must exceed {name}.start")
    step = (stop - start) / (count - 1)
    return tuple(start + i * step for i in range(count))


# --- parsed configuration ------------------------------------------------------

@dataclass
class RunConfig:
    """Validated, unit-converted view of a config document."""

    channel: Channel
    sensing_mode: str
    sensing: dict
    scheme: Variant | None
    schemes: tuple[str, ...]
    access: dict | None
    lambda_p: float
    lambda_s: float
    margin: float
    lambda_p_grid: tuple[float, ...] | None
    tau_grid: tuple[float, ...]
    b_s_grid: tuple[float, ...]
    p_fa_values: tuple[float, ...]
    p_md_values: tuple[float, ...]
    sim: dict
    estimate: dict
    output_dir: Path

    def target_mode(self) -> TargetMode:
        s = self.sensing
        if self.sensing_mode == "fixed_point":
            return FixedSensing(SensingPoint(tau=s["tau"], p_fa=s["p_fa"], p_md=s["p_md"]))
        if self.sensing_mode == "target_pfa":
            return FixedFalseAlarm(s["value"])
        if self.sensing_mode == "target_pmd":
            return FixedMisdetection(s["value"])
        return FixedThreshold(s["epsilon"])

    def request(self, variant: Variant, lambda_p: float | None = None) -> OptimizationRequest:
        return OptimizationRequest(
            variant=variant,
            lambda_p=self.lambda_p if lambda_p is None else lambda_p,
            target_mode=self.target_mode(),
            tau_grid=self.tau_grid if self.sensing_mode != "fixed_point" else (),
            b_s_grid=self.b_s_grid,
            margin=self.margin,
        )

    def sensing_point(self) -> SensingPoint:
        """Resolve the config to one detector operating point (simulate/estimate)."""
        mode = self.target_mode()
        if isinstance(mode, FixedSensing):
            return mode.point
        if not isinstance(self.channel, PhyParams):
            raise ConfigError("tau-dependent sensing modes need the `phy` section, not `channel`")
        tau = self.sensing.get("tau")
        if tau is None:
            raise ConfigError(f"sensing.tau is required to pin a single operating point in mode {self.sensing_mode}")
        pts = operating_points(
            OptimizationRequest(variant=Variant.S1, lambda_p=0.0, target_mode=mode, tau_grid=(tau,)),
            self.channel,
        )
        return SensingPoint(tau=pts[0].tau, p_fa=pts[0].p_fa, p_md=pts[0].p_md)


_TOP_KEYS = [
    "phy", "channel", "sensing", "scheme", "schemes", "access",
    "lambda_p", "lambda_s", "margin", "grids", "sim", "estimate", "output_dir",
]
_PHY_KEYS = [
    "bits_per_packet", "slot_seconds", "bandwidth_hz", "sampling_hz",
    "sense_snr_db", "noise_variance", "secondary_snr_db", "secondary_mean_gain",
    "primary_snr_db", "primary_mean_gain",
]


def _parse_channel(doc: dict) -> Channel:
    if ("phy" in doc) == ("channel" in doc):
        raise ConfigError("exactly one of `phy` (detector + link physics) or `channel` (direct probabilities) is required")
    if "channel" in doc:
        section = _as_mapping(doc["channel"], "channel")
        _reject_unknown(section, ["p_bar_p_pd", "p_bar_s_sd"], "channel")
        return LinkSuccess(
            p_bar_p_pd=_number(section, "p_bar_p_pd", "channel", lo=0.0, hi=1.0, required=True),
            p_bar_s_sd=_number(section, "p_bar_s_sd", "channel", lo=0.0, hi=1.0, required=True),
        )
    section = _as_mapping(doc["phy"], "phy")
    _reject_unknown(section, _PHY_KEYS, "phy")
    return PhyParams(
        b=_number(section, "bits_per_packet", "phy", lo=1e-12, required=True),
        T=_number(section, "slot_seconds", "phy", lo=1e-12, required=True),
        W=_number(section, "bandwidth_hz", "phy", lo=1e-12, required=True),
        f_s=_number(section, "sampling_hz", "phy", lo=1e-12, required=True),
        gamma_sense=_db_to_linear(_number(section, "sense_snr_db", "phy", required=True)),
        sigma_u2=_number(section, "noise_variance", "phy", lo=1e-12, default=1.0),
        gamma_s_sd=_db_to_linear(_number(section, "secondary_snr_db", "phy", required=True)),
        sigma2_s_sd=_number(section, "secondary_mean_gain", "phy", lo=1e-12, default=1.0),
        gamma_p_pd=_db_to_linear(_number(section, "primary_snr_db", "phy", required=True)),
        sigma2_p_pd=_number(section, "primary_mean_gain", "phy", lo=1e-12, default=1.0),
    )


def _parse_sensing(doc: dict) -> tuple[str, dict]:
    section = _as_mapping(doc.get("sensing", {"mode": "fixed_point", "tau": 0.0, "p_fa": 0.0, "p_md": 1.0}), "sensing")
    mode = section.get("mode")
    if mode == "fixed_point":
        _reject_unknown(section, ["mode", "tau", "p_fa", "p_md"], "sensing")
        return mode, {
            "tau": _number(section, "tau", "sensing", lo=0.0, required=True),
            "p_fa": _number(section, "p_fa", "sensing", lo=0.0, hi=1.0, required=True),
            "p_md": _number(section, "p_md", "sensing", lo=0.0, hi=1.0, required=True),
        }
    if mode in ("target_pfa", "target_pmd"):
        _reject_unknown(section, ["mode", "value", "tau"], "sensing")
        out = {"value": _number(section, "value", "sensing", lo=1e-12, hi=1.0 - 1e-12, required=True)}
        if "tau" in section:
            out["tau"] = _number(section, "tau", "sensing", lo=1e-12)
        return mode, out
    if mode == "threshold":
        _reject_unknown(section, ["mode", "epsilon", "tau"], "sensing")
        out = {"epsilon": _number(section, "epsilon", "sensing", lo=1e-12, required=True)}
        if "tau" in section:
            out["tau"] = _number(section, "tau", "sensing", lo=1e-12)
        return mode, out
    raise ConfigError(f"sensing.mode must be one of fixed_point|target_pfa|target_pmd|threshold, got {mode!r}")


def parse_config(doc: dict) -> RunConfig:
    doc = _as_mapping(doc, "config")
    _reject_unknown(doc, _TOP_KEYS, "config")
    channel = _parse_channel(doc)
    sensing_mode, sensing = _parse_sensing(doc)

    scheme = None
    if "scheme" in doc:
        if doc["scheme"] not in _SCHEME_NAMES:
            raise ConfigError(f"scheme must be one of {_SCHEME_NAMES}, got {doc['scheme']!r}")
        scheme = Variant(doc["scheme"])

    schemes = doc.get("schemes", _SCHEME_NAMES + ["UNION"])
    if not isinstance(schemes, list) or not schemes:
        raise ConfigError("schemes must be a non-empty list")
    for name in schemes:
        if name not in _SCHEME_NAMES + ["UNION"]:
            raise ConfigError(f"schemes entries must be in {_SCHEME_NAMES + ['UNION']}, got {name!r}")

    access = None
    if "access" in doc:
        section = _as_mapping(doc["access"], "access")
        _reject_unknown(section, ["a_s", "b_s", "optimal"], "access")
        optimal = section.get("optimal", False)
        if not isinstance(optimal, bool):
            raise ConfigError("access.optimal must be a boolean")
        if optimal:
            access = {"optimal": True}
        else:
            access = {
                "optimal": False,
                "a_s": _number(section, "a_s", "access", lo=0.0, hi=1.0, required=True),
                "b_s": _number(section, "b_s", "access", lo=0.0, hi=1.0, default=0.0),
            }

    grids = _as_mapping(doc.get("grids", {}), "grids")
    _reject_unknown(grids, ["lambda_p", "tau", "b_s", "p_fa", "p_md"], "grids")

    lambda_p_grid = None
    if "lambda_p" in grids:
        lambda_p_grid = _grid_values(grids["lambda_p"], "grids.lambda_p", lo=0.0, hi=1.0)

    slot = channel.T if isinstance(channel, PhyParams) else 1.0
    if "tau" in grids:
        spec = grids["tau"]
        if isinstance(spec, dict) and set(spec) == {"count"}:
            tau_grid = default_tau_grid(slot, _integer(spec, "count", "grids.tau", lo=2, required=True))
        else:
            tau_grid = _grid_values(spec, "grids.tau", lo=0.0, hi=slot)
    else:
        tau_grid = default_tau_grid(slot)

    if "b_s" in grids:
        spec = grids["b_s"]
        if isinstance(spec, dict) and set(spec) == {"count"}:
            b_s_grid = default_b_s_grid(_integer(spec, "count", "grids.b_s", lo=2, required=True))
        else:
            b_s_grid = _grid_values(spec, "grids.b_s", lo=0.0, hi=1.0)
    else:
        b_s_grid = default_b_s_grid()

    p_fa_values = _grid_values(grids["p_fa"], "grids.p_fa", lo=0.0, hi=1.0) if "p_fa" in grids else ()
    p_md_values = _grid_values(grids["p_md"], "grids.p_md", lo=0.0, hi=1.0) if "p_md" in grids else ()

    sim_section = _as_mapping(doc.get("sim", {}), "sim")
    _reject_unknown(sim_section, ["slots", "seed", "mode", "feedback_error", "record_traces"], "sim")
    sim_mode = sim_section.get("mode", "original")
    if sim_mode not in ("original", "dominant"):
        raise ConfigError(f"sim.mode must be original|dominant, got {sim_mode!r}")
    record = sim_section.get("record_traces", False)
    if not isinstance(record, bool):
        raise ConfigError("sim.record_traces must be a boolean")
    sim = {
        "slots": _integer(sim_section, "slots", "sim", lo=1, default=100_000),
        "seed": _integer(sim_section, "seed", "sim", lo=0, default=0),
        "mode": SimMode(sim_mode),
        "feedback_error": _number(sim_section, "feedback_error", "sim", lo=0.0, hi=0.999999, default=0.0),
        "record_traces": record,
    }

    est_section = _as_mapping(doc.get("estimate", {}), "estimate")
    _reject_unknown(est_section, ["lp_slots", "rp_slots", "estimator_mode", "margin"], "estimate")
    est_mode = est_section.get("estimator_mode", "unbiased")
    if est_mode not in ("paper", "unbiased"):
        raise ConfigError(f"estimate.estimator_mode must be paper|unbiased, got {est_mode!r}")
    est_margin = None
    if est_section.get("margin") is not None and "margin" in est_section:
        est_margin = _number(est_section, "margin", "estimate", lo=0.0)
    estimate_cfg = {
        "lp_slots": _integer(est_section, "lp_slots", "estimate", lo=1, default=10_000),
        "rp_slots": _integer(est_section, "rp_slots", "estimate", lo=10, default=100_000),
        "estimator_mode": EstimatorMode(est_mode),
        "margin": est_margin,
    }

    output_dir = doc.get("output_dir", "out")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir must be a string path")

    return RunConfig(
        channel=channel,
        sensing_mode=sensing_mode,
        sensing=sensing,
        scheme=scheme,
        schemes=tuple(schemes),
        access=access,
        lambda_p=_number(doc, "lambda_p", "config", lo=0.0, hi=1.0, default=0.0),
        lambda_s=_number(doc, "lambda_s", "config", lo=0.0, hi=1.0, default=0.0),
        margin=_number(doc, "margin", "config", lo=0.0, default=0.0),
        lambda_p_grid=lambda_p_grid,
        tau_grid=tau_grid,
        b_s_grid=b_s_grid,
        p_fa_values=p_fa_values,
        p_md_values=p_md_values,
        sim=sim,
        estimate=estimate_cfg,
        output_dir=Path(output_dir),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(doc if doc is not None else {})


# --- output helpers ------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def _jsonable(obj: Any) -> Any:
    """JSON-safe copy: non-finite floats become strings, dataclasses dicts."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "value") and isinstance(obj, (Variant, SimMode, EstimatorMode)):
        return obj.value
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable(asdict(obj))
    if hasattr(obj, "_asdict"):
        return _jsonable(obj._asdict())
    return str(obj)


def _emit_json(payload: dict) -> None:
    print(json.dumps(_jsonable(payload), indent=2, sort_keys=True))


def _result_payload(result: OptimizationResult) -> dict:
    best = None
    if result.best is not None:
        best = {
            "variant": result.best.variant.value,
            "a_s": result.best.a_s,
            "b_s": result.best.b_s,
            "tau": result.best.sensing.tau,
            "p_fa": result.best.sensing.p_fa,
            "p_md": result.best.sensing.p_md,
        }
    return {
        "feasible": result.feasible,
        "lambda_s_max": result.lambda_s_max,
        "best": best,
        "designed_delay_bound": result.designed_delay_bound,
        "per_tau": [
            {"tau": r.tau, "a_s": r.a_s, "b_s": r.b_s, "lambda_s": r.lambda_s, "feasible": r.feasible}
            for r in result.per_tau
        ],
    }


# --- subcommands -----------------------------------------------------------------

def cmd_region(cfg: RunConfig) -> int:
    if cfg.lambda_p_grid is None:
        raise ConfigError("region needs grids.lambda_p")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    summary: dict[str, Any] = {"schema": REGION_JSON_SCHEMA, "files": {}, "max_boundary": {}}
    base = cfg.request(Variant.S2)
    for name in cfg.schemes:
        curve = trace_region(name if name == "UNION" else Variant(name), cfg.lambda_p_grid, base, cfg.channel)
        path = cfg.output_dir / f"region_{name}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda_p", "lambda_s", "scheme", "tau", "a_s", "b_s"])
            for p in curve.points:
                writer.writerow([_fmt(p.lambda_p), _fmt(p.lambda_s), p.scheme, _fmt(p.tau), _fmt(p.a_s), _fmt(p.b_s)])
        summary["files"][name] = str(path)
        summary["max_boundary"][name] = max(p.lambda_s for p in curve.points)
    summary["csv_schema"] = REGION_CSV_SCHEMA
    summary["points_per_curve"] = len(cfg.lambda_p_grid)
    _emit_json(summary)
    return 0


def cmd_optimize(cfg: RunConfig) -> int:
    if cfg.scheme is None:
        raise ConfigError("optimize needs a `scheme`")
    req = cfg.request(cfg.scheme)
    result = optimize_with_margin(req, cfg.channel)
    payload = _result_payload(result)
    payload["schema"] = OPTIMIZE_JSON_SCHEMA
    payload["lambda_p"] = cfg.lambda_p
    payload["margin"] = cfg.margin
    _emit_json(payload)
    return 0


def _resolve_scheme_config(cfg: RunConfig) -> tuple[SchemeConfig, dict]:
    """Scheme + access probabilities for a single simulation run."""
    if cfg.scheme is None:
        raise ConfigError("simulate/estimate need a `scheme`")
    if cfg.scheme is Variant.S0:
        point = SensingPoint(tau=0.0, p_fa=0.0, p_md=1.0)
    else:
        point = cfg.sensing_point()
        if point.tau == 0.0:
            raise ConfigError("sensing.tau must be > 0 for sensing schemes (use scheme S0 for no sensing)")
    note: dict[str, Any] = {}
    if cfg.scheme is Variant.SC:
        return SchemeConfig(variant=cfg.scheme, a_s=1.0, b_s=0.0, sensing=point), note
    if cfg.access is None:
        raise ConfigError("simulate needs an `access` section (fixed a_s/b_s or optimal: true)")
    if cfg.access["optimal"]:
        req = OptimizationRequest(
            variant=cfg.scheme,
            lambda_p=cfg.lambda_p,
            target_mode=FixedSensing(point),
            b_s_grid=cfg.b_s_grid,
            margin=cfg.margin,
        )
        result = optimize_with_margin(req, cfg.channel)
        if not result.feasible:
            raise ConfigError("optimal access requested but the problem is infeasible at this lambda_p")
        note["optimized"] = _result_payload(result)
        best = result.best
        return SchemeConfig(variant=cfg.scheme, a_s=best.a_s, b_s=best.b_s, sensing=point), note
    b_s = cfg.access["b_s"] if cfg.scheme is Variant.S2 else 0.0
    return SchemeConfig(variant=cfg.scheme, a_s=cfg.access["a_s"], b_s=b_s, sensing=point), note


def cmd_simulate(cfg: RunConfig) -> int:
    scheme, note = _resolve_scheme_config(cfg)
    sim_cfg = SimConfig(
        slots=cfg.sim["slots"],
        seed=cfg.sim["seed"],
        lambda_p=cfg.lambda_p,
        lambda_s=cfg.lambda_s,
        scheme=scheme,
        phy=cfg.channel,
        mode=cfg.sim["mode"],
        feedback_error=cfg.sim["feedback_error"],
        record_traces=cfg.sim["record_traces"],
    )
    result = run(sim_cfg)

    links = link_success(cfg.channel, scheme.sensing.tau)
    analytic: dict[str, Any] = {}
    try:
        rates = service_rates(scheme, links, cfg.lambda_p)
        analytic = {
            "mu_p": rates.mu_p,
            "mu_s": rates.mu_s,
            "p_empty": rates.p_empty,
            "primary_delay": primary_delay(cfg.lambda_p, rates.mu_p),
            "abs_diff_mu_p": abs(result.empirical_mu_p - rates.mu_p),
            "abs_diff_mu_s": (
                abs(result.empirical_mu_s - rates.mu_s)
                if cfg.sim["mode"] is SimMode.DOMINANT else None
            ),
            "abs_diff_p_empty": abs(result.empirical_p_empty - rates.p_empty),
        }
    except PrimaryUnstableError:
        analytic = {"note": "primary unstable at this lambda_p: closed-form rates undefined"}

    payload: dict[str, Any] = {
        "schema": SIMULATE_JSON_SCHEMA,
        "mode": sim_cfg.mode,
        "slots": sim_cfg.slots,
        "seed": sim_cfg.seed,
        "scheme": {
            "variant": scheme.variant,
            "a_s": scheme.a_s,
            "b_s": scheme.b_s,
            "tau": scheme.sensing.tau,
            "p_fa": scheme.sensing.p_fa,
            "p_md": scheme.sensing.p_md,
        },
        "empirical": {
            "mu_p": result.empirical_mu_p,
            "mu_p_se": result.empirical_mu_p_se,
            "mu_s": result.empirical_mu_s,
            "mu_s_se": result.empirical_mu_s_se,
            "p_empty": result.empirical_p_empty,
            "mean_primary_delay": result.mean_primary_delay,
            "secondary_throughput": result.secondary_departures / result.slots,
        },
        "analytic": analytic,
        "feedback_counts": result.feedback_counts,
    }
    payload.update(note)

    if sim_cfg.slots >= 10_000:
        probe = measure_stability(sim_cfg, window=sim_cfg.slots)
        payload["stability"] = {
            "stable": probe.stable,
            "drift": probe.drift,
            "terminal_queue": probe.terminal_queue,
        }
    else:
        payload["stability"] = {"note": "slots < 1e4: stability window too short"}

    if sim_cfg.record_traces:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        trace_path = cfg.output_dir / "trace.csv"
        write_trace_csv(result.trace, str(trace_path))
        payload["trace_file"] = str(trace_path)
    _emit_json(payload)
    return 0


def cmd_estimate(cfg: RunConfig) -> int:
    scheme, _ = _resolve_scheme_config(cfg)
    template = SimConfig(
        slots=cfg.estimate["rp_slots"],
        seed=cfg.sim["seed"],
        lambda_p=cfg.lambda_p,
        lambda_s=cfg.lambda_s,
        scheme=scheme,
        phy=cfg.channel,
        mode=cfg.sim["mode"],
        feedback_error=cfg.sim["feedback_error"],
    )
    report = learning_then_regular(
        cfg.estimate["lp_slots"],
        cfg.estimate["rp_slots"],
        template,
        mode=cfg.estimate["estimator_mode"],
        margin=cfg.estimate["margin"],
        b_s_grid=cfg.b_s_grid,
    )
    est = report.estimates
    payload = {
        "schema": ESTIMATE_JSON_SCHEMA,
        "estimates": {
            "lambda_p_est": est.lambda_p_est,
            "p_bar_p_pd_est": est.p_bar_p_pd_est,
            "mu_p_est": est.mu_p_est,
            "p_nonempty_est": est.p_nonempty_est,
            "lambda_p_se": est.lambda_p_se,
            "recommended_mu_pe": est.recommended_mu_pe,
            "estimator_mode": est.estimator_mode,
            "link_estimate_available": est.link_estimate_available,
        },
        "margin": report.margin,
        "policy": {
            "variant": report.policy.variant,
            "a_s": report.policy.a_s,
            "b_s": report.policy.b_s,
            "tau": report.policy.sensing.tau,
        },
        "fallback_silent": report.fallback_silent,
        "regular_phase": {
            "slots": report.rp_result.slots,
            "primary_stable": report.primary_stable,
            "primary_drift": report.primary_drift,
            "secondary_throughput": report.secondary_throughput,
            "empirical_mu_p": report.rp_result.empirical_mu_p,
        },
    }
    _emit_json(payload)
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.lambda_p_grid is None:
        raise ConfigError("sweep needs grids.lambda_p")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)

    if cfg.sensing_mode == "target_pfa":
        targets = [("p_fa", v) for v in (cfg.p_fa_values or (cfg.sensing["value"],))]
    elif cfg.sensing_mode == "target_pmd":
        targets = [("p_md", v) for v in (cfg.p_md_values or (cfg.sensing["value"],))]
    elif cfg.sensing_mode == "threshold":
        targets = [("epsilon", cfg.sensing["epsilon"])]
    else:
        targets = [("fixed", 0.0)]

    sweep_schemes = [s for s in cfg.schemes if s != "UNION"] or ["S2", "S0"]
    sensing_schemes = [s for s in sweep_schemes if s != "S0"]
    n_tau = 1 if cfg.sensing_mode == "fixed_point" else len(cfg.tau_grid)
    cells = len(sensing_schemes) * len(targets) * n_tau * len(cfg.lambda_p_grid)
    if "S0" in sweep_schemes:
        cells += len(cfg.lambda_p_grid)
    if cells > MAX_SWEEP_CELLS:
        raise ConfigError(
            f"sweep would evaluate {cells} cells (> {MAX_SWEEP_CELLS}); "
            "shrink grids.lambda_p, grids.tau, or the target value lists"
        )

    path = cfg.output_dir / "sweep.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["scheme", "target_kind", "target_value", "tau", "p_fa", "p_md",
             "lambda_p", "lambda_s", "a_s", "b_s", "feasible"]
        )
        rows = 0
        for scheme_name in sweep_schemes:
            if scheme_name == "S0":
                continue
            variant = Variant(scheme_name)
            for kind, value in targets:
                if kind == "p_fa":
                    mode: TargetMode = FixedFalseAlarm(value)
                elif kind == "p_md":
                    mode = FixedMisdetection(value)
                elif kind == "epsilon":
                    mode = FixedThreshold(value)
                else:
                    mode = cfg.target_mode()
                taus = (0.0,) if kind == "fixed" else cfg.tau_grid
                for tau in taus:
                    for lam in cfg.lambda_p_grid:
                        req = OptimizationRequest(
                            variant=variant,
                            lambda_p=lam,
                            target_mode=mode,
                            tau_grid=() if kind == "fixed" else (tau,),
                            b_s_grid=cfg.b_s_grid,
                            margin=cfg.margin,
                        )
                        result = optimize_with_margin(req, cfg.channel)
                        row = result.per_tau[0]
                        pt = result.best.sensing if result.best is not None else None
                        writer.writerow([
                            scheme_name, kind, _fmt(value), _fmt(row.tau),
                            _fmt(pt.p_fa) if pt else "", _fmt(pt.p_md) if pt else "",
                            _fmt(lam), _fmt(row.lambda_s), _fmt(row.a_s), _fmt(row.b_s),
                            int(row.feasible),
                        ])
                        rows += 1
        if "S0" in sweep_schemes:
            for lam in cfg.lambda_p_grid:
                req = OptimizationRequest(
                    variant=Variant.S0, lambda_p=lam, target_mode=cfg.target_mode(), margin=cfg.margin
                )
                result = optimize_with_margin(req, cfg.channel)
                row = result.per_tau[0]
                writer.writerow([
                    "S0", "none", _fmt(0.0), _fmt(0.0), _fmt(0.0), _fmt(1.0),
                    _fmt(lam), _fmt(row.lambda_s), _fmt(row.a_s), _fmt(row.b_s), int(row.feasible),
                ])
                rows += 1
    _emit_json({"schema": SWEEP_CSV_SCHEMA, "file": str(path), "rows": rows, "cells": cells})
    return 0


# --- entry point -----------------------------------------------------------------

_COMMANDS = {
    "region": cmd_region,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "sweep": cmd_sweep,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cogaccess",
        description="Spectrum-access policies, stability regions and Monte Carlo validation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("-c", "--config", required=True, help="YAML or JSON config document")
        p.add_argument("--seed", type=int, default=None, help="override sim.seed")
        p.add_argument("--output-dir", default=None, help="override output_dir")
        p.add_argument("--mode", choices=["original", "dominant"], default=None, help="override sim.mode")
        p.add_argument("--margin", type=float, default=None, help="override the protection margin")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.sim["seed"] = args.seed
        if args.output_dir is not None:
            cfg.output_dir = Path(args.output_dir)
        if args.mode is not None:
            cfg.sim["mode"] = SimMode(args.mode)
        if args.margin is not None:
            if args.margin < 0.0:
                raise ConfigError("--margin must be >= 0")
            cfg.margin = args.margin
        return _COMMANDS[args.command](cfg)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CogAccessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
