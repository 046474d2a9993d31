"""Configuration-driven harness and command line entry point.

A scenario file (TOML or JSON) pins everything a run depends on: kernel
parameters, the profile, hydrodynamic gates, the sweep grid, the check
list with per-check overrides, and the root seed. Runs are deterministic
functions of the scenario: results are keyed and sorted, seeds are
derived per check, and the emitted report bytes do not depend on the
worker count. Check failures are recorded, never raised.

Exit codes: 0 all checks passed, 1 at least one failed, 2 configuration
error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import inspect
import json
import math
import os
import sys
import time
import traceback

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from ._results import CheckResult
from .collision_kernel import kernel_eval
from .ellipticity_verifier import (
    SweepGrid,
    check_A0,
    check_bilinear_bounds,
    check_bounded,
    check_cancel_conv,
    check_cancellation,
    check_classK,
    check_cone,
    check_cov_pv,
    check_da_equivalence,
    check_gs_coercivity,
    check_measure_condition,
    check_nondeg1,
    check_tail_decay,
    reference_lambda,
)
from .kinetic_geometry import CovMap, Point, kdistance
from .params_profiles import (
    CompactBump,
    GaussianComponent,
    HydroBounds,
    ModelParams,
    Profile,
    hydro_gate,
    hydro_quantities,
    maxwellian,
)

__all__ = [
    "Scenario",
    "ScenarioError",
    "Report",
    "load_scenario",
    "scenario_from_dict",
    "reference_scenario",
    "run",
    "emit",
    "main",
]

REPORT_VERSION = "1"


class ScenarioError(Exception):
    """Configuration problem; carries the offending field path."""

    def __init__(self, fieldpath: str, message: str):
        super().__init__(f"{fieldpath}: {message}")
        self.fieldpath = fieldpath


@dataclass(frozen=True)
class Scenario:
    """One fully pinned run: everything the checks need, nothing ambient."""

    name: str
    seed: int
    params: ModelParams
    profile: Profile
    hydro: HydroBounds
    sweep: SweepGrid
    checks: tuple[str, ...]
    overrides: dict[str, dict[str, Any]] = field(default_factory=dict)
    test_function: Profile | None = None
    n_mc: int = 200_000
    tolerance_scale: float = 1.0

    def to_dict(self) -> dict[str, Any]:
        """Lossless mapping form; feeding it back through
        scenario_from_dict reproduces an equal scenario."""
        prof = []
        for c in self.profile.components:
            if isinstance(c, GaussianComponent):
                prof.append(
                    {
                        "kind": "gaussian",
                        "mass": c.mass,
                        "temperature": c.temperature,
                        "drift": list(c.drift),
                    }
                )
            else:
                prof.append(
                    {
                        "kind": "bump",
                        "center": list(c.center),
                        "radius": c.radius,
                        "amplitude": c.amplitude,
                        "order": c.order,
                    }
                )
        out: dict[str, Any] = {
            "name": self.name,
            "seed": self.seed,
            "params": {
                "d": self.params.d,
                "s": self.params.s,
                "gamma": self.params.gamma,
                "kernel_mode": self.params.kernel_mode,
                "c_b": self.params.c_b,
                "b_norm": self.params.b_norm,
                "a_cap": self.params.a_cap,
            },
            "profile": {"components": prof},
            "hydro": {
                "m0": self.hydro.m0,
                "M0": self.hydro.M0,
                "E0": self.hydro.E0,
                "H0": self.hydro.H0,
            },
            "sweep": {
                "v0_magnitudes": list(self.sweep.v0_magnitudes),
                "radii": list(self.sweep.radii),
                "n_dirs": self.sweep.n_dirs,
                "seed": self.sweep.seed,
            },
            "checks": list(self.checks),
            "overrides": {k: dict(v) for k, v in sorted(self.overrides.items())},
            "n_mc": self.n_mc,
            "tolerance_scale": self.tolerance_scale,
        }
        if self.test_function is not None:
            tf = []
            for c in self.test_function.components:
                tf.append(
                    {
                        "kind": "gaussian",
                        "mass": c.mass,
                        "temperature": c.temperature,
                        "drift": list(c.drift),
                    }
                )
            out["test_function"] = {"components": tf}
        return out

    def digest(self) -> str:
        return hashlib.sha256(_canonical_json(self.to_dict()).encode()).hexdigest()


def _sanitize(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars unwrap, non-finite floats become
    their repr strings so canonical serialization never fails."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.generic):
        return _sanitize(obj.item())
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _canonical_json(obj: Any) -> str:
    return json.dumps(_sanitize(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def _require(mapping: dict, key: str, fieldpath: str) -> Any:
    if key not in mapping:
        raise ScenarioError(f"{fieldpath}.{key}" if fieldpath else key, "missing required field")
    return mapping[key]


def _parse_profile(section: dict, fieldpath: str, d: int) -> Profile:
    comps_raw = _require(section, "components", fieldpath)
    if not isinstance(comps_raw, list) or not comps_raw:
        raise ScenarioError(f"{fieldpath}.components", "must be a nonempty list")
    comps = []
    for i, c in enumerate(comps_raw):
        fp = f"{fieldpath}.components[{i}]"
        kind = _require(c, "kind", fp)
        try:
            if kind == "gaussian":
                drift = tuple(float(x) for x in c.get("drift", [0.0] * d))
                comps.append(
                    GaussianComponent(
                        float(_require(c, "mass", fp)),
                        float(_require(c, "temperature", fp)),
                        drift,
                    )
                )
            elif kind == "bump":
                comps.append(
                    CompactBump(
                        tuple(float(x) for x in _require(c, "center", fp)),
                        float(_require(c, "radius", fp)),
                        float(_require(c, "amplitude", fp)),
                        int(c.get("order", 4)),
                    )
                )
            else:
                raise ScenarioError(f"{fp}.kind", f"unknown component kind {kind!r}")
        except (TypeError, ValueError) as exc:
            raise ScenarioError(fp, str(exc)) from exc
    try:
        prof = Profile(tuple(comps))
    except ValueError as exc:
        raise ScenarioError(fieldpath, str(exc)) from exc
    if prof.d != d:
        raise ScenarioError(fieldpath, f"component dimension {prof.d} != params.d {d}")
    return prof


def scenario_from_dict(data: dict[str, Any], name_default: str = "scenario") -> Scenario:
    known = {
        "name",
        "seed",
        "params",
        "profile",
        "hydro",
        "sweep",
        "checks",
        "overrides",
        "test_function",
        "n_mc",
        "tolerance_scale",
    }
    for key in data:
        if key not in known:
            raise ScenarioError(key, "unknown top-level field")
    if "seed" not in data:
        raise ScenarioError("seed", "missing required field (runs must pin the seed)")
    try:
        seed = int(data["seed"])
    except (TypeError, ValueError) as exc:
        raise ScenarioError("seed", "must be an integer") from exc

    praw = _require(data, "params", "")
    try:
        params = ModelParams(
            d=int(_require(praw, "d", "params")),
            s=float(_require(praw, "s", "params")),
            gamma=float(_require(praw, "gamma", "params")),
            kernel_mode=str(praw.get("kernel_mode", "model")),
            c_b=float(praw.get("c_b", 1.0)),
            b_norm=float(praw.get("b_norm", 1.0)),
            a_cap=float(praw.get("a_cap", 1e4)),
        )
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError("params", str(exc)) from exc

    profile = _parse_profile(_require(data, "profile", ""), "profile", params.d)

    hraw = data.get("hydro", {"m0": 0.1, "M0": 10.0, "E0": 50.0, "H0": 100.0})
    try:
        hydro = HydroBounds(
            float(_require(hraw, "m0", "hydro")),
            float(_require(hraw, "M0", "hydro")),
            float(_require(hraw, "E0", "hydro")),
            float(_require(hraw, "H0", "hydro")),
        )
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError("hydro", str(exc)) from exc

    sraw = data.get("sweep", {})
    try:
        sweep = SweepGrid(
            v0_magnitudes=tuple(float(x) for x in sraw.get("v0_magnitudes", SweepGrid().v0_magnitudes)),
            radii=tuple(float(x) for x in sraw.get("radii", SweepGrid().radii)),
            n_dirs=int(sraw.get("n_dirs", 2048 if params.d == 3 else 512)),
            seed=int(sraw.get("seed", seed)),
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError("sweep", str(exc)) from exc

    checks = tuple(data.get("checks", default_checks(params)))
    for cid in checks:
        if cid not in CHECK_IDS:
            raise ScenarioError("checks", f"unknown check id {cid!r}")
    if "cancel2" in checks and params.s < 0.5:
        raise ScenarioError("checks", "cancel2 requires s >= 1/2")
    if params.kernel_mode == "carleman":
        bad = sorted(set(checks) & MODEL_ONLY_CHECKS)
        if bad:
            raise ScenarioError("checks", f"model-mode only: {', '.join(bad)}")
    if "gs_coercivity" in checks and not 0.0 <= params.gamma + 2.0 * params.s <= 2.0:
        raise ScenarioError("checks", "gs_coercivity requires gamma+2s in [0,2]")
    needs_closed_conv = {"cancel_conv", "gs_coercivity", "bilinear"}
    if needs_closed_conv & set(checks) and not profile.is_gaussian_mixture:
        raise ScenarioError("checks", "convolution-based checks need a Gaussian-mixture profile")

    overrides = data.get("overrides", {})
    if not isinstance(overrides, dict):
        raise ScenarioError("overrides", "must be a table of per-check tables")
    for cid, kv in overrides.items():
        if cid not in CHECK_IDS:
            raise ScenarioError(f"overrides.{cid}", "unknown check id")
        if not isinstance(kv, dict):
            raise ScenarioError(f"overrides.{cid}", "must be a table")

    test_fn = None
    if "test_function" in data:
        test_fn = _parse_profile(data["test_function"], "test_function", params.d)
        if not test_fn.is_gaussian_mixture:
            raise ScenarioError("test_function", "must be a Gaussian mixture")

    try:
        n_mc = int(data.get("n_mc", 200_000))
        tol_scale = float(data.get("tolerance_scale", 1.0))
    except (TypeError, ValueError) as exc:
        raise ScenarioError("n_mc", str(exc)) from exc
    if n_mc <= 0:
        raise ScenarioError("n_mc", "must be positive")
    if tol_scale <= 0:
        raise ScenarioError("tolerance_scale", "must be positive")

    return Scenario(
        name=str(data.get("name", name_default)),
        seed=seed,
        params=params,
        profile=profile,
        hydro=hydro,
        sweep=sweep,
        checks=checks,
        overrides={k: dict(v) for k, v in overrides.items()},
        test_function=test_fn,
        n_mc=n_mc,
        tolerance_scale=tol_scale,
    )


def load_scenario(path: str | Path) -> Scenario:
    """Parse a TOML or JSON scenario file into a validated Scenario."""
    path = Path(path)
    if not path.exists():
        raise ScenarioError("config", f"no such file: {path}")
    try:
        if path.suffix == ".json":
            data = json.loads(path.read_text())
        else:
            data = tomllib.loads(path.read_text())
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ScenarioError("config", f"parse error: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioError("config", "top level must be a table")
    return scenario_from_dict(data, name_default=path.stem)


MODEL_ONLY_CHECKS = frozenset(
    {
        "nondeg1",
        "bounded1",
        "bounded2",
        "cancel1",
        "cancel2",
        "classK",
        "cone",
        "measure",
        "A0",
        "cov_pv",
        "cancel_conv",
        "gs_coercivity",
    }
)


def default_checks(params: ModelParams) -> tuple[str, ...]:
    """Checks that apply to the parameter triple without opt-in."""
    if params.kernel_mode == "carleman":
        return ("tail_decay", "da")
    out = ["nondeg1", "bounded1", "bounded2", "cancel1", "classK", "cone", "tail_decay", "A0", "da"]
    if params.s >= 0.5:
        out.insert(4, "cancel2")
    out.append("cov_pv")
    return tuple(out)


# ---------------------------------------------------------------------------
# check registry


def _unit_test_function(scn: Scenario) -> Profile:
    return scn.test_function or maxwellian(scn.params.d)


def _scaled(scn: Scenario, value: float, upper: bool) -> float:
    """Tolerance scaling: upper bounds loosen multiplicatively, lower
    bounds tighten by the inverse."""
    return value * scn.tolerance_scale if upper else value / scn.tolerance_scale


def _scale_knob(scn: Scenario, kw: dict, fn: Callable, name: str, upper: bool) -> None:
    """Scale one named bound in place, falling back to the check's own
    signature default so the scenario scale acts without an override.
    A None default (self-calibrating bound) is left alone."""
    if name not in kw:
        kw[name] = inspect.signature(fn).parameters[name].default
    if kw[name] is not None:
        kw[name] = _scaled(scn, float(kw[name]), upper)


def _run_nondeg1(scn: Scenario) -> CheckResult:
    kw = dict(scn.overrides.get("nondeg1", {}))
    _scale_knob(scn, kw, check_nondeg1, "lambda_min", upper=False)
    return check_nondeg1(scn.profile, scn.params, scn.sweep, **kw)


def _run_bounded1(scn: Scenario) -> CheckResult:
    kw = dict(scn.overrides.get("bounded1", {}))
    _scale_knob(scn, kw, check_bounded, "lambda_max", upper=True)
    return check_bounded(scn.profile, scn.params, scn.sweep, which=1, **kw)


def _run_bounded2(scn: Scenario) -> CheckResult:
    kw = dict(scn.overrides.get("bounded2", {}))
    _scale_knob(scn, kw, check_bounded, "lambda_max", upper=True)
    return check_bounded(scn.profile, scn.params, scn.sweep, which=2, **kw)


def _run_cancel1(scn: Scenario) -> CheckResult:
    return check_cancellation(scn.profile, scn.params, scn.sweep, which=1, **scn.overrides.get("cancel1", {}))


def _run_cancel2(scn: Scenario) -> CheckResult:
    return check_cancellation(scn.profile, scn.params, scn.sweep, which=2, **scn.overrides.get("cancel2", {}))


def _run_classK(scn: Scenario) -> CheckResult:
    kw = dict(scn.overrides.get("classK", {}))
    _scale_knob(scn, kw, check_classK, "lambda_min", upper=False)
    return check_classK(scn.profile, scn.params, scn.sweep, **kw)


def _run_cone(scn: Scenario) -> CheckResult:
    kw = dict(scn.overrides.get("cone", {}))
    _scale_knob(scn, kw, check_cone, "width_max", upper=True)
    return check_cone(scn.profile, scn.params, scn.sweep, **kw)


def _run_measure(scn: Scenario) -> CheckResult:
    kw = dict(scn.overrides.get("measure", {}))
    v0_mag = float(kw.pop("v0", 8.0))
    d = scn.params.d
    v0 = np.zeros(d)
    v0[0] = v0_mag
    M = CovMap(scn.params, Point(0.0, np.zeros(d), v0))
    z = Point(0.0, np.zeros(d), np.zeros(d))
    kw.setdefault("lambda_probe", 0.5 * reference_lambda(scn.profile, scn.params, scn.sweep.n_dirs))
    kw.setdefault("seed", scn.seed)
    _scale_knob(scn, kw, check_measure_condition, "mu_min", upper=False)
    return check_measure_condition(scn.profile, scn.params, M, z, **kw)


def _run_A0(scn: Scenario) -> CheckResult:
    return check_A0(scn.profile, scn.params, scn.sweep, **scn.overrides.get("A0", {}))


def _run_da(scn: Scenario) -> CheckResult:
    kw = dict(scn.overrides.get("da", {}))
    kw.setdefault("seed", scn.seed)
    _scale_knob(scn, kw, check_da_equivalence, "band", upper=True)
    return check_da_equivalence(scn.params, **kw)


def _run_gs(scn: Scenario) -> CheckResult:
    kw = dict(scn.overrides.get("gs_coercivity", {}))
    kw.setdefault("seed", scn.seed)
    kw.setdefault("n_mc", scn.n_mc)
    return check_gs_coercivity(scn.profile, scn.params, _unit_test_function(scn), **kw)


def _run_bilinear(scn: Scenario) -> CheckResult:
    kw = dict(scn.overrides.get("bilinear", {}))
    kw.setdefault("seed", scn.seed)
    _scale_knob(scn, kw, check_bilinear_bounds, "c_max", upper=True)
    return check_bilinear_bounds(scn.profile, _unit_test_function(scn), scn.params, **kw)


def _run_tail_decay(scn: Scenario) -> CheckResult:
    kw = dict(scn.overrides.get("tail_decay", {}))
    _scale_knob(scn, kw, check_tail_decay, "exp_tol", upper=True)
    return check_tail_decay(scn.profile, scn.params, **kw)


def _run_cov_pv(scn: Scenario) -> CheckResult:
    kw = dict(scn.overrides.get("cov_pv", {}))
    _scale_knob(scn, kw, check_cov_pv, "exp_slack", upper=True)
    return check_cov_pv(scn.profile, scn.params, **kw)


def _run_cancel_conv(scn: Scenario) -> CheckResult:
    kw = dict(scn.overrides.get("cancel_conv", {}))
    _scale_knob(scn, kw, check_cancel_conv, "rel_tol", upper=True)
    return check_cancel_conv(scn.profile, scn.params, **kw)


CHECK_REGISTRY: dict[str, Callable[[Scenario], CheckResult]] = {
    "nondeg1": _run_nondeg1,
    "bounded1": _run_bounded1,
    "bounded2": _run_bounded2,
    "cancel1": _run_cancel1,
    "cancel2": _run_cancel2,
    "classK": _run_classK,
    "cone": _run_cone,
    "measure": _run_measure,
    "A0": _run_A0,
    "da": _run_da,
    "gs_coercivity": _run_gs,
    "bilinear": _run_bilinear,
    "tail_decay": _run_tail_decay,
    "cov_pv": _run_cov_pv,
    "cancel_conv": _run_cancel_conv,
}
CHECK_IDS = frozenset(CHECK_REGISTRY)


@dataclass
class Report:
    """Run outcome: sorted results plus summary. Wall-clock time is kept
    on the object but excluded from the canonical bytes so reruns with
    different worker counts emit identical files."""

    version: str
    scenario_name: str
    scenario_digest: str
    seed: int
    results: list[CheckResult]
    wall_clock_s: float

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def summary(self) -> dict[str, Any]:
        return {
            "n_checks": len(self.results),
            "n_passed": sum(1 for r in self.results if r.passed),
            "n_failed": sum(1 for r in self.results if not r.passed),
            "all_passed": self.all_passed,
        }

    def to_jsonable(self, include_timing: bool = False) -> dict[str, Any]:
        out = {
            "version": self.version,
            "scenario_name": self.scenario_name,
            "scenario_digest": self.scenario_digest,
            "seed": self.seed,
            "summary": self.summary(),
            "results": [r.to_jsonable() for r in self.results],
        }
        if include_timing:
            out["wall_clock_s"] = self.wall_clock_s
        return _sanitize(out)


def _result_key(r: CheckResult) -> tuple[str, str]:
    return (r.check_id, _canonical_json(r.coords))


def run(scenario: Scenario, workers: int = 1) -> Report:
    """Execute every configured check; failures and crashes become failed
    results, never exceptions. Output is independent of worker count."""
    t0 = time.monotonic()

    def one(cid: str) -> CheckResult:
        try:
            return CHECK_REGISTRY[cid](scenario)
        except Exception:
            tb = traceback.format_exc(limit=4).strip().splitlines()[-1]
            return CheckResult(check_id=cid, passed=False, errors=[tb], notes="check crashed")

    if workers <= 1:
        results = [one(c) for c in scenario.checks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, scenario.checks))
    results.sort(key=_result_key)
    return Report(
        version=REPORT_VERSION,
        scenario_name=scenario.name,
        scenario_digest=scenario.digest(),
        seed=scenario.seed,
        results=results,
        wall_clock_s=time.monotonic() - t0,
    )


def emit(report: Report, out_dir: str | Path, formats: tuple[str, ...] = ("json", "csv")) -> list[Path]:
    """Write report.json (canonical bytes), report.csv (flat measured
    rows), and one series_<check>.csv per check with series data."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        p = out / "report.json"
        p.write_text(_canonical_json(report.to_jsonable()) + "\n")
        written.append(p)
    if "csv" in formats:
        p = out / "report.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["check_id", "passed", "quantity", "value"])
            for r in report.results:
                for key in sorted(r.measured):
                    w.writerow([r.check_id, int(r.passed), key, repr(_sanitize(r.measured[key]))])
        written.append(p)
        for r in report.results:
            if not r.series:
                continue
            cols = sorted({k for row in r.series for k in row})
            p = out / f"series_{r.check_id}.csv"
            with p.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(cols)
                for row in r.series:
                    w.writerow([repr(_sanitize(row[c])) if c in row else "" for c in cols])
            written.append(p)
    return written


def reference_scenario(
    gamma: float, s: float, d: int = 3, seed: int = 42, checks: tuple[str, ...] | None = None
) -> Scenario:
    """Built-in scenario: unit Maxwellian, standard sweep, all applicable
    checks."""
    data = {
        "name": f"reference-d{d}-g{gamma:+g}-s{s:g}",
        "seed": seed,
        "params": {"d": d, "s": s, "gamma": gamma},
        "profile": {"components": [{"kind": "gaussian", "mass": 1.0, "temperature": 1.0}]},
    }
    if checks is not None:
        data["checks"] = list(checks)
    return scenario_from_dict(data)


# ---------------------------------------------------------------------------
# command line


def _add_common(sub: argparse.ArgumentParser, needs_config: bool = True) -> None:
    if needs_config:
        sub.add_argument("--config", required=False, help="scenario file (TOML or JSON)")
        sub.add_argument("--gamma", type=float, default=None, help="kinetic exponent (no --config)")
        sub.add_argument("--s", type=float, default=None, help="fractional order (no --config)")
        sub.add_argument("--dim", type=int, default=None, help="velocity dimension (no --config)")
    sub.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sub.add_argument("--workers", type=int, default=None, help="parallel check workers")
    sub.add_argument("--out", default=".", help="output directory for reports")
    sub.add_argument(
        "--format", default="json,csv", help="comma list of output formats (json,csv)"
    )
    sub.add_argument("--checks", default=None, help="comma list restricting the check set")
    sub.add_argument("--v0", default=None, help="comma list overriding the |v0| sweep")
    sub.add_argument(
        "--tolerance-scale", type=float, default=None, help="loosen (>1) or tighten (<1) tolerances"
    )


def _workers(args: argparse.Namespace) -> int:
    if getattr(args, "workers", None):
        return max(1, args.workers)
    env = os.environ.get("KINOKIT_WORKERS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _apply_cli_overrides(scn: Scenario, args: argparse.Namespace) -> Scenario:
    data = scn.to_dict()
    if args.seed is not None:
        data["seed"] = args.seed
        data["sweep"]["seed"] = args.seed
    if args.checks:
        data["checks"] = [c.strip() for c in args.checks.split(",") if c.strip()]
    if args.v0:
        try:
            mags = sorted(float(x) for x in args.v0.split(","))
        except ValueError as exc:
            raise ScenarioError("v0", "must be a comma list of numbers") from exc
        data["sweep"]["v0_magnitudes"] = mags
    if args.tolerance_scale is not None:
        data["tolerance_scale"] = args.tolerance_scale
    return scenario_from_dict(data, name_default=scn.name)


def _load_for(args: argparse.Namespace) -> Scenario:
    triple = (getattr(args, "gamma", None), getattr(args, "s", None), getattr(args, "dim", None))
    if args.config:
        if any(x is not None for x in triple):
            raise ScenarioError("gamma", "--gamma/--s/--dim conflict with --config")
        scn = load_scenario(args.config)
    else:
        gamma = triple[0] if triple[0] is not None else 0.0
        s = triple[1] if triple[1] is not None else 0.25
        d = triple[2] if triple[2] is not None else 3
        scn = reference_scenario(gamma, s, d=d)
    return _apply_cli_overrides(scn, args)


def _parse_point(text: str, fieldname: str) -> Point:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise ScenarioError(fieldname, "expected comma-separated floats") from exc
    if len(vals) < 3 or len(vals) % 2 == 0:
        raise ScenarioError(fieldname, "expected 2d+1 floats: t, x (d), v (d)")
    d = (len(vals) - 1) // 2
    return Point(vals[0], np.array(vals[1 : 1 + d]), np.array(vals[1 + d :]))


def _print_report(report: Report) -> None:
    for r in report.results:
        status = "PASS" if r.passed else "FAIL"
        head = ", ".join(f"{k}={v:.6g}" for k, v in sorted(r.measured.items())[:3])
        line = f"[{status}] {r.check_id}"
        if head:
            line += f"  ({head})"
        if r.errors:
            line += f"  errors: {'; '.join(r.errors)}"
        print(line)
    s = report.summary()
    print(
        f"{s['n_passed']}/{s['n_checks']} checks passed"
        f"  [{report.wall_clock_s:.1f}s, scenario {report.scenario_name}]"
    )


def _cmd_distance(args: argparse.Namespace) -> int:
    z1 = _parse_point(args.z1, "z1")
    z2 = _parse_point(args.z2, "z2")
    print(f"{kdistance(z1, z2, args.s):.12g}")
    return 0


def _cmd_kernel(args: argparse.Namespace) -> int:
    scn = _load_for(args)
    v = np.array([float(x) for x in args.v.split(",")])
    vp = np.array([float(x) for x in args.vprime.split(",")])
    if v.shape != (scn.params.d,) or vp.shape != (scn.params.d,):
        raise ScenarioError("v", f"velocities must have dimension {scn.params.d}")
    out = kernel_eval(scn.profile, scn.params, v, vp)
    print(f"value={out.value:.12g} error_est={out.error_est:.3g} converged={out.converged} mode={out.mode}")
    return 0


def _cmd_hydro(args: argparse.Namespace) -> int:
    scn = _load_for(args)
    hy = hydro_quantities(scn.profile, scn.params)
    ok = hydro_gate(scn.profile, scn.params, scn.hydro)
    print(f"mass={hy.M:.12g} energy={hy.E:.12g} entropy={hy.H:.12g} gate={'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _cmd_verify(args: argparse.Namespace) -> int:
    formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
    workers = _workers(args)
    if args.all:
        triples = [(0.0, 0.25), (-0.5, 0.75), (1.0, 0.5)]
        any_fail = False
        for gamma, s in triples:
            scn = reference_scenario(gamma, s, seed=args.seed if args.seed is not None else 42)
            scn = _apply_cli_overrides(scn, args)
            report = run(scn, workers=workers)
            emit(report, Path(args.out) / scn.name, formats)
            print(f"== {scn.name} ==")
            _print_report(report)
            any_fail = any_fail or not report.all_passed
        return 1 if any_fail else 0
    scn = _load_for(args)
    report = run(scn, workers=workers)
    emit(report, args.out, formats)
    _print_report(report)
    return 0 if report.all_passed else 1


def _cmd_report(args: argparse.Namespace) -> int:
    path = Path(args.infile)
    if not path.exists():
        raise ScenarioError("in", f"no such file: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError("in", f"parse error: {exc}") from exc
    for key in ("version", "scenario_digest", "results", "summary"):
        if key not in data:
            raise ScenarioError("in", f"not a report file (missing {key})")
    if args.format == "text":
        for r in data["results"]:
            status = "PASS" if r["passed"] else "FAIL"
            print(f"[{status}] {r['check_id']}")
        s = data["summary"]
        print(f"{s['n_passed']}/{s['n_checks']} checks passed")
        return 0 if data["summary"]["all_passed"] else 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    p = out / "report.csv"
    with p.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check_id", "passed", "quantity", "value"])
        for r in data["results"]:
            for key in sorted(r["measured"]):
                w.writerow([r["check_id"], int(r["passed"]), key, repr(r["measured"][key])])
    print(f"wrote {p}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    if not args.v0:
        raise ScenarioError("v0", "sweep requires --v0")
    if not args.checks:
        raise ScenarioError("checks", "sweep requires --checks")
    scn = _load_for(args)
    report = run(scn, workers=_workers(args))
    emit(report, args.out, tuple(f.strip() for f in args.format.split(",")))
    for r in report.results:
        print(f"# {r.check_id}")
        for row in r.series:
            print("  " + "  ".join(f"{k}={v:.6g}" for k, v in sorted(row.items())))
    _print_report(report)
    return 0 if report.all_passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kinokit", description=__doc__.splitlines()[0], allow_abbrev=False
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distance", help="kinetic distance between two points", allow_abbrev=False)
    p.add_argument("--s", type=float, required=True, help="fractional order")
    p.add_argument("--z1", required=True, help="t,x...,v... (2d+1 floats)")
    p.add_argument("--z2", required=True, help="t,x...,v... (2d+1 floats)")
    p.set_defaults(fn=_cmd_distance)

    p = sub.add_parser("kernel", help="evaluate the collision kernel at a pair", allow_abbrev=False)
    _add_common(p)
    p.add_argument("--v", required=True, help="first velocity, comma separated")
    p.add_argument("--vprime", required=True, help="second velocity, comma separated")
    p.set_defaults(fn=_cmd_kernel)

    p = sub.add_parser("hydro", help="hydrodynamic quantities and gate", allow_abbrev=False)
    _add_common(p)
    p.set_defaults(fn=_cmd_hydro)

    p = sub.add_parser("verify", help="run the configured checks", allow_abbrev=False)
    _add_common(p)
    p.add_argument("--all", action="store_true", help="run the built-in acceptance battery")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("report", help="re-render an existing report.json", allow_abbrev=False)
    p.add_argument("--in", dest="infile", required=True, help="path to report.json")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", default="csv", choices=("csv", "text"))
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("sweep", help="run checks over an explicit |v0| grid", allow_abbrev=False)
    _add_common(p)
    p.set_defaults(fn=_cmd_sweep)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
