"""Scenario parsing, the run/report pipeline, and the command line."""
from __future__ import annotations

import json
from pathlib import Path

import pytest

import kinokit.harness_cli as hc
from kinokit.harness_cli import (
    Report,
    Scenario,
    ScenarioError,
    default_checks,
    load_scenario,
    main,
    reference_scenario,
    run,
    scenario_from_dict,
)
from kinokit.params_profiles import ModelParams

FIXTURES = Path(__file__).parent / "fixtures"


def minimal(**over) -> dict:
    data = {
        "seed": 42,
        "params": {"d": 3, "s": 0.25, "gamma": 0.0},
        "profile": {
            "components": [{"kind": "gaussian", "mass": 1.0, "temperature": 1.0}]
        },
        "checks": ["tail_decay", "da"],
    }
    data.update(over)
    return data


def fast_scenario(**over) -> Scenario:
    return scenario_from_dict(minimal(**over))


def test_minimal_scenario_defaults():
    scn = fast_scenario()
    assert scn.name == "scenario"
    assert scn.seed == 42
    assert scn.hydro.M0 == 10.0
    assert scn.sweep.v0_magnitudes == (2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
    assert scn.tolerance_scale == 1.0
    assert scn.test_function is None


def test_default_checks_by_mode():
    m = ModelParams(d=3, s=0.25, gamma=0.0)
    assert "cancel2" not in default_checks(m)
    strong = ModelParams(d=3, s=0.75, gamma=-0.5)
    assert "cancel2" in default_checks(strong)
    carl = ModelParams(d=3, s=0.25, gamma=0.0, kernel_mode="carleman")
    assert default_checks(carl) == ("tail_decay", "da")


@pytest.mark.parametrize(
    "mutate, field_hint",
    [
        (lambda d: d.update(bogus=1), "bogus"),
        (lambda d: d.pop("seed"), "seed"),
        (lambda d: d.update(seed="abc"), "seed"),
        (lambda d: d["params"].pop("s"), "params"),
        (lambda d: d["params"].update(s=2.0), "params"),
        (lambda d: d.update(checks=["nope"]), "checks"),
        (lambda d: d.update(checks=["cancel2"]), "checks"),
        (lambda d: d.update(overrides=[1]), "overrides"),
        (lambda d: d.update(overrides={"nope": {}}), "overrides.nope"),
        (lambda d: d.update(n_mc=0), "n_mc"),
        (lambda d: d.update(tolerance_scale=0.0), "tolerance_scale"),
        (
            lambda d: d["profile"]["components"][0].update(kind="mystery"),
            "kind",
        ),
        (lambda d: d["profile"].update(components=[]), "components"),
    ],
)
def test_scenario_validation_errors(mutate, field_hint):
    data = minimal()
    mutate(data)
    with pytest.raises(ScenarioError) as exc:
        scenario_from_dict(data)
    assert field_hint in str(exc.value)


def test_carleman_rejects_model_only_checks():
    data = minimal(checks=["nondeg1"])
    data["params"]["kernel_mode"] = "carleman"
    with pytest.raises(ScenarioError, match="model-mode only"):
        scenario_from_dict(data)


def test_gs_needs_moderate_kappa():
    data = minimal(checks=["gs_coercivity"])
    data["params"].update(gamma=1.0, s=0.75)  # gamma + 2s = 2.5
    with pytest.raises(ScenarioError, match="gs_coercivity"):
        scenario_from_dict(data)


def test_conv_checks_need_gaussian_mixture():
    data = minimal(checks=["cancel_conv"])
    data["profile"]["components"] = [
        {"kind": "bump", "center": [0.0, 0.0, 0.0], "radius": 1.0, "amplitude": 1.0}
    ]
    with pytest.raises(ScenarioError, match="Gaussian"):
        scenario_from_dict(data)


def test_profile_dimension_must_match():
    data = minimal()
    data["profile"]["components"] = [
        {"kind": "gaussian", "mass": 1.0, "temperature": 1.0, "drift": [0.0, 0.0]}
    ]
    with pytest.raises(ScenarioError, match="dimension"):
        scenario_from_dict(data)


def test_to_dict_roundtrip_and_digest():
    scn = fast_scenario(name="rt", tolerance_scale=2.0)
    again = scenario_from_dict(scn.to_dict())
    assert again == scn
    assert again.digest() == scn.digest()
    other = fast_scenario(name="rt", seed=43, tolerance_scale=2.0)
    assert other.digest() != scn.digest()


def test_load_scenario_toml():
    scn = load_scenario(FIXTURES / "model_small.toml")
    assert scn.name == "model-small"
    assert scn.checks == ("tail_decay", "da")
    assert scn.sweep.n_dirs == 256


def test_load_scenario_json():
    scn = load_scenario(FIXTURES / "scenario.json")
    assert scn.name == "json-mixture"
    assert len(scn.profile.components) == 2
    assert scn.test_function is not None
    assert scn.tolerance_scale == 1.5


def test_load_scenario_carleman():
    scn = load_scenario(FIXTURES / "carleman.toml")
    assert scn.params.kernel_mode == "carleman"
    assert scn.checks == ("tail_decay", "da")


def test_load_scenario_missing_and_malformed(tmp_path):
    with pytest.raises(ScenarioError, match="no such file"):
        load_scenario(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("= not toml at all [")
    with pytest.raises(ScenarioError, match="parse error"):
        load_scenario(bad)


def test_reference_scenario_wiring():
    scn = reference_scenario(-0.5, 0.75, checks=("tail_decay",))
    assert scn.params.gamma == -0.5
    assert scn.params.s == 0.75
    assert scn.checks == ("tail_decay",)
    flat = reference_scenario(0.0, 0.25, d=2)
    assert flat.sweep.n_dirs == 512


@pytest.fixture(scope="module")
def small_report():
    scn = scenario_from_dict(
        {
            "seed": 42,
            "params": {"d": 3, "s": 0.25, "gamma": 0.0},
            "profile": {
                "components": [{"kind": "gaussian", "mass": 1.0, "temperature": 1.0}]
            },
            "checks": ["tail_decay", "da"],
        },
        name_default="small",
    )
    return scn, run(scn)


def test_run_report_shape(small_report):
    scn, rep = small_report
    assert isinstance(rep, Report)
    assert rep.scenario_digest == scn.digest()
    assert rep.seed == 42
    assert {r.check_id for r in rep.results} == {"tail_decay", "da"}
    assert rep.all_passed
    summ = rep.summary()
    assert summ["n_passed"] == 2 and summ["n_failed"] == 0
    assert type(summ["n_passed"]) is int


def test_run_worker_count_invariant_bytes(small_report):
    scn, rep1 = small_report
    rep8 = run(scn, workers=8)
    a = hc._canonical_json(rep1.to_jsonable())
    b = hc._canonical_json(rep8.to_jsonable())
    assert a == b


def test_report_jsonable_is_plain_json(small_report):
    _, rep = small_report
    text = json.dumps(rep.to_jsonable())  # no numpy types may remain
    assert "tail_decay" in text


def test_tolerance_scale_tightening_fails():
    scn = fast_scenario(tolerance_scale=1e-9)
    rep = run(scn)
    assert not rep.all_passed
    loose = fast_scenario(tolerance_scale=1e6)
    assert run(loose).all_passed


def test_emit_files(small_report, tmp_path):
    _, rep = small_report
    written = hc.emit(rep, tmp_path)
    names = {p.name for p in written}
    assert "report.json" in names
    assert "report.csv" in names
    loaded = json.loads((tmp_path / "report.json").read_text())
    assert loaded["scenario_digest"] == rep.scenario_digest
    assert "wall_clock_s" not in json.dumps(loaded)


def test_emit_byte_identical_across_workers(small_report, tmp_path):
    scn, rep1 = small_report
    rep8 = run(scn, workers=8)
    hc.emit(rep1, tmp_path / "w1")
    hc.emit(rep8, tmp_path / "w8")
    b1 = (tmp_path / "w1" / "report.json").read_bytes()
    b8 = (tmp_path / "w8" / "report.json").read_bytes()
    assert b1 == b8


def test_cli_distance(capsys):
    rc = main(
        ["distance", "--s", "0.5", "--z1", "0,0,0,0,0,0,0", "--z2", "0,0,0,0,0.8,0,0"]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "0.4" in out


def test_cli_kernel(capsys):
    rc = main(
        ["kernel", "--gamma", "0", "--s", "0.25", "--v", "0,0,0", "--vprime", "1,0,0"]
    )
    assert rc == 0
    assert "0.6166" in capsys.readouterr().out


def test_cli_hydro(capsys):
    rc = main(["hydro", "--gamma", "0", "--s", "0.25"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "mass" in out and "energy" in out


def test_cli_verify_with_config(tmp_path, capsys):
    rc = main(
        [
            "verify",
            "--config",
            str(FIXTURES / "model_small.toml"),
            "--out",
            str(tmp_path),
        ]
    )
    assert rc == 0
    assert (tmp_path / "report.json").exists()
    out = capsys.readouterr().out
    assert "PASS" in out


def test_cli_verify_flag_scenario(tmp_path, capsys):
    rc = main(
        [
            "verify",
            "--gamma", "0.0",
            "--s", "0.25",
            "--checks", "tail_decay,da",
            "--out", str(tmp_path),
        ]
    )
    assert rc == 0
    assert (tmp_path / "report.json").exists()


def test_cli_config_flag_conflict(tmp_path):
    rc = main(
        [
            "verify",
            "--config", str(FIXTURES / "model_small.toml"),
            "--gamma", "1.0",
            "--out", str(tmp_path),
        ]
    )
    assert rc == 2


def test_cli_bad_config_returns_2(tmp_path):
    rc = main(["verify", "--config", str(FIXTURES / "bad_check.toml"), "--out", str(tmp_path)])
    assert rc == 2
    rc = main(["verify", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path)])
    assert rc == 2


def test_cli_report_rerender(tmp_path, capsys):
    rc = main(
        [
            "verify",
            "--config", str(FIXTURES / "model_small.toml"),
            "--out", str(tmp_path),
        ]
    )
    assert rc == 0
    capsys.readouterr()
    rc = main(
        [
            "report",
            "--in", str(tmp_path / "report.json"),
            "--out", str(tmp_path / "again"),
            "--format", "text",
        ]
    )
    assert rc == 0
    assert "tail_decay" in capsys.readouterr().out


def test_cli_sweep(tmp_path, capsys):
    rc = main(
        [
            "sweep",
            "--gamma", "0.0",
            "--s", "0.25",
            "--checks", "tail_decay",
            "--v0", "4,8,16",
            "--out", str(tmp_path),
        ]
    )
    assert rc == 0


def test_cli_workers_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("KINOKIT_WORKERS", "4")
    rc = main(
        [
            "verify",
            "--config", str(FIXTURES / "model_small.toml"),
            "--out", str(tmp_path),
        ]
    )
    assert rc == 0
