"""Presets, config files, artifact output, merging, and CLI exit codes."""

import filecmp
import json
from dataclasses import replace

import numpy as np
import pytest

from phaselab.cli_reporting import (
    DIAG_COLUMNS,
    OUT_ENV_VAR,
    Scenario,
    Tolerances,
    _fmt,
    build_preset,
    load_config_file,
    main,
    merge_reports,
    preset_names,
    run_scenario,
)
from phaselab.geometry import DomainSpec, PhaseConfig

EXPECTED_PRESETS = (
    "one_phase_disk",
    "one_phase_annulus",
    "two_phase_concentric",
    "two_phase_displaced",
    "multiphase_discrete",
    "nested_rings_hypothesis_violation",
)


def write_config(path, **overrides):
    cfg = {"domain": {"kind": "ball"}, "n": 8}
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return path


def test_preset_names_and_expectations():
    assert preset_names() == EXPECTED_PRESETS
    for name in EXPECTED_PRESETS:
        sc = build_preset(name)
        assert sc.name == name
        assert sc.n == 64
    assert not build_preset("two_phase_displaced").expect_symmetric
    assert not build_preset("multiphase_discrete").expect_symmetric
    assert not build_preset("nested_rings_hypothesis_violation").expect_hypotheses_ok
    assert build_preset("one_phase_annulus").config.domain.kind == "annulus"


def test_build_preset_overrides():
    sc = build_preset("two_phase_concentric", n=24, pipeline="both")
    assert sc.n == 24 and sc.pipeline == "both"
    assert len(build_preset("multiphase_discrete", phase_count=5).config.phases) == 5
    with pytest.raises(ValueError):
        build_preset("one_phase_disk", phase_count=2)
    with pytest.raises(ValueError):
        build_preset("no_such_layout")


def test_scenario_validation_and_probe_default():
    with pytest.raises(ValueError):
        Scenario(name="x", config=PhaseConfig(domain=DomainSpec("ball")), pipeline="spectral")
    sc = Scenario(name="x", config=PhaseConfig(domain=DomainSpec("annulus", inner_radius=0.5)))
    assert sc.resolved_probe_radius() == pytest.approx(0.875)


def test_load_config_round_trip(tmp_path):
    path = write_config(
        tmp_path / "layout.json",
        name="my_case",
        domain={"kind": "annulus", "inner_radius": 0.5},
        phases=[{"shape": "ring", "sigma": 3.0, "r_inner": 0.6, "r_outer": 0.7}],
        pipeline="both",
        probe_radius=0.9,
        source=[0.0, 1.0],
        expect_symmetric=False,
        expect_hypotheses_ok=False,
        tolerances={"probe": 0.05},
    )
    sc = load_config_file(path)
    assert sc.name == "my_case"
    assert sc.config.domain.inner_radius == 0.5
    assert sc.config.phases[0].shape == "ring"
    assert sc.pipeline == "both"
    assert sc.probe_radius == 0.9
    assert sc.source == (0.0, 1.0)
    assert not sc.expect_symmetric and not sc.expect_hypotheses_ok
    assert sc.tolerances == Tolerances(probe=0.05)


def test_load_config_defaults_name_from_stem(tmp_path):
    sc = load_config_file(write_config(tmp_path / "bare_case.json"))
    assert sc.name == "bare_case"
    assert sc.n == 8 and sc.pipeline == "elliptic" and sc.expect_symmetric


@pytest.mark.parametrize(
    "patch",
    [
        {"resolution": 8},
        {"domain": {"kind": "ball", "r": 1.0}},
        {"phases": [{"shape": "disk", "sigma": 2.0, "rad": 0.5}]},
        {"tolerances": {"flux": 1e-2}},
    ],
)
def test_load_config_rejects_unknown_keys(tmp_path, patch):
    path = write_config(tmp_path / "bad.json", **patch)
    with pytest.raises(ValueError, match="unknown key"):
        load_config_file(path)


def test_load_config_requires_domain_and_phase_fields(tmp_path):
    path = tmp_path / "nodomain.json"
    path.write_text(json.dumps({"n": 8}))
    with pytest.raises(ValueError, match="domain"):
        load_config_file(path)
    path2 = write_config(tmp_path / "badphase.json", phases=[{"sigma": 2.0}])
    with pytest.raises(ValueError, match="shape"):
        load_config_file(path2)
    path3 = tmp_path / "list.json"
    path3.write_text("[1, 2]")
    with pytest.raises(ValueError, match="JSON object"):
        load_config_file(path3)


def test_run_scenario_writes_all_elliptic_artifacts(tmp_path):
    sc = build_preset("two_phase_concentric", n=8)
    res = run_scenario(sc, out_dir=tmp_path / "out")
    assert res.expectation_match
    names = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert names == [
        "diagnostics.csv",
        "mesh.txt",
        "radial.csv",
        "spectra.csv",
        "summary.txt",
        "u.csv",
    ]
    diag = (tmp_path / "out" / "diagnostics.csv").read_text().splitlines()
    assert diag[0] == ",".join(DIAG_COLUMNS)
    assert len(diag) == 2
    assert len(diag[1].split(",")) == len(DIAG_COLUMNS)
    # radial dump holds both the layered reference and the auxiliary profile
    fields = {line.split(",")[0] for line in (tmp_path / "out" / "radial.csv").read_text().splitlines()[1:]}
    assert fields == {"reference_u", "auxiliary_q"}


def test_run_scenario_parabolic_adds_timeseries(tmp_path):
    sc = build_preset("one_phase_disk", n=8, pipeline="both")
    res = run_scenario(sc, out_dir=tmp_path / "out")
    assert res.expectation_match
    ts = (tmp_path / "out" / "timeseries.csv").read_text().splitlines()
    assert ts[0] == "t,mass_norm,probe_mean_u,probe_dev_u,probe_mean_flux,probe_dev_flux"
    assert len(ts) == len(res.run.times) + 1
    assert res.eigen is not None and res.decay.ok and res.monotone


def test_run_scenario_rejects_probe_through_inclusion():
    sc = build_preset("two_phase_displaced", n=8, pipeline="parabolic")
    with pytest.raises(ValueError, match="meets the closure"):
        run_scenario(replace(sc, probe_radius=0.4))
    with pytest.raises(ValueError, match="strictly inside"):
        run_scenario(replace(sc, probe_radius=1.2))
    # the elliptic pipeline records placement but never samples, so it runs
    res = run_scenario(replace(sc, probe_radius=0.4, pipeline="elliptic"))
    assert not res.probe_placement_ok


def test_run_scenario_displaced_detects_asymmetry():
    res = run_scenario(build_preset("two_phase_displaced", n=16))
    assert res.asymmetry_detected
    assert res.expectation_match
    assert res.spectrum.dominant_mode == 1
    # no layered reference exists for an off-centre core
    assert res.radial_reference is None and res.fem_vs_radial_l2 is None


def test_run_scenario_artifacts_are_byte_identical(tmp_path):
    sc = build_preset("two_phase_concentric", n=8, pipeline="both")
    run_scenario(sc, out_dir=tmp_path / "a")
    run_scenario(sc, out_dir=tmp_path / "b")
    for p in sorted((tmp_path / "a").iterdir()):
        assert filecmp.cmp(p, tmp_path / "b" / p.name, shallow=False), p.name


def test_artifact_floats_survive_round_trip(tmp_path):
    run_scenario(build_preset("one_phase_disk", n=8), out_dir=tmp_path / "out")
    rows = (tmp_path / "out" / "u.csv").read_text().splitlines()[1:]
    vals = np.array([float(r.split(",")[3]) for r in rows])
    assert vals.max() == pytest.approx(0.25, abs=5e-3)
    # repr floats parse back exactly: no padding, no truncation
    for r in rows[:10]:
        cell = r.split(",")[3]
        assert repr(float(cell)) == cell


def test_merge_reports(tmp_path):
    run_scenario(build_preset("one_phase_disk", n=8), out_dir=tmp_path / "one_phase_disk")
    run_scenario(
        build_preset("two_phase_concentric", n=8), out_dir=tmp_path / "two_phase_concentric"
    )
    merged, all_match = merge_reports(tmp_path)
    assert all_match
    lines = merged.read_text().splitlines()
    assert lines[0] == ",".join(DIAG_COLUMNS)
    assert len(lines) == 3
    assert lines[1].startswith("one_phase_disk,")
    assert lines[2].startswith("two_phase_concentric,")


def test_merge_reports_flags_mismatch(tmp_path):
    # a disk declared asymmetric never fires a detector: expectation_match false
    sc = Scenario(
        name="wrong_claim",
        config=PhaseConfig(domain=DomainSpec("ball")),
        n=8,
        expect_symmetric=False,
    )
    res = run_scenario(sc, out_dir=tmp_path / "wrong_claim")
    assert not res.expectation_match
    _, all_match = merge_reports(tmp_path)
    assert not all_match


def test_merge_reports_error_paths(tmp_path):
    with pytest.raises(ValueError, match="no diagnostics"):
        merge_reports(tmp_path)
    bad = tmp_path / "bad"
    bad.mkdir()
    (bad / "diagnostics.csv").write_text("some,other,schema\n1,2,3\n")
    with pytest.raises(ValueError, match="schema"):
        merge_reports(tmp_path)


def test_main_list_presets(capsys):
    assert main(["list-presets"]) == 0
    out = capsys.readouterr().out
    for name in EXPECTED_PRESETS:
        assert name in out


def test_main_preset_exit_codes(tmp_path, capsys):
    assert main(["preset", "one_phase_disk", "--n", "8", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "expectation_match=true" in out
    assert (tmp_path / "one_phase_disk" / "summary.txt").is_file()
    assert main(["preset", "no_such_layout"]) == 2
    assert "unknown preset" in capsys.readouterr().err


def test_main_run_config_and_mismatch_exit(tmp_path, capsys):
    ok = write_config(tmp_path / "disk.json")
    assert main(["run", str(ok), "--out", str(tmp_path / "o1")]) == 0
    capsys.readouterr()
    wrong = write_config(tmp_path / "wrong.json", expect_symmetric=False)
    assert main(["run", str(wrong), "--out", str(tmp_path / "o2")]) == 1
    capsys.readouterr()
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    assert "error:" in capsys.readouterr().err
    bad = write_config(tmp_path / "bad.json", resolution=8)
    assert main(["run", str(bad)]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_main_report_merge(tmp_path, capsys):
    run_scenario(build_preset("one_phase_disk", n=8), out_dir=tmp_path / "one_phase_disk")
    assert main(["report", "--merge", str(tmp_path)]) == 0
    assert "all rows matched" in capsys.readouterr().out
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["report", "--merge", str(empty)]) == 2


def test_main_out_env_var(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(OUT_ENV_VAR, str(tmp_path / "envroot"))
    assert main(["preset", "one_phase_disk", "--n", "8"]) == 0
    capsys.readouterr()
    assert (tmp_path / "envroot" / "one_phase_disk" / "diagnostics.csv").is_file()


def test_fmt_rules():
    assert _fmt(None) == ""
    assert _fmt(True) == "true" and _fmt(False) == "false"
    assert _fmt(np.bool_(True)) == "true"
    assert _fmt(7) == "7" and _fmt(np.int64(7)) == "7"
    assert _fmt(0.25) == "0.25"
    assert _fmt(np.float64(1.0 / 3.0)) == "0.3333333333333333"
