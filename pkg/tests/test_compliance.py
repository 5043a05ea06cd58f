import csv
import json
import math

import numpy as np
import pytest

from pmulab.compliance import (PUBLISHED_TOTAL, Impairments, build_report, config_for,
                               default_limits, enumerate_tests, evaluate, load_limits, run_suite,
                               run_test, select, suite_counts, write_csv, write_json)
from pmulab.compliance.cli import main
from pmulab.estimator.config import EstimatorConfig, design_filter
from pmulab.compliance.suite import evaluation_mask, oob_fundamentals, oob_interferers
from pmulab.recorder import QuantizedFrame, RingBuffer
from pmulab.signalgen import synthesize

EXPECTED = {"steady_state": 101, "harmonic": 49, "amplitude_modulation": 50,
            "phase_modulation": 50, "frequency_ramp": 2, "out_of_band": 21, "step": 4}


@pytest.fixture(scope="module")
def cases():
    return enumerate_tests()


# --- enumeration -------------------------------------------------------------

def test_class_counts(cases):
    counts = suite_counts(cases)
    assert counts.per_class == EXPECTED
    assert counts.total == 277
    assert counts.waveforms_per_class["out_of_band"] == 21 * 7
    assert counts.waveforms_per_class["step"] == 80
    assert counts.total_waveforms == 479
    assert not counts.matches_published
    assert "DEVIATION" in counts.flag() and str(PUBLISHED_TOTAL) in counts.flag()


def test_ids_unique_and_sweeps(cases):
    ids = [c.id for c in cases]
    assert len(ids) == len(set(ids))
    ss = [c.spec.f1 for c in cases if c.test_class == "steady_state"]
    assert ss[0] == 55.0 and ss[-1] == 65.0
    assert np.allclose(np.diff(ss), 0.1)
    assert [c.spec.harmonic_order for c in cases if c.test_class == "harmonic"] == list(range(2, 51))


def test_oob_frequencies():
    inter = oob_interferers(60.0, 60.0)
    assert len(inter) == 21
    assert all(10 <= f <= 30 or 90 <= f <= 120 for f in inter)
    assert oob_fundamentals(60.0) == [57.0, 58.0, 59.0, 60.0, 61.0, 62.0, 63.0]


def test_unsupported_rate():
    with pytest.raises(ValueError):
        enumerate_tests(60.0, 30.0)
    with pytest.raises(ValueError):
        enumerate_tests(55.0, 55.0)


def test_fifty_hz_suite():
    counts = suite_counts(enumerate_tests(50.0, 50.0))
    assert counts.per_class["steady_state"] == 101


def test_select(cases):
    assert len(select(cases, "ss-*")) == 101
    assert len(select(cases, ["step-*", "ramp-*"])) == 6
    assert select(cases, "nope") == []


def test_every_case_has_a_limit(cases):
    for c in cases:
        assert any(v is not None for k, v in c.limits.items() if k.endswith("_max"))


def test_ramp_exclusion_mask(cases):
    ramp = select(cases, "ramp-up")[0]
    t = np.arange(0, 14, 1 / 60)
    plain = evaluation_mask(ramp, t)
    excl = evaluation_mask(ramp, t, 7 / 60)
    assert excl.sum() < plain.sum()
    edge = ramp.spec.ramp_begin
    assert not excl[np.abs(t - edge) <= 7 / 60].any()


# --- limits ------------------------------------------------------------------

def test_default_limits_provenance():
    table = default_limits()
    ss = table["steady_state"]
    assert ss["tve_max"].value == 1.0 and ss["tve_max"].unit == "%"
    assert ss["fe_max"].value == 0.005 and ss["fe_max"].locked
    assert ss["rfe_max"].value == 0.1 and ss["rfe_max"].locked
    assert table.value("step", "delay_max") == pytest.approx(0.0042)
    assert table.value("step", "response_tve_max") == pytest.approx(0.1167)
    for entries in table.to_dict().values():
        for e in entries.values():
            assert e["unit"] and e["provenance"]


def test_override_unlocked_and_locked(tmp_path):
    path = tmp_path / "lim.json"
    path.write_text(json.dumps({"classes": {"harmonic": {"fe_max": {"value": 0.05}}}}))
    table = load_limits(path)
    assert table.value("harmonic", "fe_max") == 0.05
    assert table["harmonic"]["fe_max"].provenance == "user override"
    path.write_text(json.dumps({"classes": {"steady_state": {"fe_max": {"value": 0.01}}}}))
    with pytest.raises(ValueError):
        load_limits(path)
    path.write_text(json.dumps({"classes": {"nope": {"fe_max": {"value": 0.01}}}}))
    with pytest.raises(ValueError):
        load_limits(path)
    path.write_text(json.dumps({"classes": {"harmonic": {"fe_max": {"value": -1}}}}))
    with pytest.raises(ValueError):
        load_limits(path)


# --- evaluation --------------------------------------------------------------

def test_evaluate_statuses(cases):
    case = select(cases, "harm-02")[0]
    v = evaluate(case, {"tve": 0.5, "fe": 0.001, "rfe": 5.0})
    assert v.status == {"tve": "pass", "fe": "pass", "rfe": "n/a"}
    assert v.passed
    v = evaluate(case, {"tve": 1.5, "fe": 0.001, "rfe": 0.0})
    assert not v.passed and v.failed_metrics == ["tve"]
    v = evaluate(case, {"tve": math.nan, "fe": 0.0})
    assert v.status["tve"] == "fail"


def test_run_single_steady_case(cases):
    case = select(cases, "ss-57.3")[0]
    series, v = run_test(case, config_for(), Impairments())
    assert v.passed
    # worst case aligns passband droop at -2.7 Hz with the image at 117.3 Hz
    coef = design_filter(EstimatorConfig())
    h = lambda f: abs(coef.response(f, 3840.0)[0])
    assert v.measured["tve"] == pytest.approx(100 * (1 - h(2.7) + h(117.3)), rel=1e-3)
    assert v.measured["fe"] < 0.005


def test_enob_noise_deterministic(cases):
    case = select(cases, "ss-60.0")[0]
    imp = Impairments(enob=10, seed=3)
    a = run_suite([case], config_for(), imp)[0]
    b = run_suite([case], config_for(), imp)[0]
    c = run_suite([case], config_for(), Impairments(enob=10, seed=4))[0]
    assert a.measured == b.measured
    assert a.measured != c.measured


def test_impairment_validation():
    with pytest.raises(ValueError):
        Impairments(drive=1.5)


# --- reports -----------------------------------------------------------------

def _report(cases, stamp):
    sel = select(cases, ["ss-60.0", "harm-03"])
    verdicts = run_suite(sel, config_for(), Impairments())
    return build_report(verdicts, suite_counts(sel), {"backend": "float"}, default_limits(),
                        generated_at=stamp), verdicts


def test_report_deterministic(cases, tmp_path):
    a, verdicts = _report(cases, "2026-01-01T00:00:00Z")
    b, _ = _report(cases, "2026-06-01T00:00:00Z")
    assert a["generated_at"] != b["generated_at"]
    a.pop("generated_at"), b.pop("generated_at")
    assert a == b
    assert a["overall"] == "pass" and a["summary"]["run"] == 2
    m = a["results"][0]["metrics"]["fe"]
    assert set(m) == {"measured", "limit", "unit", "status", "provenance"}
    write_json(a, tmp_path / "r.json")
    json.loads((tmp_path / "r.json").read_text())
    write_csv(verdicts, tmp_path / "r.csv")
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert [r["id"] for r in rows] == ["ss-60.0", "harm-03"]


# --- command line ------------------------------------------------------------

def test_cli_run_pass(tmp_path, capsys):
    out, summary = tmp_path / "report.json", tmp_path / "summary.csv"
    rc = main(["run", "--f0", "60", "--rate", "60", "--backend", "float", "--tests", "ss-59.*",
               "--out", str(out), "--csv", str(summary), "--seed", "1", "--quiet"])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["summary"]["run"] == 10 and doc["overall"] == "pass"
    header = summary.read_text().splitlines()[0].split(",")
    assert header[:3] == ["id", "class", "pass"] and header[-1] == "saturation_count"
    assert "DEVIATION" not in capsys.readouterr().out


def test_cli_run_failure_exit(tmp_path):
    lim = tmp_path / "tight.json"
    lim.write_text(json.dumps({"classes": {"harmonic": {"tve_max": {"value": 1e-9}}}}))
    rc = main(["run", "--tests", "harm-02", "--limits", str(lim), "--quiet"])
    assert rc == 1


def test_cli_bad_inputs(capsys):
    assert main(["run", "--tests", "zzz*"]) == 2
    assert main(["run", "--rate", "30", "--tests", "ss-*"]) == 2
    assert main(["explain", "zzz"]) == 2


def test_cli_list_and_explain(capsys):
    assert main(["list-tests", "--tests", "step-*"]) == 0
    out = capsys.readouterr().out
    assert "step-mag-pos" in out and "DEVIATION" in out
    assert main(["explain", "step-phase-neg"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["waveforms"] == 20
    assert doc["varies"]["step_stagger"] == pytest.approx([k / 20 for k in range(20)])


def test_cli_decode(tmp_path):
    buf = RingBuffer()
    for k in range(70):
        buf.push(QuantizedFrame(k, 32768, 100, 0), 10 + k // 60, k % 60)
    raw = tmp_path / "cap.bin"
    raw.write_bytes(buf.drain())
    out = tmp_path / "cap.csv"
    assert main(["decode", str(raw), "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 70
    assert rows[61]["utc_second"] == "11" and rows[61]["index"] == "1"
    assert float(rows[0]["v_phase"]) == pytest.approx(math.pi / 65536)


def test_cli_synth(tmp_path):
    from pmulab.io import read_waveform_bin, read_waveform_csv
    b = tmp_path / "oob.bin"
    assert main(["synth", "oob-10.0", "--index", "2", "--out", str(b)]) == 0
    sig = read_waveform_bin(b)
    assert sig.fs == 3840.0
    case = select(enumerate_tests(), "oob-10.0")[0]
    expected, _ = synthesize(case.specs[2])
    assert np.array_equal(sig.samples, expected.samples)
    c = tmp_path / "ss.csv"
    assert main(["synth", "ss-60.0", "--out", str(c)]) == 0
    assert read_waveform_csv(c).fs == 3840.0
