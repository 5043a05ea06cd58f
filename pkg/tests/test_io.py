import numpy as np
import pytest

from pmulab.estimator import Estimator
from pmulab.io import (FRAME_CSV_COLUMNS, read_frames_csv, read_waveform_bin, read_waveform_csv,
                       write_waveform_bin, write_waveform_csv)
from pmulab.signalgen import SampledSignal, TestSignalSpec, synthesize


def test_waveform_csv_round_trip(tmp_path):
    sig, _ = synthesize(TestSignalSpec(f1=59.3, duration=0.5, lead_in=0.0))
    path = tmp_path / "w.csv"
    write_waveform_csv(sig, path)
    assert path.read_text().splitlines()[0] == "t,value"
    back = read_waveform_csv(path)
    assert back.fs == 3840.0
    assert np.array_equal(back.samples, sig.samples)


def test_waveform_bin_round_trip(tmp_path):
    sig, _ = synthesize(TestSignalSpec(f1=61.0, duration=0.25, lead_in=0.0))
    path = tmp_path / "w.bin"
    write_waveform_bin(sig, path)
    raw = path.read_bytes()
    assert raw[:8] == b"PMUSIG01"
    assert int.from_bytes(raw[8:12], "little") == 3840
    assert int.from_bytes(raw[12:16], "little") == len(sig)
    assert len(raw) == 16 + 8 * len(sig)
    back = read_waveform_bin(path)
    assert back.fs == sig.fs and np.array_equal(back.samples, sig.samples)


def test_waveform_bin_errors(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOTMAGIC" + bytes(8))
    with pytest.raises(ValueError):
        read_waveform_bin(path)
    sig = SampledSignal(fs=3840.0, samples=np.zeros(4))
    write_waveform_bin(sig, path)
    path.write_bytes(path.read_bytes()[:-1])
    with pytest.raises(ValueError):
        read_waveform_bin(path)
    with pytest.raises(ValueError):
        write_waveform_bin(SampledSignal(fs=3840.5, samples=np.zeros(4)), path)


def test_frame_csv_round_trip(tmp_path):
    sig, _ = synthesize(TestSignalSpec(f1=58.5, duration=1.0, lead_in=0.0))
    frames = Estimator().run(sig.samples)
    path = tmp_path / "frames.csv"
    frames.to_csv(path)
    assert tuple(path.read_text().splitlines()[0].split(",")) == FRAME_CSV_COLUMNS
    back = read_frames_csv(path)
    for name in ("n", "timestamp", "v_mag", "v_phase", "saturation_count"):
        assert np.array_equal(getattr(back, name), getattr(frames, name))
    assert np.array_equal(np.isnan(back.frequency), np.isnan(frames.frequency))


def test_frame_csv_header_checked(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_frames_csv(path)
