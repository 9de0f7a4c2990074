import struct

import numpy as np
import pytest

from twinbeam.dsp import difference_spectrum
from twinbeam.errors import BadMagic, DataError, HeaderMismatch, InvalidParams, NonUniformTime
from twinbeam.io import (
    load_curve,
    load_trace,
    save_curve,
    save_spectrum,
    save_trace,
)
from twinbeam.source import gen_split_coherent, gen_twin, quantize
from twinbeam.trace import MICurve, SourceParams


class TestTwbm:
    def test_f64_round_trip_bit_exact(self, tmp_path, small_spec):
        pair = gen_twin(SourceParams(), small_spec, seed=1)
        path = tmp_path / "a.twbm"
        save_trace(pair.a, path)
        back = load_trace(path)
        assert np.array_equal(back.samples, pair.a.samples)
        assert back.spec == pair.a.spec
        assert back.label == pair.a.label
        assert back.mean_level == pair.a.mean_level
        assert back.shot_psd == pair.a.shot_psd
        assert back.noise_bandwidth == pair.a.noise_bandwidth
        assert back.guard == pair.a.guard

    def test_u8_round_trip_bit_identical(self, tmp_path, small_spec):
        pair = gen_twin(SourceParams(), small_spec, seed=2)
        q, _ = quantize(pair.a, small_spec)
        path = tmp_path / "q.twbm"
        save_trace(q, path, encoding="u8")
        back = load_trace(path)
        # raw levels are preserved exactly through the u8 payload
        assert np.array_equal(back.samples + back.mean_level,
                              q.samples + q.mean_level)

    def test_u8_values_span_levels(self, tmp_path, small_spec):
        pair = gen_twin(SourceParams(), small_spec, seed=3)
        q, _ = quantize(pair.a, small_spec)
        path = tmp_path / "q.twbm"
        save_trace(q, path, encoding="u8")
        payload = path.read_bytes()
        hdr_len = struct.unpack("<II", payload[4:12])[1]
        raw = np.frombuffer(payload[12 + hdr_len:], dtype=np.uint8)
        assert raw.min() >= 0 and raw.max() <= 255
        assert len(raw) == small_spec.n_samples

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.twbm"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(BadMagic):
            load_trace(path, format="twbm")

    def test_payload_length_mismatch(self, tmp_path, small_spec):
        pair = gen_twin(SourceParams(), small_spec, seed=4)
        path = tmp_path / "t.twbm"
        save_trace(pair.a, path)
        data = path.read_bytes()
        path.write_bytes(data[:-16])  # truncate payload
        with pytest.raises(HeaderMismatch):
            load_trace(path)

    def test_unknown_version(self, tmp_path, small_spec):
        pair = gen_twin(SourceParams(), small_spec, seed=5)
        path = tmp_path / "t.twbm"
        save_trace(pair.a, path)
        data = bytearray(path.read_bytes())
        data[4:8] = struct.pack("<I", 99)
        path.write_bytes(bytes(data))
        with pytest.raises(HeaderMismatch):
            load_trace(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_trace(tmp_path / "nothing.twbm")


class TestCsvTrace:
    def test_single_column_needs_rate(self, tmp_path):
        path = tmp_path / "one.csv"
        np.savetxt(path, np.sin(np.arange(1000) * 0.01), delimiter=",")
        with pytest.raises(InvalidParams):
            load_trace(path, format="csv")
        tr = load_trace(path, format="csv", sample_rate=2e9)
        assert tr.spec.sample_rate == 2e9
        assert tr.spec.n_samples == 1000

    def test_two_column_uniform_time(self, tmp_path):
        path = tmp_path / "two.csv"
        t = np.arange(1000) * 0.5e-9
        v = np.sin(np.arange(1000) * 0.01)
        np.savetxt(path, np.column_stack([t, v]), delimiter=",")
        tr = load_trace(path, format="csv")
        assert tr.spec.sample_rate == pytest.approx(2e9, rel=1e-6)

    def test_jittered_time_rejected(self, tmp_path):
        path = tmp_path / "jit.csv"
        rng = np.random.default_rng(0)
        t = np.arange(1000) * 0.5e-9 + rng.uniform(0, 5e-14, 1000)
        v = rng.standard_normal(1000)
        np.savetxt(path, np.column_stack([t, v]), delimiter=",", fmt="%.18e")
        with pytest.raises(NonUniformTime):
            load_trace(path, format="csv")


class TestCurveCsv:
    def test_round_trip(self, tmp_path):
        delays = (np.arange(-100, 101)) * 0.5e-9
        mi = np.exp(-0.5 * (delays / 30e-9) ** 2)
        spread = 0.01 * np.ones_like(mi)
        curve = MICurve(delays=delays, mi=mi, spread=spread, n_repeats=10)
        path = tmp_path / "curve.csv"
        save_curve(curve, path)
        back = load_curve(path)
        assert np.allclose(back.delays, delays, atol=1e-15)
        assert np.allclose(back.mi, mi, rtol=1e-8)
        assert np.allclose(back.spread, spread, rtol=1e-8)

    def test_spectrum_csv_written(self, tmp_path, small_spec):
        pair = gen_twin(SourceParams(), small_spec, seed=6)
        ref = gen_split_coherent(SourceParams(), small_spec, seed=7)
        est = difference_spectrum(pair, ref, segment_length=2 ** 12)
        path = tmp_path / "spec.csv"
        save_spectrum(est, path)
        header = path.read_text().splitlines()[0]
        assert header == "freq_hz,psd,reference_psd,squeezing_db"
        assert len(path.read_text().splitlines()) == len(est.frequencies) + 1
