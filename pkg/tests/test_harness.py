import json

import pytest

from vtqg.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    ResultRecord,
    default_params,
    emit_results,
    format_summary,
    read_results,
    report_summary,
    run_experiment,
)
from vtqg.noise import NoiseModel
from vtqg.tfim import TfimParams

import oracles

ZERO_NOISE = NoiseModel(p1=0.0, p2=0.0)


def small_config(**kwargs):
    defaults = dict(params=TfimParams(4, 0.786, 0.787, 0.5, 1), repetitions=2,
                    noise=ZERO_NOISE, seed=3)
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


def record(**kwargs):
    base = dict(variant="vtqg", n_qubits=4, repetition=0, mag=0.5, sx=0.1, sy=0.2, sz=0.3,
                ideal=0.88, fragments=10, two_qubit_gates=6, wall_ms=1.25)
    base.update(kwargs)
    return ResultRecord(**base)


class TestConfig:
    def test_defaults_mirror_reference_experiment(self):
        config = ExperimentConfig()
        assert config.params == TfimParams(8, 0.786, 0.787, 0.5, 1)
        assert config.shots == 8192
        assert config.repetitions == 20
        assert config.variants == ("routed_original", "vtqg", "vtqg_pet")
        assert config.mode == "exact"

    def test_dict_roundtrip(self):
        config = small_config(mode="sampling", shots=100, shot_allocation="proportional")
        again = ExperimentConfig.from_dict(config.to_dict())
        assert again == config

    def test_json_file(self, tmp_path):
        path = tmp_path / "config.json"
        config = small_config()
        path.write_text(json.dumps(config.to_dict()))
        assert ExperimentConfig.from_json_file(path) == config

    def test_validation(self):
        with pytest.raises(ValueError):
            small_config(variants=("ideal",))
        with pytest.raises(ValueError):
            small_config(variants=())
        with pytest.raises(ValueError):
            small_config(mode="approximate")
        with pytest.raises(ValueError):
            small_config(mode="sampling", shots=0)
        with pytest.raises(ValueError):
            small_config(repetitions=0)
        with pytest.raises(ValueError):
            small_config(seed=-4)
        with pytest.raises(ValueError):
            small_config(shot_allocation="equal")
        with pytest.raises(ValueError):
            small_config(sampling_strategy="direct")

    def test_unknown_fields_rejected(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict({"params": default_params().__dict__, "backend": "x"})


class TestRunExperiment:
    def test_noiseless_exact_matches_ideal(self):
        records = run_experiment(small_config(repetitions=1))
        assert len(records) == 3
        for r in records:
            assert r.mag == pytest.approx(r.ideal, abs=1e-9)
            assert r.ideal == pytest.approx(oracles.REF_MAG_SINGLE_STEP, abs=1e-9)

    def test_fragment_accounting(self):
        records = {r.variant: r for r in run_experiment(small_config(repetitions=1))}
        assert records["routed_original"].fragments == 1
        assert records["vtqg"].fragments == 10
        assert records["vtqg_pet"].fragments == 10
        sampling = {r.variant: r for r in run_experiment(
            small_config(repetitions=1, mode="sampling", shots=64, variants=("vtqg",)))}
        assert sampling["vtqg"].fragments == 6
        enumerated = run_experiment(small_config(
            repetitions=1, mode="sampling", shots=64, variants=("vtqg",),
            sampling_strategy="enumerated"))
        assert enumerated[0].fragments == 10

    def test_two_qubit_tally(self):
        records = {r.variant: r for r in run_experiment(small_config(repetitions=1))}
        # n=4: routed = 4 RZZ * 2 + 2 SWAP * 3; vtqg = 3 RZZ * 2; pet = 3 RZX * 1
        assert records["routed_original"].two_qubit_gates == 14
        assert records["vtqg"].two_qubit_gates == 6
        assert records["vtqg_pet"].two_qubit_gates == 3

    def test_repetitions_identical_in_exact_mode(self):
        records = run_experiment(small_config(repetitions=3, variants=("vtqg",)))
        mags = {r.mag for r in records}
        assert len(mags) == 1 and [r.repetition for r in records] == [0, 1, 2]

    def test_sampling_reps_differ_but_are_seeded(self):
        config = small_config(repetitions=2, mode="sampling", shots=256, variants=("vtqg",))
        a = run_experiment(config)
        b = run_experiment(config)
        assert [r.mag for r in a] == [r.mag for r in b]
        assert a[0].mag != a[1].mag  # different repetition seeds

    def test_enumerated_sampling_executes_ten_fragments_times_three_bases(self, monkeypatch):
        import vtqg.harness as harness_mod
        calls = []
        real = harness_mod.sample_shots

        def spy(circuit, n_shots, seed, basis=None, noise=None):
            calls.append((n_shots, basis))
            return real(circuit, n_shots, seed, basis=basis, noise=noise)

        monkeypatch.setattr(harness_mod, "sample_shots", spy)
        run_experiment(small_config(repetitions=1, mode="sampling", shots=16,
                                    variants=("vtqg",), sampling_strategy="enumerated"))
        assert len(calls) == 30  # 10 fragments x 3 measurement bases
        assert {b for _, b in calls} == {"XXXX", "YYYY", "ZZZZ"}

    def test_proportional_allocation_splits_by_weight(self, monkeypatch):
        import vtqg.harness as harness_mod
        from vtqg.qpd import build_grouped_fragments
        from vtqg.tfim import build_trotter_circuit
        calls = []
        real = harness_mod.sample_shots

        def spy(circuit, n_shots, seed, basis=None, noise=None):
            calls.append(n_shots)
            return real(circuit, n_shots, seed, basis=basis, noise=noise)

        monkeypatch.setattr(harness_mod, "sample_shots", spy)
        config = small_config(repetitions=1, mode="sampling", shots=6000,
                              variants=("vtqg",), shot_allocation="proportional")
        run_experiment(config)
        build = build_trotter_circuit(config.params, "vtqg")
        weights = [f.weight for f in build_grouped_fragments(build.circuit, build.cuts)]
        total = sum(abs(w) for w in weights)
        expected = [max(1, round(6000 * abs(w) / total)) for w in weights]
        assert calls[::3] == expected  # one entry per fragment (same for each basis)
        assert max(calls) > min(calls)

    def test_noise_ordering_across_sizes(self):
        gaps = []
        for n in (4, 6, 8):
            config = ExperimentConfig(params=TfimParams(n, 0.786, 0.787, 0.5, 1),
                                      repetitions=1, noise=NoiseModel(), seed=0)
            records = {r.variant: r for r in run_experiment(config)}
            err = {v: abs(r.mag - r.ideal) for v, r in records.items()}
            assert err["vtqg_pet"] <= err["vtqg"] < err["routed_original"]
            gaps.append(err["routed_original"] - err["vtqg"])
        assert gaps[0] < gaps[1] < gaps[2]


class TestEmitAndRead:
    def test_csv_columns_and_order(self, tmp_path):
        path = tmp_path / "out.csv"
        emit_results([record()], "csv", path)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 2
        assert lines[1].startswith("vtqg,4,0,0.5,")

    def test_empty_records_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        emit_results([], "csv", path)
        assert path.read_text() == ",".join(CSV_COLUMNS) + "\n"

    def test_json_roundtrip_identity(self, tmp_path):
        path = tmp_path / "out.json"
        records = [record(), record(repetition=1, mag=0.25, wall_ms=9.75)]
        emit_results(records, "json", path)
        assert read_results(path) == records

    def test_csv_roundtrip_identity(self, tmp_path):
        path = tmp_path / "out.csv"
        records = [record(), record(variant="routed_original", fragments=1, mag=1 / 3)]
        emit_results(records, "csv", path)
        assert read_results(path) == records

    def test_stable_timing_zeroes_wall(self, tmp_path):
        path = tmp_path / "out.csv"
        emit_results([record(wall_ms=123.4)], "csv", path, stable_timing=True)
        assert read_results(path)[0].wall_ms == 0.0

    def test_bad_format(self, tmp_path):
        with pytest.raises(ValueError):
            emit_results([], "yaml", tmp_path / "x")

    def test_io_error_reports_path(self, tmp_path):
        missing = tmp_path / "no" / "such" / "dir" / "out.csv"
        with pytest.raises(OSError) as err:
            emit_results([record()], "csv", missing)
        assert str(missing) in str(err.value)


class TestDeterminism:
    def test_byte_identical_csv(self, tmp_path):
        config = small_config(mode="sampling", shots=128, repetitions=2, noise=NoiseModel())
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_results(run_experiment(config), "csv", p1, stable_timing=True)
        emit_results(run_experiment(config), "csv", p2, stable_timing=True)
        assert p1.read_bytes() == p2.read_bytes()

    def test_records_identical_except_walltime(self):
        config = small_config(repetitions=1)
        strip = lambda r: {k: v for k, v in r.__dict__.items() if k != "wall_ms"}
        assert list(map(strip, run_experiment(config))) == list(map(strip, run_experiment(config)))


class TestSummary:
    def test_identical_records_zero_std(self):
        rows = report_summary([record() for _ in range(20)])
        assert rows[0].runs == 20
        assert rows[0].std_mag == 0.0

    def test_two_value_statistics(self):
        rows = report_summary([record(mag=0.4), record(mag=0.6, repetition=1)])
        assert rows[0].mean_mag == pytest.approx(0.5)
        assert rows[0].std_mag == pytest.approx(0.1414, abs=1e-4)  # sample std, n-1

    def test_abs_error_against_ideal(self):
        rows = report_summary([record(mag=0.8, ideal=0.9)])
        assert rows[0].abs_error == pytest.approx(0.1)

    def test_groups_by_variant_and_size(self):
        rows = report_summary([record(), record(variant="routed_original"), record(n_qubits=8)])
        assert len(rows) == 3

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            report_summary([])

    def test_format_contains_groups(self):
        text = format_summary(report_summary([record()]))
        assert "vtqg" in text and "abs_err" in text

    def test_error_gap_grows_with_size(self):
        # improvement of the virtual gate over routing grows with the ring
        summaries = {}
        for n in (4, 6, 8):
            config = ExperimentConfig(params=TfimParams(n, 0.786, 0.787, 0.5, 1),
                                      repetitions=1, noise=NoiseModel(), seed=0,
                                      variants=("routed_original", "vtqg"))
            rows = {s.variant: s for s in report_summary(run_experiment(config))}
            summaries[n] = rows["routed_original"].abs_error - rows["vtqg"].abs_error
        assert summaries[4] < summaries[6] < summaries[8]
