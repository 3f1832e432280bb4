"""Experiment orchestration: determinism, CSV schema, aggregation, sweeps, CLI."""

import json
import math
import os

import numpy as np
import pytest

from linids.cli import main as cli_main
from linids.harness import (
    TRACE_HEADER,
    AlgorithmSpec,
    CheckpointSpec,
    ExperimentConfig,
    aggregate,
    build_instance,
    read_trace_csv,
    run_experiment,
    sweep,
)
from linids.core import gap_profile, make_eoo_instance

SIGMA = math.sqrt(0.1)


def small_config(tmp_path, **overrides):
    base = dict(
        instance={"kind": "eoo", "epsilon": 0.01, "noise_std": SIGMA},
        algorithms=(
            AlgorithmSpec(name="ids-hucb", kind="ids", variant="H_UCB"),
            AlgorithmSpec(name="linucb", kind="linucb"),
        ),
        horizon=64,
        repetitions=3,
        base_seed=2024,
        checkpoints=CheckpointSpec(),
        output_dir=str(tmp_path / "out"),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestCheckpointSpec:
    def test_geometric_grid(self):
        grid = CheckpointSpec().grid(64)
        assert grid == [1, 2, 4, 8, 16, 32, 64]

    def test_includes_extra_and_horizon(self):
        grid = CheckpointSpec(include=(10, 100)).grid(50)
        assert 10 in grid and 50 in grid and 100 not in grid
        assert grid == sorted(set(grid))


class TestRunExperiment:
    def test_single_round_single_rep(self, tmp_path):
        cfg = small_config(
            tmp_path,
            horizon=1,
            repetitions=1,
            algorithms=(AlgorithmSpec(name="linucb", kind="linucb"),),
        )
        files, manifest = run_experiment(cfg, threads=1)
        assert len(files) == 1
        rows = read_trace_csv(os.path.join(cfg.output_dir, files[0]))
        assert len(rows) == 1 and rows[0]["t"] == 1
        gaps = gap_profile(make_eoo_instance(0.01, SIGMA)).gaps
        assert any(abs(rows[0]["cum_regret"] - g) < 1e-12 for g in gaps)
        assert manifest["runs"][0]["status"] == "ok"

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = small_config(tmp_path)
        files, _ = run_experiment(cfg, threads=1)
        blobs = {f: read_bytes(os.path.join(cfg.output_dir, f)) for f in files}
        cfg2 = small_config(tmp_path, output_dir=str(tmp_path / "out2"))
        files2, _ = run_experiment(cfg2, threads=1)
        assert sorted(files) == sorted(files2)
        for f in files2:
            assert read_bytes(os.path.join(cfg2.output_dir, f)) == blobs[f]

    def test_thread_count_does_not_change_bytes(self, tmp_path):
        cfg = small_config(tmp_path)
        files, _ = run_experiment(cfg, threads=1)
        blobs = {f: read_bytes(os.path.join(cfg.output_dir, f)) for f in files}
        cfg2 = small_config(tmp_path, output_dir=str(tmp_path / "out-mt"))
        files2, _ = run_experiment(cfg2, threads=2)
        for f in files2:
            assert read_bytes(os.path.join(cfg2.output_dir, f)) == blobs[f]

    def test_schema_and_monotone_regret(self, tmp_path):
        cfg = small_config(tmp_path)
        files, _ = run_experiment(cfg, threads=1)
        for f in files:
            path = os.path.join(cfg.output_dir, f)
            with open(path, "r", encoding="utf-8") as fh:
                first = fh.readline().rstrip("\n")
            assert first == TRACE_HEADER
            rows = read_trace_csv(path)
            regs = [r["cum_regret"] for r in rows]
            ts = [r["t"] for r in rows]
            assert all(b >= a - 1e-12 for a, b in zip(regs, regs[1:]))
            assert ts == sorted(set(ts))
            assert all(r["s_t"] <= r["t"] for r in rows)

    def test_failed_run_marks_manifest(self, tmp_path, monkeypatch):
        cfg = small_config(
            tmp_path,
            algorithms=(
                AlgorithmSpec(name="bad", kind="bayes_ids", mc_samples=100),
                AlgorithmSpec(name="linucb", kind="linucb"),
            ),
            repetitions=1,
            horizon=4,
        )
        import linids.harness as hmod

        def boom(*a, **k):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(hmod, "bayes_ids_step", boom)
        files, manifest = run_experiment(cfg, threads=1)
        by_algo = {r["algo"]: r for r in manifest["runs"]}
        assert by_algo["bad"]["status"] == "failed"
        assert "synthetic failure" in by_algo["bad"]["error"]
        assert by_algo["linucb"]["status"] == "ok"
        assert len(files) == 1

    def test_asserted_run_passes_invariants(self, tmp_path):
        cfg = small_config(
            tmp_path,
            horizon=800,
            repetitions=1,
            assert_invariants=True,
            algorithms=(AlgorithmSpec(name="ids-h", kind="ids", variant="H"),),
        )
        files, manifest = run_experiment(cfg, threads=1)
        assert manifest["runs"][0]["status"] == "ok"

    def test_asserted_ten_thousand_round_runs(self, tmp_path):
        # 5 repetitions at n=1e4 with every per-round inequality checked.
        cfg = small_config(
            tmp_path,
            horizon=10_000,
            repetitions=5,
            assert_invariants=True,
            algorithms=(AlgorithmSpec(name="ids-hucb", kind="ids", variant="H_UCB"),),
        )
        files, manifest = run_experiment(cfg, threads=2)
        assert len(files) == 5
        assert all(r["status"] == "ok" for r in manifest["runs"])

    def test_random_instance_fresh_per_repetition(self, tmp_path):
        inst0 = build_instance({"kind": "random", "d": 2, "k": 6, "noise_std": SIGMA}, 0, 1)
        inst1 = build_instance({"kind": "random", "d": 2, "k": 6, "noise_std": SIGMA}, 1, 1)
        assert not np.array_equal(inst0.actions, inst1.actions)
        again = build_instance({"kind": "random", "d": 2, "k": 6, "noise_std": SIGMA}, 0, 1)
        assert np.array_equal(inst0.actions, again.actions)


class TestAggregate:
    def _write_trace(self, path, algo, seed, pairs):
        lines = [TRACE_HEADER]
        for t, reg in pairs:
            lines.append(f"{algo},inst,{seed},{t},{reg:.12g},0,0,{t},1")
        path.write_text("\n".join(lines) + "\n")

    def test_identical_traces_zero_stderr(self, tmp_path):
        for seed in range(3):
            self._write_trace(tmp_path / f"a{seed}.csv", "algo", seed, [(1, 2.0), (2, 4.0)])
        summary = aggregate([str(tmp_path / f"a{s}.csv") for s in range(3)])
        for _algo, _label, _t, mean, stderr, reps in summary.rows:
            assert stderr == 0.0 and reps == 3

    def test_two_trace_stderr(self, tmp_path):
        self._write_trace(tmp_path / "a0.csv", "algo", 0, [(1, 0.0)])
        self._write_trace(tmp_path / "a1.csv", "algo", 1, [(1, 2.0)])
        summary = aggregate([str(tmp_path / "a0.csv"), str(tmp_path / "a1.csv")])
        (_, _, _, mean, stderr, reps) = summary.rows[0]
        assert mean == 1.0 and abs(stderr - 1.0) < 1e-12 and reps == 2

    def test_monte_carlo_stderr_sanity(self, tmp_path, rng):
        paths = []
        for i in range(100):
            p = tmp_path / f"t{i}.csv"
            self._write_trace(p, "mc", i, [(1, float(rng.standard_normal()))])
            paths.append(str(p))
        (_, _, _, _mean, stderr, _reps) = aggregate(paths).rows[0]
        assert abs(stderr - 0.1) < 0.03

    def test_misaligned_grids_rejected(self, tmp_path):
        self._write_trace(tmp_path / "a0.csv", "algo", 0, [(1, 0.0), (2, 1.0)])
        self._write_trace(tmp_path / "a1.csv", "algo", 1, [(1, 0.0), (4, 1.0)])
        with pytest.raises(ValueError, match="misaligned"):
            aggregate([str(tmp_path / "a0.csv"), str(tmp_path / "a1.csv")])

    def test_roundtrip_with_runner(self, tmp_path):
        cfg = small_config(tmp_path)
        files, _ = run_experiment(cfg, threads=1)
        out = str(tmp_path / "agg.csv")
        summary = aggregate([os.path.join(cfg.output_dir, f) for f in files], out_path=out)
        text = open(out).read()
        assert text.startswith("algo,instance,t,mean_regret,stderr,reps\n")
        algos = {r[0] for r in summary.rows}
        assert algos == {"ids-hucb", "linucb"}
        for row in summary.rows:
            assert row[5] == 3


class TestSweep:
    def test_single_cell_matches_plain_run(self, tmp_path):
        template = AlgorithmSpec(name="ids", kind="ids", variant="H_UCB")
        cfg = small_config(
            tmp_path, algorithms=(template,), horizon=32, repetitions=2
        )
        matrix = sweep(cfg, [1.0], ["auto"], threads=1)
        cell = matrix["cells"][(1.0, "auto")]
        cfg2 = small_config(
            tmp_path,
            output_dir=str(tmp_path / "plain"),
            horizon=32,
            repetitions=2,
            algorithms=(
                AlgorithmSpec(
                    name="ids[beta=1;eta=auto]",
                    kind="ids",
                    variant="H_UCB",
                    beta_mode="fixed",
                    beta_fixed=1.0,
                ),
            ),
        )
        files, _ = run_experiment(cfg2, threads=1)
        summary = aggregate([os.path.join(cfg2.output_dir, f) for f in files])
        final = [r[3] for r in summary.rows if r[2] == 32]
        assert abs(cell - final[0]) < 1e-12

    def test_grid_order_invariance(self, tmp_path):
        template = AlgorithmSpec(name="ids", kind="ids")
        cfg = small_config(tmp_path, algorithms=(template,), horizon=16, repetitions=2)
        m1 = sweep(cfg, [0.5, 2.0], [0.1, "auto"], threads=1)
        cfg2 = small_config(
            tmp_path,
            algorithms=(template,),
            horizon=16,
            repetitions=2,
            output_dir=str(tmp_path / "perm"),
        )
        m2 = sweep(cfg2, [2.0, 0.5], ["auto", 0.1], threads=1)
        for key, val in m1["cells"].items():
            assert m2["cells"][key] == val

    def test_matrix_csv_layout(self, tmp_path):
        template = AlgorithmSpec(name="ids", kind="ids")
        cfg = small_config(tmp_path, algorithms=(template,), horizon=8, repetitions=1)
        out = str(tmp_path / "sweep.csv")
        sweep(cfg, [0.5, 1.0], ["auto", 0.5], threads=1, out_path=out)
        lines = open(out).read().splitlines()
        assert lines[0] == "beta,auto,0.5"
        assert lines[1].startswith("0.5,") and lines[2].startswith("1,")
        assert len(lines) == 3


class TestConfigSerialization:
    def test_json_roundtrip(self, tmp_path):
        cfg = small_config(tmp_path)
        d = json.loads(json.dumps(cfg.to_dict()))
        back = ExperimentConfig.from_dict(d)
        assert back.canonical_json() == cfg.canonical_json()
        assert back.config_hash() == cfg.config_hash()

    def test_duplicate_names_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="unique"):
            small_config(
                tmp_path,
                algorithms=(
                    AlgorithmSpec(name="a", kind="linucb"),
                    AlgorithmSpec(name="a", kind="thompson"),
                ),
            )


class TestCli:
    def _write_config(self, tmp_path, horizon=32, reps=2):
        cfg = small_config(tmp_path, horizon=horizon, repetitions=reps)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(cfg.to_dict()))
        return path, cfg

    def test_run_and_aggregate_roundtrip(self, tmp_path, capsys):
        path, cfg = self._write_config(tmp_path)
        assert cli_main(["run", str(path), "--threads", "1"]) == 0
        assert cli_main(["aggregate", cfg.output_dir]) == 0
        out = capsys.readouterr().out
        assert "aggregated" in out
        assert os.path.exists(os.path.join(cfg.output_dir, "aggregate.csv"))

    def test_lb_prints_constant_near_four(self, tmp_path, capsys):
        spec = json.dumps(
            {
                "kind": "explicit",
                "actions": [[1.0, 0.0], [0.0, 1.0]],
                "theta_star": [1.0, 0.5],
                "noise_std": 1.0,
                "label": "ortho2",
            }
        )
        assert cli_main(["lb", spec, "--budget", "20000"]) == 0
        out = capsys.readouterr().out
        line = [l for l in out.splitlines() if l.startswith("[subgradient] c* =")][0]
        value = float(line.split("=")[1])
        assert abs(value - 4.0) < 0.1

    def test_lb_eoo_reports_reference_value(self, tmp_path, capsys):
        spec = json.dumps({"kind": "eoo", "epsilon": 0.01, "noise_std": SIGMA})
        assert cli_main(["lb", spec, "--budget", "5000"]) == 0
        out = capsys.readouterr().out
        assert "64" in out

    def test_selftest_passes(self, capsys):
        assert cli_main(["selftest", "--fast"]) == 0

    def test_sweep_out_names_the_matrix_file(self, tmp_path):
        # --out is the matrix CSV path; traces stay in the config directory.
        cfg = small_config(
            tmp_path,
            horizon=8,
            repetitions=1,
            algorithms=(AlgorithmSpec(name="ids", kind="ids"),),
        )
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_dict()))
        matrix = tmp_path / "matrix.csv"
        rc = cli_main(
            ["sweep", str(path), "--betas", "1", "--etas", "auto", "--threads", "1",
             "--out", str(matrix)]
        )
        assert rc == 0
        assert matrix.is_file()
        assert open(matrix).readline().startswith("beta,")

    def test_unknown_flag_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            cli_main(["run", "--bogus"])
        assert exc.value.code == 2

    def test_runtime_failure_exits_one(self, tmp_path):
        assert cli_main(["run", str(tmp_path / "missing.json")]) == 1
