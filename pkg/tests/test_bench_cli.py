import csv
import json
import math

import numpy as np
import pytest

from blockcs import bench
from blockcs.bench import ExperimentConfig, bench_snr, bench_subsampling, load_config, profile
from blockcs.cli import main
from blockcs.kernel_learning import CorrelationKernel
from blockcs.tensor_core import save_tensor


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def write_config(tmp_path, **overrides):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(overrides))
    return str(path)


TINY_1D = dict(signal={"dims": [8], "num_clusters": 1, "cluster_radius": 1, "sparsity": 2},
               betas=[1, 2], dataset_size=2)


def test_gen_data_writes_files_and_manifest(tmp_path):
    cfg = write_config(tmp_path, **TINY_1D)
    assert main(["gen-data", "--config", cfg, "--data", str(tmp_path / "d")]) == 0
    names = sorted(p.name for p in (tmp_path / "d").iterdir())
    assert names == ["manifest.json", "signal_0.json", "signal_1.json"]
    manifest = json.loads((tmp_path / "d" / "manifest.json").read_text())
    parsed = ExperimentConfig.from_json(manifest["config"])
    assert parsed == load_config(cfg)
    assert parsed.signal.dims == (8,)


def test_gen_data_rerun_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, **TINY_1D)
    main(["gen-data", "--config", cfg, "--data", str(tmp_path / "a")])
    main(["gen-data", "--config", cfg, "--data", str(tmp_path / "b")])
    for name in ("signal_0.json", "signal_1.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    main(["gen-data", "--config", cfg, "--seed", "7", "--data", str(tmp_path / "c")])
    assert (tmp_path / "a" / "signal_0.json").read_bytes() != (tmp_path / "c" / "signal_0.json").read_bytes()


def test_learn_kernel_toy(tmp_path):
    data = tmp_path / "toy"
    data.mkdir()
    save_tensor(data / "signal_0.json", np.array([1.0, 1.0, 0.0]))
    assert main(["learn-kernel", "--data", str(data), "--out", str(tmp_path / "o")]) == 0
    obj = json.loads((tmp_path / "o" / "kernel.json").read_text())
    assert obj == {"order": 1, "values": [0.5, 0.0, 0.5]}
    np.testing.assert_array_equal(CorrelationKernel.load(tmp_path / "o" / "kernel.json").values, [0.5, 0, 0.5])
    assert json.loads((tmp_path / "o" / "stats.json").read_text())["s_avg"] == 2


def test_learn_kernel_empty_dir_exit_2(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["learn-kernel", "--data", str(tmp_path / "empty"), "--out", str(tmp_path)]) == 2


def test_bad_config_exit_2(tmp_path):
    assert main(["bench-snr", "--config", write_config(tmp_path, trials=0), "--out", str(tmp_path)]) == 2
    assert main(["bench-snr", "--config", write_config(tmp_path, bogus=1), "--out", str(tmp_path)]) == 2
    assert main(["bench-snr", "--config", write_config(tmp_path, betas=[3]), "--out", str(tmp_path)]) == 2
    assert main(["bench-snr", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    assert main(["bench-snr", "--profile", "huge", "--out", str(tmp_path)]) == 2


def test_measurement_rounding():
    cfg = profile("desk")
    assert [cfg.measurements_for(r) for r in (0.2, 0.3, 0.4, 0.5)] == [48, 80, 96, 128]
    assert profile("paper").measurements_for(0.4) % 64 == 0


def test_learned_kernel_is_reused(tmp_path):
    cfg = write_config(tmp_path, **TINY_1D)
    main(["gen-data", "--config", cfg, "--data", str(tmp_path / "d")])
    main(["learn-kernel", "--config", cfg, "--data", str(tmp_path / "d"), "--out", str(tmp_path / "k")])
    c = load_config(write_config(tmp_path, **TINY_1D, kernel_path=str(tmp_path / "k" / "kernel.json")))
    kernel, s_avg = bench.kernel_for(c)
    assert kernel.order == 1 and s_avg == 2


def test_bench_snr_noiseless_easy_instance():
    cfg = dataclass_replace(profile("tiny"), snr_grid=(200,), trials=1, ratio=0.5)
    rows, _ = bench_snr(cfg)
    assert len(rows) == 2 * 2
    assert all(r[3] < 1e-6 for r in rows)


def dataclass_replace(cfg, **kw):
    import dataclasses
    return dataclasses.replace(cfg, **kw)


def test_bench_snr_cli_csv(tmp_path):
    assert main(["bench-snr", "--profile", "tiny", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "bench_snr.csv")
    assert list(rows[0]) == ["snr_db", "beta", "method", "nmse", "mean_ms"]
    assert len(rows) == 2 * 2 * 2
    for r in rows:
        v = float(r["nmse"])
        assert math.isfinite(v) and v >= 0
    side = json.loads((tmp_path / "bench_snr.json").read_text())
    assert side["config"]["name"] == "tiny" and side["m"] == 24  # 0.4 * 64 rounded to a multiple of 4


def test_bench_nmse_columns_are_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["bench-snr", "--profile", "tiny", "--out", str(tmp_path / d)]) == 0
        assert main(["bench-subsampling", "--profile", "tiny", "--out", str(tmp_path / d)]) == 0
    a, b = read_csv(tmp_path / "a" / "bench_snr.csv"), read_csv(tmp_path / "b" / "bench_snr.csv")
    assert [(r["snr_db"], r["beta"], r["method"], r["nmse"]) for r in a] == \
        [(r["snr_db"], r["beta"], r["method"], r["nmse"]) for r in b]
    assert (tmp_path / "a" / "bench_subsampling.csv").read_bytes() == \
        (tmp_path / "b" / "bench_subsampling.csv").read_bytes()


def test_subsampling_full_ratio_is_exact():
    cfg = dataclass_replace(profile("tiny"), ratio_grid=(1.0,), betas=(1,), snr_db=300.0, trials=2)
    rows, _ = bench_subsampling(cfg)
    assert [r[:3] for r in rows] == [(1.0, 1, "standard-bcs"), (1.0, 1, "serial-bcs")]
    assert all(r[3] < 1e-12 for r in rows)


def test_infeasible_point_is_skipped_with_blank_row(caplog):
    cfg = dataclass_replace(profile("tiny"), max_stored_scalars=1000, snr_grid=(30,), trials=1)
    rows, _ = bench_snr(cfg)
    beta1 = [r for r in rows if r[1] == 1]
    assert beta1 and all(r[3] == "" for r in beta1)
    assert all(r[3] != "" for r in rows if r[1] == 4)
    assert "skipping" in caplog.text


def test_timing_rows(tmp_path):
    cfg = write_config(tmp_path, timing_trials=1)
    assert main(["timing", "--profile", "tiny", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "timing.csv")
    assert len(rows) == 2 * 3
    assert {r["method"] for r in rows} == set(bench.TIMING_METHODS)
    assert all(float(r["wall_ms"]) > 0 for r in rows)


def test_bounds_cli(tmp_path):
    assert main(["bounds", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "bounds.csv")
    assert len(rows) == 50
    vals = [float(r["mse_upper_bound"]) for r in rows]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert main(["bounds", "--m", "2000", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "bounds.csv")
    assert rows[1]["mse_upper_bound"] == ""


def test_config_json_roundtrip():
    for name in ("desk", "paper", "timing", "tiny"):
        cfg = profile(name)
        assert ExperimentConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg


def test_seed_override():
    assert load_config(None, "tiny", 5).seed == 5
    with pytest.raises(bench.ConfigError):
        profile("nope")
