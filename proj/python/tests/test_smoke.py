"""Smoke tests for the _aspire extension module."""

import json

import pytest

_aspire = pytest.importorskip("_aspire")


@pytest.fixture(scope="module")
def bench_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    summary = json.loads(
        _aspire.make_benchmark(
            n_classes=2, per_class_train=40, spurious_rate=0.9, seed=3, out_dir=str(out)
        )
    )
    assert summary["train_items"] == 80
    assert summary["test_items"] == 40
    assert len(summary["ground_truth"]) == 2
    return out


def test_stemming_and_roots():
    assert _aspire.porter_stem("dogs") == "dog"
    assert _aspire.phrase_root("two dogs") == "dog"
    assert _aspire.phrase_root("snowy mountain") == "snowi mountain"


def test_collapse_merges_variants():
    groups = [json.loads(g) for g in _aspire.collapse([("dogs", 1), ("dog", 2), ("two dogs", 1)])]
    assert len(groups) == 1
    assert groups[0]["frequency"] == 4


def test_train_and_evaluate(bench_dir, tmp_path):
    ckpt = tmp_path / "model.bin"
    summary = json.loads(
        _aspire.train(
            str(bench_dir / "train"),
            json.dumps(
                {
                    "strategy": "erm",
                    "epochs": 10,
                    "learning_rate": 0.02,
                    "seed": 1,
                    "strategy_params": {"conv1": 6, "conv2": 12},
                }
            ),
            str(ckpt),
        )
    )
    assert summary["epoch_losses"][-1] < summary["epoch_losses"][0]
    assert ckpt.exists()

    metrics = json.loads(_aspire.evaluate(str(ckpt), str(bench_dir / "test")))
    assert 0.0 <= metrics["worst_group_accuracy"] <= 1.0
    assert 0.0 <= metrics["average_accuracy"] <= 1.0
    assert metrics["worst_group_accuracy"] == min(metrics["per_group_accuracy"].values())


def test_full_pipeline_and_report(bench_dir, tmp_path):
    config = {
        "name": "smoke",
        "holdout_fraction": 0.5,
        "k": 3,
        "multiplier": 1,
        "budget_mode": "class_match",
        "augment": True,
        "train": {
            "strategy": "erm",
            "epochs": 10,
            "learning_rate": 0.02,
            "seed": 2,
            "strategy_params": {"conv1": 6, "conv2": 12},
        },
        "adapters": {"suite": "synthbench", "bench_dir": str(bench_dir)},
        "seed": 2,
        "cache_dir": str(tmp_path / "cache"),
    }
    manifest = json.loads(_aspire.run_pipeline(json.dumps(config)))
    assert manifest["augmented"] is True
    assert "base_metrics" in manifest and "retrain_metrics" in manifest
    assert "catalog" in manifest["stages"]

    manifest_path = (
        tmp_path / "cache" / manifest["config_hash"] / "manifest.json"
    )
    assert manifest_path.exists()

    rows = json.loads(_aspire.report([str(manifest_path)]))["rows"]
    assert {row["strategy"] for row in rows} == {"erm"}
    assert any(row["aspire"] for row in rows)


def test_config_errors_surface_as_python_exceptions():
    with pytest.raises(_aspire.ConfigError):
        _aspire.make_benchmark(
            n_classes=0, per_class_train=10, spurious_rate=0.5, seed=1, out_dir="/tmp/x"
        )
