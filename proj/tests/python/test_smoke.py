# Copyright 2026 The embsense Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Smoke tests for the Python package."""

import json
import os
from pathlib import Path

import numpy as np
import pytest

import embsense

DATA_DIR = Path(os.environ.get(
    "EMBSENSE_TEST_DATA_DIR", Path(__file__).resolve().parents[1] / "data"))


def test_emb1_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.standard_normal((5, 7)).astype(np.float32)
    ids = [f"s{i}" for i in range(5)]
    labels = ["a", "a", "b", "b", "b"]
    path = tmp_path / "x.emb1"
    embsense.write_embeddings(path, data, ids, labels, effect="gain",
                              parameter=-10.0, producer={"name": "test"})
    m = embsense.read_embeddings(path)
    assert m["data"].dtype == np.float32
    np.testing.assert_array_equal(m["data"], data)
    assert m["sample_ids"] == ids
    assert m["class_labels"] == labels
    assert m["effect"] == "gain"
    assert m["parameter"] == -10.0
    assert m["producer"] == {"name": "test"}


def test_bad_files_raise(tmp_path):
    bad = tmp_path / "bad.emb1"
    bad.write_bytes(b"NOPE" + bytes(64))
    with pytest.raises(embsense.EmbsenseError):
        embsense.read_embeddings(bad)
    with pytest.raises(embsense.EmbsenseError):
        embsense.write_embeddings(tmp_path / "y.emb1",
                                  np.zeros((2, 3), np.float32), ["a", "a"],
                                  ["c", "c"])


def test_statistics_match_numpy_oracles():
    rng = np.random.default_rng(1)
    a = rng.standard_normal(30)
    b = 0.5 * a + rng.standard_normal(30)
    ra = np.argsort(np.argsort(a)) + 1.0
    rb = np.argsort(np.argsort(b)) + 1.0
    assert embsense.spearman(a, b) == pytest.approx(
        np.corrcoef(ra, rb)[0, 1], abs=1e-12)

    scores = rng.standard_normal(40)
    labels = (rng.random(40) < 0.5).astype(int)
    labels[:2] = [0, 1]
    pos, neg = scores[labels == 1], scores[labels == 0]
    pairs = (pos[:, None] > neg[None, :]).mean()
    assert embsense.roc_auc(scores, labels) == pytest.approx(pairs, abs=1e-12)


def test_cca_recovers_linear_trajectory():
    v = np.array([1.0, -2.0, 0.5, 3.0])
    x = np.outer(np.arange(6.0), v) + 0.25
    r = embsense.cca_single_target(x, list(range(6)))
    assert r["rho"] == pytest.approx(1.0, abs=1e-12)
    assert r["r2"] == pytest.approx(1.0, abs=1e-12)
    assert abs(np.dot(r["direction"], v / np.linalg.norm(v))) == pytest.approx(1.0)


def test_effects_and_embedder():
    sr = 22050
    t = np.arange(sr) / sr
    tone = (0.5 * np.sin(2 * np.pi * 440 * t)).astype(np.float32)
    quiet = embsense.apply_effect("gain", -20.0, tone, sr)
    np.testing.assert_allclose(quiet, tone * 0.1, rtol=1e-6, atol=1e-9)
    crushed = embsense.apply_effect("bitcrush", 4, tone, sr)
    np.testing.assert_array_equal(
        embsense.apply_effect("bitcrush", 4, crushed, sr), crushed)
    grid = embsense.parameter_grid("gain")
    assert grid["params"][grid["neutral_index"]] == 0.0
    assert len(embsense.parameter_grid("bitcrush")["params"]) == 12

    emb = embsense.embed_logmel(tone, sr, n_mels=32)
    assert emb.shape == (64,)
    assert np.all(np.isfinite(emb))
    with pytest.raises(embsense.EmbsenseError):
        embsense.apply_effect("fuzz", 1.0, tone, sr)


def _small_config():
    return json.loads((DATA_DIR / "small_config.json").read_text())


def test_pipeline_runs_and_caches(tmp_path):
    cfg = _small_config()
    out = tmp_path / "run"
    first = embsense.run(cfg, output_dir=out, workers=2)
    assert [s for s, _, _ in first] == [
        "synth", "effects", "embed", "analyze", "evaluate"]
    assert all(status == "ran" and failed == 0 for _, status, failed in first)
    second = embsense.run(cfg, output_dir=out)
    assert all(status == "cached" for _, status, _ in second)
    header = (out / "evaluation" / "report.csv").read_text().splitlines()[0]
    assert header == "# run_id: " + embsense.run_id(cfg)


def test_config_errors_raise(tmp_path):
    cfg = _small_config()
    cfg["bogus"] = 1
    with pytest.raises(embsense.EmbsenseError):
        embsense.run(cfg, output_dir=tmp_path)
    with pytest.raises(embsense.EmbsenseError):
        embsense.run(_small_config(), stage="nope", output_dir=tmp_path)


def test_externally_written_embeddings_feed_the_pipeline(tmp_path):
    # Mimics an extractor: one EMB1 file per condition in the pipeline layout.
    rng = np.random.default_rng(3)
    n, d = 12, 16
    ids = [f"clip{i:02d}" for i in range(n)]
    labels = ["kick" if i < n // 2 else "snare" for i in range(n)]
    # Multiples of 1/8, exact in float32; rows orthogonal to v.
    v = rng.choice([-0.125, 0.125], size=d)
    clean = np.round(rng.standard_normal((n, d)) * 8) / 8
    clean[:, -1] = -(clean[:, :-1] @ v[:-1]) / v[-1]
    emb = tmp_path / "emb"
    embsense.write_embeddings(emb / "clean.emb1", clean, ids, labels,
                              producer={"name": "fake-model"})
    grid = embsense.parameter_grid("reverb", 6)["params"]
    for j, p in enumerate(grid):
        embsense.write_embeddings(emb / "reverb" / f"{j:02d}.emb1",
                                  clean + (j + 1) * v, ids, labels,
                                  effect="reverb", parameter=p)

    r = embsense.global_cca(emb, "reverb", "kick")
    assert r["r2"] == pytest.approx(1.0, abs=1e-6)

    cfg = {
        "dataset": {"source": "embeddings", "embeddings_dir": str(emb)},
        "embedder": {"type": "external"},
        "effects": [{"name": "reverb", "steps": 6}],
    }
    stages = embsense.run(cfg, output_dir=tmp_path / "out")
    assert [status for _, status, _ in stages][:2] == ["skipped", "skipped"]
    assert sum(failed for _, _, failed in stages) == 0
    table = (tmp_path / "out" / "analysis" / "table.csv").read_text()
    assert "fake-model,reverb,2" in table
    assert "100.00 ± 0.00" in table
