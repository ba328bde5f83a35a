# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#     http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

# Created date: 19th October 2026
# Copyright 2026 The Polysynapse Authors

"""
End-to-end runs of the command line pipeline on planted synthetic scenes: train on one scene, predict on another.
"""

import json
import time

import numpy as np
import pytest

from polysynapse import cli
from polysynapse.base import LabelVolume, Point3, TbarPrediction
from polysynapse.config import PLANTED_SCENE_SETTINGS
from polysynapse.utilities import export
from polysynapse.utilities.performance import break_even_point

TRAIN_SEED = 0
TEST_SEED = 1
RUNTIME_LIMIT_SECONDS = 300.0


def run(*arguments) -> int:
    return cli.main([str(ii) for ii in arguments])


def scene(directory) -> dict:
    return {ii_name: directory / f"{ii_name}.json" for ii_name in ["gray", "labels", "ground_truth"]}


@pytest.fixture(scope="module")
def planted_run(tmp_path_factory) -> dict:
    """Paths of one full pipeline run and its wall-clock duration."""
    root = tmp_path_factory.mktemp("planted")
    config = root / "config.json"
    config.write_text(json.dumps(PLANTED_SCENE_SETTINGS))
    train_dir, test_dir, out = root / "train", root / "test", root / "predicted"

    start = time.perf_counter()
    for ii_dir, ii_seed in [(train_dir, TRAIN_SEED), (test_dir, TEST_SEED)]:
        assert run("--config", config, "synth", "--seed", ii_seed, "--output-dir", ii_dir) == cli.EXIT_OK
    train, test = scene(train_dir), scene(test_dir)

    scorer_training = ["--gray", train["gray"], "--ground-truth", train["ground_truth"]]
    assert run("--config", config, "tbar-train", *scorer_training, "--output-dir", train_dir) == cli.EXIT_OK
    partner_training = ["--gray", train["gray"], "--labels", train["labels"], "--ground-truth", train["ground_truth"]]
    assert run("--config", config, "psd-train", *partner_training, "--output-dir", train_dir) == cli.EXIT_OK
    train["tbar_model"], train["psd_model"] = train_dir / "tbar_model.json", train_dir / "psd_model.json"

    predict_args = ["--config", config]
    detection = ["--gray", test["gray"], "--model", train["tbar_model"], "--output-dir", out]
    assert run(*predict_args, "tbar-predict", *detection) == cli.EXIT_OK
    partners = ["--gray", test["gray"], "--labels", test["labels"], "--model", train["psd_model"]]
    assert run(*predict_args, "psd-predict", *partners, "--tbars", out / "tbars.json", "--output-dir", out) == 0

    tbar_eval = ["--tbars", out / "tbars.json", "--ground-truth", test["ground_truth"], "--labels", test["labels"]]
    assert run("eval-pr", "--mode", "tbar", *tbar_eval, "--same-segment", "--output-dir", root / "tbar_eval") == 0
    graph_eval = ["--synapses", out / "synapses.json", "--labels", test["labels"]]
    graph_eval += ["--ground-truth", test["ground_truth"]]
    assert run("eval-pr", "--mode", "unweighted", *graph_eval, "--output-dir", root / "graph_eval") == 0
    elapsed = time.perf_counter() - start

    return {
        "root": root,
        "config": config,
        "train": train,
        "test": test,
        "predicted": out,
        "tbar_curve": export.read_pr_curve(root / "tbar_eval" / "pr.csv"),
        "graph_curve": export.read_pr_curve(root / "graph_eval" / "pr.csv"),
        "elapsed": elapsed,
    }


def test_planted_tbars_are_found_in_their_segments(planted_run):
    points = [(ii.precision, ii.recall) for ii in planted_run["tbar_curve"]]
    assert any(p is not None and r is not None and p >= 0.9 and r >= 0.9 for p, r in points)


def test_planted_connectome_break_even_point(planted_run):
    best = break_even_point(planted_run["graph_curve"])
    assert best is not None
    assert best[1] >= 0.9


def test_pipeline_runs_within_time_limit(planted_run):
    assert planted_run["elapsed"] < RUNTIME_LIMIT_SECONDS


def nearest_foreign_voxel(labels: LabelVolume, pos: Point3) -> Point3:
    """The closest voxel of a body other than the one at pos; ties go to the first in (z, y, x) order."""
    zs, ys, xs = np.nonzero(labels.data != labels.body_at(pos))
    squared = (xs - pos.x) ** 2 + (ys - pos.y) ** 2 + (zs - pos.z) ** 2
    best = int(np.argmin(squared))
    return Point3(int(xs[best]), int(ys[best]), int(zs[best]))


def tbar_points(curve) -> list:
    return [(ii.precision, ii.recall) for ii in curve]


def test_segment_constraint_penalises_displaced_tbars_and_shifting_recovers_them(planted_run, tmp_path):
    """A fifth of the true T-bars are moved just across a membrane into the neighbouring body."""
    test = planted_run["test"]
    labels = export.read_volume(test["labels"], LabelVolume)
    truth = export.read_synapses(test["ground_truth"]).tbars
    n_displaced = len(truth) // 5
    assert n_displaced >= 1
    predictions = []
    for ii, ii_tbar in enumerate(truth):
        pos = nearest_foreign_voxel(labels, ii_tbar.pos) if ii < n_displaced else ii_tbar.pos
        predictions.append(TbarPrediction(pos, 1.0 - 0.01 * ii))
    export.write_tbars(tmp_path / "displaced.json", predictions)

    def evaluate(tbars, name: str, *extra) -> list:
        common = ["--tbars", tbars, "--ground-truth", test["ground_truth"], "--labels", test["labels"]]
        assert run("eval-pr", "--mode", "tbar", *common, *extra, "--output-dir", tmp_path / name) == 0
        return tbar_points(export.read_pr_curve(tmp_path / name / "pr.csv"))

    distance_only = evaluate(tmp_path / "displaced.json", "distance")
    same_segment = evaluate(tmp_path / "displaced.json", "segment", "--same-segment")
    assert distance_only[0] == (1.0, 1.0)
    for (p_distance, r_distance), (p_segment, r_segment) in zip(distance_only, same_segment):
        assert p_distance >= p_segment and r_distance >= r_segment
    assert same_segment[0][0] < 1.0 and same_segment[0][1] < 1.0

    shifting = ["--gray", test["gray"], "--tbars", tmp_path / "displaced.json", "--shift-radius", 5]
    assert run("tbar-shift", *shifting, "--output-dir", tmp_path) == 0
    shifted = evaluate(tmp_path / "shifted_tbars.json", "shifted", "--same-segment")
    assert shifted[0][1] > same_segment[0][1]
    assert shifted[0][0] >= same_segment[0][0]
    assert shifted[0] == (1.0, 1.0)


def test_proximity_baseline_is_dominated_by_the_pipeline(planted_run, tmp_path):
    test = planted_run["test"]
    sources = ["--labels", test["labels"], "--ground-truth", test["ground_truth"]]
    assert run("baseline", *sources, "--sample-counts", 10, 20, 50, "--output-dir", tmp_path) == cli.EXIT_OK
    pipeline = [ii for ii in planted_run["graph_curve"] if ii.precision is not None and ii.recall is not None]
    for ii_point in export.read_pr_curve(tmp_path / "baseline_pr.csv"):
        assert any(
            jj.precision >= (ii_point.precision or 0.0)
            and jj.recall >= (ii_point.recall or 0.0)
            and (jj.precision, jj.recall) != (ii_point.precision, ii_point.recall)
            for jj in pipeline
        )


def test_threaded_run_writes_identical_files(planted_run, tmp_path):
    train, test = planted_run["train"], planted_run["test"]
    retrained = ["--gray", train["gray"], "--labels", train["labels"], "--ground-truth", train["ground_truth"]]
    config = ["--config", planted_run["config"]]
    assert run(*config, "psd-train", *retrained, "--threads", 4, "--output-dir", tmp_path) == cli.EXIT_OK
    assert (tmp_path / "psd_model.json").read_bytes() == train["psd_model"].read_bytes()

    detection = ["--gray", test["gray"], "--model", train["tbar_model"], "--threads", 4, "--output-dir", tmp_path]
    assert run(*config, "tbar-predict", *detection) == cli.EXIT_OK
    partners = ["--gray", test["gray"], "--labels", test["labels"], "--model", train["psd_model"]]
    partners += ["--tbars", tmp_path / "tbars.json", "--threads", 4, "--output-dir", tmp_path]
    assert run(*config, "psd-predict", *partners) == cli.EXIT_OK
    for ii_name in ["tbars.json", "synapses.json"]:
        assert (tmp_path / ii_name).read_bytes() == (planted_run["predicted"] / ii_name).read_bytes()
