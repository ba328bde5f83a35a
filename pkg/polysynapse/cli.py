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
Command line interface.

Every subcommand reads the formats of `polysynapse.utilities.export`, writes its outputs into --output-dir together
with a `<command>.manifest.json`, and leaves nothing behind when it fails. Exit codes: 0 success, 2 usage error,
3 data error, 4 internal error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from polysynapse.algos.baseline import baseline_curve, proximity_baseline
from polysynapse.algos.mlp import MlpModel
from polysynapse.algos.psd_partners import predict_partners, psd_train
from polysynapse.algos.scorers import FieldScorer, reference_scorer_train, scorer_from_dict
from polysynapse.algos.tbar_detection import (
    detect_tbars,
    filter_tbars_by_confidence,
    make_voxel_labels,
    shift_predictions,
)
from polysynapse.base import GrayVolume, LabelVolume, ScalarField, SynapseSet, TbarPrediction
from polysynapse.config import PipelineConfig
from polysynapse.data.simulate_data import simulated_scene
from polysynapse.utilities import export
from polysynapse.utilities.connectome import (
    BodyFilter,
    build_graph,
    collapse_ground_truth,
    filter_bodies,
    map_bodies_by_overlap,
    remap_synapses,
    resolve_partner_bodies,
    undirect_graph,
)
from polysynapse.utilities.performance import (
    added_missed_curve,
    break_even_point,
    connections_added_missed,
    count_scatter,
    graph_metric_functions,
    graph_pr_curve,
    tbar_pr_curve,
)


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4

DEFAULT_THRESHOLDS = [round(ii / 20, 2) for ii in range(20)]
EVAL_MODES = ["tbar", "weighted", "unweighted", "thresholded", "asymmetric", "added-missed", "scatter"]
SEEDED_SECTIONS = ["tbar_train", "psd_train", "baseline", "synth"]

Inputs = List[Path]


def configure_logging(verbosity: int) -> None:
    """WARNING by default, INFO with -v, DEBUG with -vv."""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _ground_truth_tbars(path: Path) -> List[TbarPrediction]:
    """T-bars from either a T-bar file or a synapse file."""
    data = export.read_json(path)
    if "tbars" in data:
        return export.read_tbars(path)
    return export.read_synapses(path).tbars


def _resolved_ground_truth(
    path: Path, labels: LabelVolume, gray: Optional[GrayVolume], shift_radius: float
) -> SynapseSet:
    return resolve_partner_bodies(export.read_synapses(path), labels, gray, shift_radius)


def _ground_truth_graph(args: argparse.Namespace, labels: LabelVolume, inputs: Inputs):
    """The ground-truth graph from --gt-graph or --ground-truth, and the resolved ground truth when available."""
    if args.gt_graph:
        inputs.append(Path(args.gt_graph))
        return export.read_graph(args.gt_graph), None
    inputs.append(Path(args.ground_truth))
    gray = None
    if args.gray:
        gray = export.read_volume(args.gray, GrayVolume)
        inputs.append(Path(args.gray))
    ground_truth = _resolved_ground_truth(Path(args.ground_truth), labels, gray, args.psd_shift_radius)
    if args.collapse_gt:
        ground_truth = collapse_ground_truth(ground_truth, labels)
    return build_graph(ground_truth, labels, 0.0), ground_truth


def _metric_params(args: argparse.Namespace, mode: str) -> dict:
    params = {"t": args.t, "t1": args.t1, "t2": args.t2}
    return {ii_key: params[ii_key] for ii_key in graph_metric_functions[mode]["required"]}


def cmd_synth(args, config: PipelineConfig, staged: export.StagedOutputs, out: Path) -> Tuple[Inputs, PipelineConfig]:
    config = config.override(
        "synth",
        n_bodies=args.n_bodies,
        n_tbars=args.n_tbars,
        noise_sigma=args.noise,
        dims=tuple(args.dims) if args.dims else None,
        split_bodies=args.split_bodies,
    )
    scene = simulated_scene(config.synth)
    export.write_volume(out / "gray.json", scene.gray, staged)
    export.write_volume(out / "labels.json", scene.labels, staged)
    export.write_synapses(out / "ground_truth.json", scene.ground_truth, staged)
    if scene.predicted_labels is not None:
        export.write_volume(out / "predicted_labels.json", scene.predicted_labels, staged)
    return [], config


def cmd_tbar_train(args, config, staged, out):
    config = config.override("detector", positive_radius=args.positive_radius, patch_radius=args.patch_radius)
    config = config.override("tbar_train", epochs=args.epochs)
    gray = export.read_volume(args.gray, GrayVolume)
    annotations = [ii_tbar.pos for ii_tbar in _ground_truth_tbars(Path(args.ground_truth))]
    labels = make_voxel_labels(annotations, gray.dims, config.detector.positive_radius)
    scorer = reference_scorer_train(gray, labels, config.detector.patch_radius, config.tbar_train)
    export.write_json(out / "tbar_model.json", scorer.to_dict(), staged)
    return [Path(args.gray), Path(args.ground_truth)], config


def cmd_tbar_predict(args, config, staged, out):
    config = config.override(
        "detector",
        score_threshold=args.score_threshold,
        nms_radius=args.nms_radius,
        smooth_sigma=args.smooth_sigma,
        shift_radius=args.shift_radius,
    )
    gray = export.read_volume(args.gray, GrayVolume)
    inputs = [Path(args.gray)]
    if args.model:
        scorer = scorer_from_dict(export.read_json(args.model))
        inputs.append(Path(args.model))
    else:
        scorer = FieldScorer(export.read_volume(args.scores, ScalarField))
        inputs.append(Path(args.scores))
    tbars = detect_tbars(gray, scorer, config.detector, threads=args.threads)
    export.write_tbars(out / "tbars.json", tbars, staged)
    return inputs, config


def cmd_tbar_shift(args, config, staged, out):
    config = config.override("detector", shift_radius=args.shift_radius)
    gray = export.read_volume(args.gray, GrayVolume)
    tbars = shift_predictions(export.read_tbars(args.tbars), gray, config.detector.shift_radius)
    export.write_tbars(out / "shifted_tbars.json", tbars, staged)
    return [Path(args.gray), Path(args.tbars)], config


def _partner_overrides(args, config: PipelineConfig) -> PipelineConfig:
    return config.override(
        "partners",
        candidate_radius=args.candidate_radius,
        dark_threshold=args.dark_threshold,
        dilation_radii=tuple(args.dilation_radii) if args.dilation_radii else None,
        decision_threshold=getattr(args, "decision_threshold", None),
    )


def cmd_psd_train(args, config, staged, out):
    config = _partner_overrides(args, config).override("psd_train", epochs=args.epochs)
    gray = export.read_volume(args.gray, GrayVolume)
    labels = export.read_volume(args.labels, LabelVolume)
    ground_truth = _resolved_ground_truth(Path(args.ground_truth), labels, gray, args.psd_shift_radius)
    model = psd_train(gray, labels, ground_truth, config.partners, config.psd_train, threads=args.threads)
    export.write_json(out / "psd_model.json", model.to_dict(), staged)
    return [Path(args.gray), Path(args.labels), Path(args.ground_truth)], config


def cmd_psd_predict(args, config, staged, out):
    config = _partner_overrides(args, config)
    gray = export.read_volume(args.gray, GrayVolume)
    labels = export.read_volume(args.labels, LabelVolume)
    model = MlpModel.from_dict(export.read_json(args.model))
    inputs = [Path(args.gray), Path(args.labels), Path(args.model)]
    if args.tbars_from_ground_truth:
        tbars = _ground_truth_tbars(Path(args.tbars_from_ground_truth))
        inputs.append(Path(args.tbars_from_ground_truth))
    else:
        tbars = export.read_tbars(args.tbars)
        inputs.append(Path(args.tbars))
    if args.min_tbar_confidence is not None:
        tbars = filter_tbars_by_confidence(tbars, args.min_tbar_confidence)
    synapses = predict_partners(gray, labels, tbars, model, config.partners, threads=args.threads)
    export.write_synapses(out / "synapses.json", synapses, staged)
    return inputs, config


def cmd_graph_build(args, config, staged, out):
    labels = export.read_volume(args.labels, LabelVolume)
    synapses = export.read_synapses(args.synapses)
    if args.resolve_partners:
        synapses = resolve_partner_bodies(synapses, labels)
    if args.collapse_gt:
        synapses = collapse_ground_truth(synapses, labels)
    skipped = []
    graph = build_graph(synapses, labels, args.psd_threshold, skip_report=skipped)
    if skipped:
        logger.warning("%d T-bars were skipped on label 0.", len(skipped))
    if args.undirected:
        graph = undirect_graph(graph)
    export.write_graph(out / "graph.csv", graph, staged)
    return [Path(args.labels), Path(args.synapses)], config


def _predicted_synapses(args, labels: LabelVolume, inputs: Inputs) -> SynapseSet:
    synapses = export.read_synapses(args.synapses)
    inputs.append(Path(args.synapses))
    if args.pred_labels:
        pred_labels = export.read_volume(args.pred_labels, LabelVolume)
        inputs.append(Path(args.pred_labels))
        synapses = remap_synapses(synapses, map_bodies_by_overlap(pred_labels, labels))
    return synapses


def cmd_eval_pr(args, config, staged, out):
    config = config.override("match", max_distance=args.max_distance)
    thresholds = args.thresholds or DEFAULT_THRESHOLDS
    inputs = []

    if args.mode == "tbar":
        pred = export.read_tbars(args.tbars)
        gt = [ii_tbar.pos for ii_tbar in _ground_truth_tbars(Path(args.ground_truth))]
        inputs += [Path(args.tbars), Path(args.ground_truth)]
        segmentation = None
        if args.same_segment:
            segmentation = export.read_volume(args.labels, LabelVolume)
            inputs.append(Path(args.labels))
        curve = tbar_pr_curve(pred, gt, config.match.spec(segmentation), thresholds)
        export.write_pr_curve(out / "pr.csv", curve, staged)
        return inputs, config

    labels = export.read_volume(args.labels, LabelVolume)
    inputs.append(Path(args.labels))
    gt_graph, ground_truth = _ground_truth_graph(args, labels, inputs)
    synapses = _predicted_synapses(args, labels, inputs)
    body_filter = BodyFilter.from_ground_truth(ground_truth, labels) if args.filter_orphans else None

    if args.mode == "added-missed":
        pred_graph = build_graph(synapses, labels, args.psd_threshold)
        if body_filter is not None:
            pred_graph, gt_graph = filter_bodies(pred_graph, body_filter), filter_bodies(gt_graph, body_filter)
        export.write_added_missed(
            out / "added_missed.csv", connections_added_missed(pred_graph, gt_graph, args.t1, args.t2), staged
        )
        sweep = added_missed_curve(synapses, labels, gt_graph, thresholds, args.t1, args.t2, body_filter)
        export.write_table(out / "added_missed_curve.csv", sweep, staged)
    elif args.mode == "scatter":
        pred_graph = build_graph(synapses, labels, args.psd_threshold)
        if body_filter is not None:
            pred_graph, gt_graph = filter_bodies(pred_graph, body_filter), filter_bodies(gt_graph, body_filter)
        export.write_table(out / "scatter.csv", count_scatter(pred_graph, gt_graph), staged)
    else:
        curve = graph_pr_curve(
            synapses,
            labels,
            gt_graph,
            args.mode,
            thresholds,
            _metric_params(args, args.mode),
            body_filter,
            args.undirected,
        )
        best = break_even_point(curve)
        if best is not None:
            logger.info("Break-even point at threshold %s with precision/recall %.4f.", best[0], best[1])
        export.write_pr_curve(out / "pr.csv", curve, staged)
    return inputs, config


def cmd_baseline(args, config, staged, out):
    config = config.override("baseline", sample_count=args.sample_count, directed=False if args.undirected else None)
    labels = export.read_volume(args.labels, LabelVolume)
    inputs = [Path(args.labels)]
    gt_graph, ground_truth = _ground_truth_graph(args, labels, inputs)
    body_filter = BodyFilter.from_ground_truth(ground_truth, labels) if args.filter_orphans else None

    export.write_graph(out / "baseline_graph.csv", proximity_baseline(labels, config.baseline), staged)
    sample_counts = args.sample_counts or [config.baseline.sample_count]
    curve = baseline_curve(
        labels, gt_graph, sample_counts, args.mode, _metric_params(args, args.mode), config.baseline, body_filter
    )
    export.write_pr_curve(out / "baseline_pr.csv", curve, staged)
    return inputs, config


# Subcommand name -> handler. Each handler returns the input files it read and the effective configuration.
commands = {
    "synth": cmd_synth,
    "tbar-train": cmd_tbar_train,
    "tbar-predict": cmd_tbar_predict,
    "tbar-shift": cmd_tbar_shift,
    "psd-train": cmd_psd_train,
    "psd-predict": cmd_psd_predict,
    "graph-build": cmd_graph_build,
    "eval-pr": cmd_eval_pr,
    "baseline": cmd_baseline,
}


def _add_global_arguments(parser: argparse.ArgumentParser) -> None:
    # SUPPRESS lets the flags appear before or after the subcommand without one default hiding the other.
    parser.add_argument("--config", default=argparse.SUPPRESS, help="JSON file with stage configurations.")
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="Seed for every random stage.")
    parser.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="Worker threads (default 1).")
    parser.add_argument("--output-dir", default=argparse.SUPPRESS, help="Directory for outputs (default .).")
    parser.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS, help="-v INFO, -vv DEBUG.")


def _add_partner_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--candidate-radius", type=float)
    parser.add_argument("--dark-threshold", type=int)
    parser.add_argument("--dilation-radii", type=float, nargs="+")


def _add_ground_truth_graph_arguments(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--ground-truth", help="Ground-truth synapse JSON.")
    source.add_argument("--gt-graph", help="Ground-truth graph CSV.")
    parser.add_argument("--collapse-gt", action="store_true", help="Merge ground-truth partners sharing a body.")
    parser.add_argument("--filter-orphans", action="store_true", help="Only score bodies holding ground truth.")
    parser.add_argument("--gray", help="Image for shifting ground-truth PSD points, as given to psd-train.")
    parser.add_argument("--psd-shift-radius", type=float, default=0.0)
    parser.add_argument("--t", type=int)
    parser.add_argument("--t1", type=int)
    parser.add_argument("--t2", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polysynapse", description="Polyadic synapse detection and evaluation.")
    _add_global_arguments(parser)
    subparsers = parser.add_subparsers(dest="command", required=True)

    synth = subparsers.add_parser("synth", help="Generate a synthetic scene.")
    synth.add_argument("--n-bodies", type=int)
    synth.add_argument("--n-tbars", type=int)
    synth.add_argument("--noise", type=float)
    synth.add_argument("--dims", type=int, nargs=3, metavar=("NX", "NY", "NZ"))
    synth.add_argument("--split-bodies", type=int, help="Also emit a segmentation with this many bodies split.")

    tbar_train = subparsers.add_parser("tbar-train", help="Train the reference voxel scorer.")
    tbar_train.add_argument("--gray", required=True)
    tbar_train.add_argument("--ground-truth", required=True, help="T-bar or synapse JSON with annotations.")
    tbar_train.add_argument("--positive-radius", type=float)
    tbar_train.add_argument("--patch-radius", type=int)
    tbar_train.add_argument("--epochs", type=int)

    tbar_predict = subparsers.add_parser("tbar-predict", help="Detect T-bars.")
    tbar_predict.add_argument("--gray", required=True)
    scorer = tbar_predict.add_mutually_exclusive_group(required=True)
    scorer.add_argument("--model", help="Scorer JSON from tbar-train.")
    scorer.add_argument("--scores", help="Precomputed score volume.")
    tbar_predict.add_argument("--score-threshold", type=float)
    tbar_predict.add_argument("--nms-radius", type=float)
    tbar_predict.add_argument("--smooth-sigma", type=float)
    tbar_predict.add_argument("--shift-radius", type=float)

    tbar_shift = subparsers.add_parser("tbar-shift", help="Shift T-bars to the brightest nearby voxel.")
    tbar_shift.add_argument("--gray", required=True)
    tbar_shift.add_argument("--tbars", required=True)
    tbar_shift.add_argument("--shift-radius", type=float)

    psd_train_parser = subparsers.add_parser("psd-train", help="Train the partner classifier.")
    psd_train_parser.add_argument("--gray", required=True)
    psd_train_parser.add_argument("--labels", required=True)
    psd_train_parser.add_argument("--ground-truth", required=True)
    psd_train_parser.add_argument("--psd-shift-radius", type=float, default=0.0)
    psd_train_parser.add_argument("--epochs", type=int)
    _add_partner_arguments(psd_train_parser)

    psd_predict = subparsers.add_parser("psd-predict", help="Predict post-synaptic partners.")
    psd_predict.add_argument("--gray", required=True)
    psd_predict.add_argument("--labels", required=True)
    psd_predict.add_argument("--model", required=True)
    tbars = psd_predict.add_mutually_exclusive_group(required=True)
    tbars.add_argument("--tbars")
    tbars.add_argument("--tbars-from-ground-truth", help="Use ground-truth T-bar positions.")
    psd_predict.add_argument("--min-tbar-confidence", type=float, help="e.g. 0.60 or 0.73.")
    psd_predict.add_argument("--decision-threshold", type=float)
    _add_partner_arguments(psd_predict)

    graph = subparsers.add_parser("graph-build", help="Build a connectome graph.")
    graph.add_argument("--synapses", required=True)
    graph.add_argument("--labels", required=True)
    graph.add_argument("--psd-threshold", type=float, default=0.0)
    graph.add_argument("--resolve-partners", action="store_true", help="Assign bodies to partners given by pos.")
    graph.add_argument("--collapse-gt", action="store_true")
    graph.add_argument("--undirected", action="store_true")

    eval_pr = subparsers.add_parser("eval-pr", help="Precision/recall evaluation.")
    eval_pr.add_argument("--mode", choices=EVAL_MODES, required=True)
    eval_pr.add_argument("--tbars")
    eval_pr.add_argument("--synapses")
    eval_pr.add_argument("--labels")
    eval_pr.add_argument("--pred-labels", help="Segmentation the synapses were predicted on, if not --labels.")
    eval_pr.add_argument("--same-segment", action="store_true")
    eval_pr.add_argument("--max-distance", type=float)
    eval_pr.add_argument("--thresholds", type=float, nargs="+")
    eval_pr.add_argument("--psd-threshold", type=float, default=0.5)
    eval_pr.add_argument("--undirected", action="store_true")
    _add_ground_truth_graph_arguments(eval_pr)

    baseline = subparsers.add_parser("baseline", help="Body-proximity baseline.")
    baseline.add_argument("--labels", required=True)
    baseline.add_argument("--sample-count", type=int)
    baseline.add_argument("--sample-counts", type=int, nargs="+")
    baseline.add_argument("--mode", choices=sorted(graph_metric_functions), default="unweighted")
    baseline.add_argument("--undirected", action="store_true")
    _add_ground_truth_graph_arguments(baseline)

    for ii_subparser in subparsers.choices.values():
        _add_global_arguments(ii_subparser)
    return parser


def _check_arguments(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Cross-argument rules argparse cannot express."""
    if args.threads < 1:
        parser.error("--threads must be at least 1.")
    if args.command == "eval-pr":
        if args.mode == "tbar":
            if not args.tbars or not args.ground_truth:
                parser.error("--mode tbar needs --tbars and --ground-truth.")
            if args.same_segment and not args.labels:
                parser.error("--same-segment needs --labels.")
        else:
            if not args.synapses or not args.labels:
                parser.error(f"--mode {args.mode} needs --synapses and --labels.")
    if args.command in ("eval-pr", "baseline"):
        mode = args.mode
        needed = ["t1", "t2"] if mode == "added-missed" else graph_metric_functions.get(mode, {}).get("required", [])
        for ii_name in needed:
            if getattr(args, ii_name) is None:
                parser.error(f"--mode {mode} needs --{ii_name}.")
        if args.filter_orphans and not args.ground_truth:
            parser.error("--filter-orphans needs --ground-truth.")
        if args.psd_shift_radius > 0 and not (args.gray and args.ground_truth):
            parser.error("--psd-shift-radius needs --gray and --ground-truth.")


def load_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig()
    if getattr(args, "config", None):
        config = PipelineConfig.from_dict(export.read_json(args.config))
    if getattr(args, "seed", None) is not None:
        for ii_section in SEEDED_SECTIONS:
            config = config.override(ii_section, seed=args.seed)
    return config


def run(args: argparse.Namespace) -> None:
    """Runs one parsed command, staging all outputs and the manifest."""
    out = Path(args.output_dir)
    config = load_config(args)
    config_inputs = [Path(args.config)] if getattr(args, "config", None) else []
    with export.StagedOutputs() as staged:
        inputs, config = commands[args.command](args, config, staged, out)
        config_dict = config.to_dict()
        seeds = {ii_section: config_dict[ii_section]["seed"] for ii_section in SEEDED_SECTIONS}
        manifest = export.build_manifest(args.command, config_dict, config_inputs + inputs, seeds)
        manifest["outputs"] = sorted(str(ii_path) for ii_path in staged.final_paths)
        export.write_json(out / f"{args.command}.manifest.json", manifest, staged)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.threads = getattr(args, "threads", 1)
    args.output_dir = getattr(args, "output_dir", ".")
    args.verbose = getattr(args, "verbose", 0)
    _check_arguments(parser, args)
    configure_logging(args.verbose)
    try:
        run(args)
    except (ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as error:
        logger.error("%s: %s", type(error).__name__, error)
        print(f"polysynapse {args.command}: {error}", file=sys.stderr)
        return EXIT_DATA
    except Exception as error:  # noqa: B902
        logger.exception("Internal error in %s.", args.command)
        print(f"polysynapse {args.command}: internal error: {error}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK
