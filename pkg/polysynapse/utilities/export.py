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
Reading and writing every file polysynapse exchanges: volumes, T-bar and synapse lists, graphs, metric tables, models
and run manifests.

Writes go through `StagedOutputs`, which collects every output of a command in temporary files and moves them into
place only when the whole command succeeded.
"""

import hashlib
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Type, Union

import numpy as np
import pandas as pd

from polysynapse._version import __version__
from polysynapse.PandasEnum import PandasEnum, check_required_columns
from polysynapse.base import (
    GrayVolume,
    LabelVolume,
    Partner,
    ScalarField,
    Synapse,
    SynapseSet,
    TbarPrediction,
    Volume,
    shape_from_dims,
)
from polysynapse.utilities.connectome import EDGE_COLUMNS, POST, PRE, WEIGHT, ConnectomeGraph
from polysynapse.utilities.performance import GT_WEIGHT, PRED_WEIGHT, AddedMissed, PrCurve


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

VOLUME_DTYPES = {"u8": np.dtype("<u1"), "u32": np.dtype("<u4"), "f32": np.dtype("<f4")}
VOLUME_KIND_DTYPES = {GrayVolume: ["u8"], LabelVolume: ["u32", "u8"], ScalarField: ["f32"]}
_WRITE_DTYPE = {GrayVolume: "u8", LabelVolume: "u32", ScalarField: "f32"}
VOLUME_ORDER = "x-fastest"

UNDIRECTED_COLUMNS = [PandasEnum.BODY_A.value, PandasEnum.BODY_B.value, WEIGHT]


class StagedOutputs:

    """
    Context manager making a command's outputs appear all at once or not at all.

    `path(final)` hands out a temporary path next to `final`. On a clean exit every temporary file is moved onto its
    final path; on an exception they are all deleted.
    """

    def __init__(self):
        self._staged = []

    def path(self, final_path: PathLike) -> Path:
        final_path = Path(final_path)
        final_path.parent.mkdir(parents=True, exist_ok=True)
        handle, temporary = tempfile.mkstemp(prefix=f".{final_path.name}.", suffix=".tmp", dir=final_path.parent)
        os.close(handle)
        self._staged.append((Path(temporary), final_path))
        return Path(temporary)

    @property
    def final_paths(self) -> List[Path]:
        return [ii_final for _, ii_final in self._staged]

    def commit(self) -> None:
        for ii_temporary, ii_final in self._staged:
            os.replace(ii_temporary, ii_final)
            logger.info("Wrote %s.", ii_final)
        self._staged = []

    def discard(self) -> None:
        for ii_temporary, _ in self._staged:
            if ii_temporary.exists():
                ii_temporary.unlink()
        self._staged = []

    def __enter__(self) -> "StagedOutputs":
        return self

    def __exit__(self, exc_type, exc_value, traceback) -> bool:
        if exc_type is None:
            self.commit()
        else:
            self.discard()
        return False


def _target(path: PathLike, staged: Optional[StagedOutputs]) -> Path:
    return staged.path(path) if staged is not None else Path(path)


def _load_json(path: PathLike) -> dict:
    with open(path, "r") as handle:
        try:
            return json.load(handle)
        except json.JSONDecodeError as error:
            raise ValueError(f"{path}: not valid JSON ({error.msg} at line {error.lineno}).") from error


def _require(data: dict, key: str, source: PathLike):
    if not isinstance(data, dict) or key not in data:
        raise KeyError(f"{source}: missing field '{key}'.")
    return data[key]


def write_json(path: PathLike, data: dict, staged: Optional[StagedOutputs] = None) -> None:
    """Writes JSON with sorted keys so equal values give identical bytes."""
    with open(_target(path, staged), "w") as handle:
        json.dump(data, handle, indent=1, sort_keys=True)
        handle.write("\n")


def read_json(path: PathLike) -> dict:
    return _load_json(path)


def raw_path(header_path: PathLike) -> Path:
    """Companion raw file of a volume header: same path with extension .raw."""
    return Path(header_path).with_suffix(".raw")


def write_volume(path: PathLike, volume: Volume, staged: Optional[StagedOutputs] = None) -> None:
    """
    Writes a volume as a JSON header plus a little-endian raw file in x-fastest order.

    Gray volumes are stored as u8, labels as u32 and scalar fields as f32.
    """
    dtype_name = _WRITE_DTYPE[type(volume)]
    header = {"dims": list(volume.dims), "dtype": dtype_name, "order": VOLUME_ORDER}
    write_json(path, header, staged)
    data = np.ascontiguousarray(volume.data, dtype=VOLUME_DTYPES[dtype_name])
    with open(_target(raw_path(path), staged), "wb") as handle:
        handle.write(data.tobytes(order="C"))


def read_volume(path: PathLike, kind: Type[Volume] = GrayVolume) -> Volume:
    """Reads a volume written by write_volume, checking dtype and size."""
    header = _load_json(path)
    dims = _require(header, "dims", path)
    dtype_name = _require(header, "dtype", path)
    if dtype_name not in VOLUME_KIND_DTYPES[kind]:
        raise ValueError(f"{path}: field 'dtype' is '{dtype_name}', expected one of {VOLUME_KIND_DTYPES[kind]}.")
    if header.get("order", VOLUME_ORDER) != VOLUME_ORDER:
        raise ValueError(f"{path}: field 'order' must be '{VOLUME_ORDER}'.")
    try:
        shape = shape_from_dims(dims)
    except (TypeError, ValueError) as error:
        raise ValueError(f"{path}: field 'dims' is invalid ({error}).") from error
    dtype = VOLUME_DTYPES[dtype_name]
    raw = raw_path(path)
    buffer = raw.read_bytes()
    expected = shape[0] * shape[1] * shape[2] * dtype.itemsize
    if len(buffer) != expected:
        raise ValueError(f"{raw}: holds {len(buffer)} bytes but dims {dims} and dtype {dtype_name} need {expected}.")
    data = np.frombuffer(buffer, dtype=dtype).reshape(shape)
    return kind(data.astype(dtype.newbyteorder("=")))


def tbar_to_dict(tbar: TbarPrediction) -> dict:
    return {PandasEnum.POS.value: list(tbar.pos), PandasEnum.CONFIDENCE.value: tbar.confidence}


def tbar_from_dict(data: dict, source: PathLike) -> TbarPrediction:
    return TbarPrediction(_require(data, PandasEnum.POS.value, source), data.get(PandasEnum.CONFIDENCE.value, 1.0))


def write_tbars(path: PathLike, tbars: Sequence[TbarPrediction], staged: Optional[StagedOutputs] = None) -> None:
    """Writes {"tbars": [...]} sorted by descending confidence (stable for equal confidences)."""
    ordered = sorted(tbars, key=lambda ii_tbar: -ii_tbar.confidence)
    write_json(path, {PandasEnum.TBARS.value: [tbar_to_dict(ii_tbar) for ii_tbar in ordered]}, staged)


def read_tbars(path: PathLike) -> List[TbarPrediction]:
    data = _load_json(path)
    return [tbar_from_dict(ii_entry, path) for ii_entry in _require(data, PandasEnum.TBARS.value, path)]


def synapses_to_dict(synapses: SynapseSet) -> dict:
    entries = []
    for ii_synapse in synapses:
        partners = []
        for ii_partner in ii_synapse.partners:
            partner = {PandasEnum.BODY.value: ii_partner.body, PandasEnum.CONFIDENCE.value: ii_partner.confidence}
            if ii_partner.pos is not None:
                partner[PandasEnum.POS.value] = list(ii_partner.pos)
            partners.append(partner)
        entries.append({PandasEnum.TBAR.value: tbar_to_dict(ii_synapse.tbar), PandasEnum.PARTNERS.value: partners})
    return {PandasEnum.SYNAPSES.value: entries}


def synapses_from_dict(data: dict, source: PathLike = "synapses") -> SynapseSet:
    """
    Parses a synapse document. A partner needs a "body" or a "pos"; partners given only by position get body 0
    until resolved against a segmentation.
    """
    synapses = []
    for ii_entry in _require(data, PandasEnum.SYNAPSES.value, source):
        tbar = tbar_from_dict(_require(ii_entry, PandasEnum.TBAR.value, source), source)
        partners = []
        for ii_partner in ii_entry.get(PandasEnum.PARTNERS.value, []):
            if PandasEnum.BODY.value not in ii_partner and PandasEnum.POS.value not in ii_partner:
                raise KeyError(f"{source}: partner needs field '{PandasEnum.BODY.value}' or '{PandasEnum.POS.value}'.")
            partners.append(
                Partner(
                    ii_partner.get(PandasEnum.BODY.value, 0),
                    ii_partner.get(PandasEnum.CONFIDENCE.value, 1.0),
                    ii_partner.get(PandasEnum.POS.value),
                )
            )
        synapses.append(Synapse(tbar, partners))
    return SynapseSet(synapses)


def write_synapses(path: PathLike, synapses: SynapseSet, staged: Optional[StagedOutputs] = None) -> None:
    write_json(path, synapses_to_dict(synapses), staged)


def read_synapses(path: PathLike) -> SynapseSet:
    return synapses_from_dict(_load_json(path), path)


def write_graph(path: PathLike, graph: ConnectomeGraph, staged: Optional[StagedOutputs] = None) -> None:
    """CSV "pre,post,weight" for directed graphs and "a,b,weight" for undirected ones, ascending."""
    edges = graph.edges
    if not graph.directed:
        edges.columns = UNDIRECTED_COLUMNS
    edges.to_csv(_target(path, staged), index=False, lineterminator="\n")


def read_graph(path: PathLike) -> ConnectomeGraph:
    edges = pd.read_csv(path)
    if PandasEnum.BODY_A.value in edges.columns:
        check_required_columns(edges, UNDIRECTED_COLUMNS, str(path))
        edges = edges[UNDIRECTED_COLUMNS].set_axis(EDGE_COLUMNS, axis=1)
        return ConnectomeGraph(edges, directed=False)
    check_required_columns(edges, EDGE_COLUMNS, str(path))
    return ConnectomeGraph(edges)


def _write_table(path: PathLike, table: pd.DataFrame, staged: Optional[StagedOutputs]) -> None:
    # Undefined values are written as empty fields.
    table.to_csv(_target(path, staged), index=False, na_rep="", lineterminator="\n")


def write_pr_curve(path: PathLike, curve: PrCurve, staged: Optional[StagedOutputs] = None) -> None:
    """CSV "threshold,precision,recall,tp,fp,fn"."""
    _write_table(path, curve.to_frame(), staged)


def read_pr_curve(path: PathLike) -> PrCurve:
    return PrCurve.from_frame(pd.read_csv(path))


def write_added_missed(path: PathLike, result: AddedMissed, staged: Optional[StagedOutputs] = None) -> None:
    """
    Edge list with a kind column (added or missed) followed by a summary line "normalizer,<n>".
    """
    columns = [PRE, POST, GT_WEIGHT, PRED_WEIGHT]
    added = result.added[columns].assign(kind=PandasEnum.ADDED.value)
    missed = result.missed[columns].assign(kind=PandasEnum.MISSED.value)
    table = pd.concat([added, missed], ignore_index=True)[["kind"] + columns]
    with open(_target(path, staged), "w") as handle:
        table.to_csv(handle, index=False, lineterminator="\n")
        handle.write(f"{PandasEnum.NORMALIZER.value},{result.normalizer}\n")


def read_added_missed(path: PathLike) -> AddedMissed:
    with open(path, "r") as handle:
        lines = handle.read().splitlines()
    if not lines or not lines[-1].startswith(PandasEnum.NORMALIZER.value + ","):
        raise ValueError(f"{path}: missing final '{PandasEnum.NORMALIZER.value},<n>' line.")
    normalizer = int(lines[-1].split(",")[1])
    table = pd.read_csv(io.StringIO("\n".join(lines[:-1])))
    check_required_columns(table, ["kind", PRE, POST, GT_WEIGHT, PRED_WEIGHT], str(path))
    columns = [PRE, POST, GT_WEIGHT, PRED_WEIGHT]
    added = table[table["kind"] == PandasEnum.ADDED.value][columns].reset_index(drop=True)
    missed = table[table["kind"] == PandasEnum.MISSED.value][columns].reset_index(drop=True)
    return AddedMissed(added, missed, normalizer)


def write_table(path: PathLike, table: pd.DataFrame, staged: Optional[StagedOutputs] = None) -> None:
    """Any metric table (scatter, added/missed sweep) as CSV with empty fields for undefined values."""
    _write_table(path, table, staged)


def file_digest(path: PathLike) -> str:
    """SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for ii_chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(ii_chunk)
    return digest.hexdigest()


def get_latest_commit() -> Optional[str]:
    """Commit of the checkout polysynapse runs from, or None outside a git checkout."""
    os.environ["GIT_PYTHON_REFRESH"] = "quiet"
    try:
        import git

        repo = git.Repo(Path(__file__).resolve().parent, search_parent_directories=True)
        return str(repo.head.commit)
    except Exception:  # no checkout, or no git executable
        return None


def build_manifest(command: str, config: dict, inputs: Iterable[PathLike], seeds: dict) -> dict:
    """
    Run manifest: the command, the full configuration, SHA-256 digests of the inputs, the tool version and seeds.

    It holds no timestamps, so rerunning a command reproduces it byte for byte.
    """
    digests = {}
    for ii_path in inputs:
        ii_path = Path(ii_path)
        digests[str(ii_path)] = file_digest(ii_path)
        if ii_path.suffix == ".json" and raw_path(ii_path).exists():
            digests[str(raw_path(ii_path))] = file_digest(raw_path(ii_path))
    return {
        "command": command,
        "config": config,
        "inputs": digests,
        "version": __version__,
        "commit": get_latest_commit(),
        "seeds": seeds,
    }
