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
"""Sensitivity of audio embeddings to audio effects.

Thin Python layer over the native core: EMB1 embedding files, the
statistics primitives, audio effects, the toy log-mel embedder, and the
staged pipeline.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np

from . import _core
from ._core import (
    EmbsenseError,
    apply_effect,
    cca_single_target,
    embed_logmel,
    roc_auc,
    spearman,
)

__all__ = [
    "EmbsenseError",
    "apply_effect",
    "cca_single_target",
    "embed_logmel",
    "global_cca",
    "parameter_grid",
    "read_embeddings",
    "roc_auc",
    "run",
    "run_id",
    "spearman",
    "write_embeddings",
]

PathLike = Union[str, "os.PathLike[str]"]
Config = Union[Mapping[str, Any], PathLike]


def read_embeddings(path: PathLike) -> dict:
    """Reads an EMB1 file into a dict with ``data`` (float32, N x d),
    ``sample_ids``, ``class_labels``, ``effect``, ``parameter`` and
    ``producer``."""
    out = _core.read_embeddings(os.fspath(path))
    out["producer"] = json.loads(out.pop("producer_json"))
    return out


def write_embeddings(
    path: PathLike,
    data: np.ndarray,
    sample_ids: Sequence[str],
    class_labels: Sequence[str],
    effect: str = "clean",
    parameter: Optional[float] = None,
    producer: Optional[Mapping[str, Any]] = None,
) -> None:
    """Writes an EMB1 file. ``effect``/``parameter`` name the condition; the
    clean condition has no parameter."""
    _core.write_embeddings(
        os.fspath(path),
        np.asarray(data, dtype=np.float32),
        list(sample_ids),
        list(class_labels),
        effect,
        parameter,
        json.dumps(dict(producer or {})),
    )


def parameter_grid(effect: str, steps: int = 16) -> dict:
    params, ranks, neutral = _core.parameter_grid(effect, steps)
    return {"params": params, "ranks": ranks, "neutral_index": neutral}


def global_cca(embeddings_dir: PathLike, effect: str, class_label: str,
               ridge: float = 0.0) -> dict:
    """Global CCA for one class over ``<dir>/clean.emb1`` and
    ``<dir>/<effect>/NN.emb1``."""
    return json.loads(
        _core.global_cca(os.fspath(embeddings_dir), effect, class_label, ridge))


def _load_config(config: Config) -> tuple[str, str]:
    if isinstance(config, Mapping):
        return json.dumps(dict(config)), ""
    path = Path(config)
    return path.read_text(), str(path.resolve().parent)


def run_id(config: Config) -> str:
    text, _ = _load_config(config)
    return _core.run_id(text)


def run(
    config: Config,
    stage: str = "full",
    output_dir: Optional[PathLike] = None,
    workers: Optional[int] = None,
) -> list[tuple[str, str, int]]:
    """Runs ``stage`` (or every stage for ``"full"``) and returns
    ``(stage, status, failed_cells)`` tuples."""
    text, base = _load_config(config)
    return _core.run_pipeline(
        text, base, stage,
        None if output_dir is None else os.fspath(output_dir), workers)
