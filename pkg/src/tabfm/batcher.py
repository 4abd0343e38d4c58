"""Training batch assembly: dataset sampling, feature padding, and the
context/query split.

Each batch holds B episodes drawn uniformly (with replacement) across the
corpus. Episode features are zero-padded to the model width; episodes with
more retained features than the model accepts are reduced by uniform
column subsampling (episodes already randomize features, so no PCA here).
The context/query boundary is drawn uniformly with at least 10 context
rows and at least 1 query row.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError
from .ssl_tasks import CLASSIFICATION, REGRESSION, make_episode

MIN_CONTEXT = 10

TASK_BALANCE_CODE = "code"    # whatever the episode generator yields (~70% regression)
TASK_BALANCE_EQUAL = "equal"  # reject-sample episode kinds to a fair coin

_BALANCE_ATTEMPTS = 20


@dataclass(frozen=True)
class BatchEpisode:
    x: np.ndarray        # (K, F_max) float64, zero-padded
    y: np.ndarray        # (K,) targets
    task_kind: str
    num_classes: int
    eval_pos: int        # rows [0, eval_pos) are context, the rest queries


@dataclass(frozen=True)
class TrainBatch:
    episodes: list
    batch_size: int
    episode_len: int


def pad_features(x: np.ndarray, max_features: int) -> np.ndarray:
    """Zero-pad feature columns up to max_features."""
    k, f = x.shape
    if f > max_features:
        raise DataError(f"{f} features exceed the padded width {max_features}")
    out = np.zeros((k, max_features))
    out[:, :f] = x
    return out


def split_context_query(k: int, rng: np.random.Generator) -> int:
    """Draw the context/query boundary: uniform on [MIN_CONTEXT, k-1]."""
    if k <= MIN_CONTEXT:
        raise DataError(f"episode length {k} leaves no room for a query")
    return int(rng.integers(MIN_CONTEXT, k))


def _episode_with_kind(table, index, k, rng, want_kind):
    """Rejection-sample episodes until the task kind matches (bounded)."""
    episode = make_episode(table, index, k, rng)
    for _ in range(_BALANCE_ATTEMPTS - 1):
        if episode.task_kind == want_kind:
            break
        episode = make_episode(table, index, k, rng)
    return episode


def assemble_batch(
    corpus: list,
    batch_size: int,
    episode_len: int,
    rng: np.random.Generator,
    max_features: int = 100,
    task_balance: str = TASK_BALANCE_CODE,
) -> TrainBatch:
    """Assemble one training batch from a corpus of (table, index) pairs."""
    if batch_size < 1:
        raise DataError("batch_size must be >= 1")
    if not corpus:
        raise DataError("corpus is empty")
    episodes = []
    for _ in range(batch_size):
        table, index = corpus[int(rng.integers(len(corpus)))]
        if task_balance == TASK_BALANCE_EQUAL:
            want = CLASSIFICATION if rng.random() < 0.5 else REGRESSION
            episode = _episode_with_kind(table, index, episode_len, rng, want)
        else:
            episode = make_episode(table, index, episode_len, rng)
        features = episode.features
        if features.shape[1] > max_features:
            keep = rng.choice(features.shape[1], size=max_features, replace=False)
            features = features[:, keep]
        episodes.append(
            BatchEpisode(
                x=pad_features(features, max_features),
                y=episode.targets,
                task_kind=episode.task_kind,
                num_classes=episode.num_classes,
                eval_pos=split_context_query(episode_len, rng),
            )
        )
    return TrainBatch(episodes=episodes, batch_size=batch_size, episode_len=episode_len)
