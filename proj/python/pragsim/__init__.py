"""Pragmatic-similarity retrieval, classification and screening over
per-layer speech embeddings."""

import json

from . import _core
from ._core import Dataset, Error, run_cli, set_threads, similarity

__all__ = [
    "Dataset",
    "Error",
    "length_baseline",
    "loso",
    "run_cli",
    "set_threads",
    "similarity",
    "stimuli",
    "synthesize",
    "top_k",
]


def synthesize(spec):
    """Seeded synthetic dataset from a spec dict (same keys as `pragsim synth --spec`)."""
    return _core.synthesize(json.dumps(spec))


def top_k(dataset, query, k, layer, exclude_same_speaker=False):
    return json.loads(_core.top_k_json(dataset, query, k, layer, exclude_same_speaker))


def stimuli(dataset, query, layer):
    return json.loads(_core.stimuli_json(dataset, query, layer))


def loso(dataset, k=7, layers=()):
    return json.loads(_core.loso_json(dataset, k, list(layers)))


def length_baseline(dataset, td_label="TD", target_label="SLI", ratio=0.70):
    return json.loads(_core.length_baseline_json(dataset, td_label, target_label, ratio))
