"""Shared helpers for the test suite."""

import os

import numpy as np
import pytest

from dyntok import FrameGridPair

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS_DIR = os.path.join(REPO_ROOT, "corpus")


def make_grid(t, h, w, d_clip, d_emb=None, seed=0):
    """Random FrameGridPair with gaussian entries (not normalized)."""
    if d_emb is None:
        d_emb = d_clip
    rng = np.random.default_rng(seed)
    vision = rng.standard_normal((t, h, w, d_clip)).astype(np.float32)
    embedding = rng.standard_normal((t, h, w, d_emb)).astype(np.float32)
    return FrameGridPair(vision, embedding)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def corpus_dir():
    if not os.path.isdir(CORPUS_DIR):
        pytest.skip("corpus directory not present")
    return CORPUS_DIR
