#!/usr/bin/env python3
"""Regenerate the committed corpus under corpus/.

Scene JSONs are the source of truth; desk.dtg is the rendered grid for
tests that need a stable on-disk binary. Rerunning this script must be a
no-op when nothing changed (generation is deterministic in the seed):

    python3 scripts/make_corpus.py
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from dyntok import (  # noqa: E402
    SceneSpec,
    SegmentSpec,
    generate_synthetic,
    save_grid,
    save_scene,
)

DESK_SEED = 20


def constant(length, vector=None):
    return SegmentSpec(length=length, mode="constant", vector=vector)


def jittered(length, epsilon):
    return SegmentSpec(length=length, mode="jittered", epsilon=epsilon)


def random(length):
    return SegmentSpec(length=length, mode="random")


def desk_scene():
    """A 14x14 grid shaped like a workspace shot: flat sky band, busy
    middle, uniform desk surface."""
    sky = (constant(9), jittered(5, 0.05))
    clutter = (jittered(4, 0.03), random(6), constant(4))
    monitor = (random(3), constant(7), jittered(4, 0.08))
    surface = (constant(14),)
    return SceneSpec(
        frames=3,
        d_clip=32,
        d_emb=48,
        rows=(sky,) * 3 + (clutter,) * 3 + (monitor,) * 4 + (surface,) * 4,
    )


def constant_scene():
    """Every row a single flat run; compresses to one group per row at
    any threshold below 1."""
    return SceneSpec(
        frames=2,
        d_clip=16,
        d_emb=24,
        rows=((constant(10),),) * 6,
    )


def orthogonal_scene():
    """Alternating one-hot columns; every adjacent similarity is exactly
    0.0, so nothing merges at any threshold >= 0."""
    d_clip = 6
    e0 = [0.0] * d_clip
    e0[0] = 1.0
    e1 = [0.0] * d_clip
    e1[1] = 1.0
    row = tuple(constant(1, vector=(e0 if k % 2 == 0 else e1)) for k in range(8))
    return SceneSpec(frames=2, d_clip=d_clip, d_emb=8, rows=(row,) * 4)


def main():
    root = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..")
    scenes_dir = os.path.join(root, "corpus", "scenes")
    os.makedirs(scenes_dir, exist_ok=True)

    scenes = {
        "desk": desk_scene(),
        "constant": constant_scene(),
        "orthogonal": orthogonal_scene(),
    }
    for name, scene in scenes.items():
        path = os.path.join(scenes_dir, name + ".json")
        save_scene(scene, path)
        print("wrote", os.path.relpath(path, root))

    grid = generate_synthetic(scenes["desk"], DESK_SEED)
    dtg = os.path.join(root, "corpus", "desk.dtg")
    save_grid(grid, dtg)
    print(
        "wrote %s (%d bytes, seed %d)"
        % (os.path.relpath(dtg, root), os.path.getsize(dtg), DESK_SEED)
    )


if __name__ == "__main__":
    main()
