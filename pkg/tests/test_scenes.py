"""Synthetic scene specs and deterministic grid generation."""

import json
import math

import numpy as np
import pytest

from dyntok import (
    SceneError,
    SceneSpec,
    SegmentSpec,
    adjacent_cosine,
    generate_synthetic,
    load_scene,
    save_scene,
    scene_from_json,
    scene_to_json,
)


def one_row_scene(*segments, frames=1, d_clip=8, d_emb=8):
    return SceneSpec(frames=frames, d_clip=d_clip, d_emb=d_emb, rows=(tuple(segments),))


class TestSegmentSpec:
    def test_rejects_bad_length(self):
        with pytest.raises(SceneError, match="length"):
            SegmentSpec(length=0, mode="constant")

    def test_rejects_unknown_mode(self):
        with pytest.raises(SceneError, match="unknown segment mode"):
            SegmentSpec(length=1, mode="wavy")

    def test_jittered_requires_epsilon_in_unit_interval(self):
        with pytest.raises(SceneError, match="epsilon"):
            SegmentSpec(length=1, mode="jittered")
        with pytest.raises(SceneError, match="epsilon"):
            SegmentSpec(length=1, mode="jittered", epsilon=1.0)
        SegmentSpec(length=1, mode="jittered", epsilon=0.5)

    def test_epsilon_rejected_outside_jittered(self):
        with pytest.raises(SceneError, match="only valid for jittered"):
            SegmentSpec(length=1, mode="constant", epsilon=0.1)

    def test_random_cannot_pin_vector(self):
        with pytest.raises(SceneError, match="cannot pin"):
            SegmentSpec(length=1, mode="random", vector=(1.0, 0.0))

    def test_jittered_pinned_vector_must_be_nonzero(self):
        with pytest.raises(SceneError, match="nonzero"):
            SegmentSpec(length=1, mode="jittered", epsilon=0.1, vector=(0.0, 0.0))


class TestSceneSpec:
    def test_rows_must_share_width(self):
        rows = (
            (SegmentSpec(3, "constant"),),
            (SegmentSpec(2, "constant"), SegmentSpec(2, "constant")),
        )
        with pytest.raises(SceneError, match="sum to the same w"):
            SceneSpec(frames=1, d_clip=4, d_emb=4, rows=rows)

    def test_rejects_empty_rows(self):
        with pytest.raises(SceneError, match="at least one row"):
            SceneSpec(frames=1, d_clip=4, d_emb=4, rows=())

    def test_rejects_bad_frames_and_dims(self):
        row = ((SegmentSpec(2, "constant"),),)
        with pytest.raises(SceneError, match="frames"):
            SceneSpec(frames=0, d_clip=4, d_emb=4, rows=row)
        with pytest.raises(SceneError, match="d_clip and d_emb"):
            SceneSpec(frames=1, d_clip=0, d_emb=4, rows=row)

    def test_pinned_vector_length_checked_against_d_clip(self):
        row = ((SegmentSpec(2, "constant", vector=(1.0, 0.0, 0.0)),),)
        with pytest.raises(SceneError, match="d_clip is 4"):
            SceneSpec(frames=1, d_clip=4, d_emb=4, rows=row)

    def test_derived_geometry(self):
        scene = SceneSpec(
            frames=2,
            d_clip=4,
            d_emb=6,
            rows=((SegmentSpec(3, "constant"), SegmentSpec(2, "random")),) * 5,
        )
        assert scene.rows_count == 5
        assert scene.cols == 5


class TestGeneration:
    def test_shape_and_dtype(self):
        scene = one_row_scene(SegmentSpec(4, "constant"), frames=3, d_clip=5, d_emb=7)
        grid = generate_synthetic(scene, seed=0)
        assert grid.grid_shape == (3, 1, 4)
        assert (grid.d_clip, grid.d_emb) == (5, 7)

    def test_deterministic_in_seed(self):
        scene = one_row_scene(
            SegmentSpec(3, "jittered", epsilon=0.2), SegmentSpec(2, "random")
        )
        assert generate_synthetic(scene, 5) == generate_synthetic(scene, 5)
        assert generate_synthetic(scene, 5) != generate_synthetic(scene, 6)

    def test_rejects_non_scene(self):
        with pytest.raises(SceneError, match="SceneSpec"):
            generate_synthetic({"frames": 1}, 0)

    def test_constant_segment_repeats_base_exactly(self):
        grid = generate_synthetic(one_row_scene(SegmentSpec(5, "constant")), 3)
        row = grid.vision[0, 0]
        for k in range(1, 5):
            assert np.array_equal(row[k], row[0])
        # same guarantee in embedding space: bases are drawn per segment
        erow = grid.embedding[0, 0]
        for k in range(1, 5):
            assert np.array_equal(erow[k], erow[0])

    def test_constant_segment_similarity_is_exactly_one(self):
        grid = generate_synthetic(one_row_scene(SegmentSpec(6, "constant")), 9)
        sims = adjacent_cosine(grid).values
        assert np.all(sims == np.float32(1.0))

    def test_pinned_constant_vector_lands_verbatim(self):
        vec = (0.0, 1.0, 0.0, 0.0)
        scene = one_row_scene(SegmentSpec(3, "constant", vector=vec), d_clip=4)
        grid = generate_synthetic(scene, 0)
        expected = np.array(vec, dtype=np.float32)
        for k in range(3):
            assert np.array_equal(grid.vision[0, 0, k], expected)

    def test_orthogonal_pinned_columns_give_zero_similarity(self):
        e0 = (1.0, 0.0, 0.0)
        e1 = (0.0, 1.0, 0.0)
        segs = [
            SegmentSpec(1, "constant", vector=(e0 if k % 2 == 0 else e1))
            for k in range(6)
        ]
        grid = generate_synthetic(one_row_scene(*segs, d_clip=3), 0)
        sims = adjacent_cosine(grid).values
        assert np.all(sims == np.float32(0.0))

    def test_jittered_pairwise_cosine_bound(self):
        # every vector sits within angle asin(eps) of the unit base, so
        # any two differ by at most 2*asin(eps) and their cosine is at
        # least cos(2*asin(eps)) = 1 - 2*eps^2
        eps = 0.15
        scene = one_row_scene(SegmentSpec(8, "jittered", epsilon=eps), d_clip=16)
        grid = generate_synthetic(scene, 2)
        row = grid.vision[0, 0].astype(np.float64)
        bound = 1.0 - 2.0 * eps * eps
        for a in range(8):
            for b in range(a + 1, 8):
                cos = float(row[a] @ row[b])
                cos /= math.sqrt(float(row[a] @ row[a]) * float(row[b] @ row[b]))
                assert cos >= bound - 1e-9

    def test_jittered_pinned_base_is_normalized_before_jitter(self):
        # a pinned base of norm 10 must not weaken the bound; vectors
        # built as normalize(u + delta) with norm(delta) <= eps lie in a
        # spherical cap of half-angle asin(eps) around unit u, so each
        # has cosine >= sqrt(1 - eps^2) against u itself
        eps = 0.05
        vec = tuple(10.0 if i == 0 else 0.0 for i in range(4))
        scene = one_row_scene(
            SegmentSpec(6, "jittered", epsilon=eps, vector=vec), d_clip=4
        )
        grid = generate_synthetic(scene, 4)
        row = grid.vision[0, 0].astype(np.float64)
        base = np.array([1.0, 0.0, 0.0, 0.0])
        for k in range(6):
            cos = float(row[k] @ base) / math.sqrt(float(row[k] @ row[k]))
            assert cos >= math.sqrt(1.0 - eps * eps) - 1e-9

    def test_random_segment_vectors_are_unit_norm(self):
        grid = generate_synthetic(one_row_scene(SegmentSpec(10, "random")), 8)
        norms = np.linalg.norm(grid.vision[0, 0].astype(np.float64), axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-6)

    def test_unpinned_frames_differ(self):
        scene = one_row_scene(SegmentSpec(4, "constant"), frames=2)
        grid = generate_synthetic(scene, 0)
        assert not np.array_equal(grid.vision[0], grid.vision[1])


class TestSceneJson:
    def round_trip(self, scene):
        return scene_from_json(scene_to_json(scene))

    def test_round_trip_plain(self):
        scene = SceneSpec(
            frames=2,
            d_clip=4,
            d_emb=6,
            rows=(
                (SegmentSpec(2, "constant"), SegmentSpec(3, "random")),
                (SegmentSpec(5, "jittered", epsilon=0.25),),
            ),
        )
        assert self.round_trip(scene) == scene

    def test_round_trip_pinned_vector(self):
        scene = one_row_scene(
            SegmentSpec(2, "constant", vector=(0.5, -1.5, 0.0, 2.0)), d_clip=4
        )
        assert self.round_trip(scene) == scene

    def test_json_is_valid_and_minimal(self):
        scene = one_row_scene(SegmentSpec(2, "constant"))
        doc = json.loads(scene_to_json(scene))
        assert set(doc) == {"frames", "d_clip", "d_emb", "rows"}
        seg = doc["rows"][0][0]
        assert set(seg) == {"length", "mode"}

    def test_bad_json_text(self):
        with pytest.raises(SceneError, match="not valid JSON"):
            scene_from_json("{nope")

    def test_missing_field(self):
        with pytest.raises(SceneError, match="missing field"):
            scene_from_json('{"frames": 1, "d_clip": 2, "d_emb": 2}')
        with pytest.raises(SceneError, match="missing field"):
            scene_from_json(
                '{"frames": 1, "d_clip": 2, "d_emb": 2, "rows": [[{"mode": "random"}]]}'
            )

    def test_file_round_trip(self, tmp_path):
        scene = one_row_scene(SegmentSpec(3, "jittered", epsilon=0.1))
        path = tmp_path / "scene.json"
        save_scene(scene, path)
        assert load_scene(path) == scene

    def test_corpus_scenes_parse(self, corpus_dir):
        import os

        names = sorted(os.listdir(os.path.join(corpus_dir, "scenes")))
        assert names == ["constant.json", "desk.json", "orthogonal.json"]
        for name in names:
            scene = load_scene(os.path.join(corpus_dir, "scenes", name))
            grid = generate_synthetic(scene, 0)
            assert grid.frames == scene.frames
