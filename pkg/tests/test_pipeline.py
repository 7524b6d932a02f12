"""End-to-end pipeline: pooling, grouping, fusion, threading."""

import numpy as np
import pytest

from dyntok import (
    POOL2,
    PoolSpec,
    adjacent_cosine,
    build_groups,
    compress_grid,
    compute_stats,
    fuse,
    pool,
    resolve_threads,
    sweep_grid,
)
from dyntok.pipeline import THREADS_ENV

from conftest import make_grid


class TestResolveThreads:
    def test_default_is_serial(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV, raising=False)
        assert resolve_threads() == 1

    def test_env_is_read(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "3")
        assert resolve_threads() == 3

    def test_zero_means_cpu_count(self, monkeypatch):
        import os

        monkeypatch.setenv(THREADS_ENV, "0")
        assert resolve_threads() == (os.cpu_count() or 1)
        assert resolve_threads(0) == (os.cpu_count() or 1)

    def test_argument_overrides_env(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "7")
        assert resolve_threads(2) == 2

    def test_invalid_env_rejected(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "many")
        with pytest.raises(ValueError, match=THREADS_ENV):
            resolve_threads()

    def test_negative_rejected(self):
        with pytest.raises(ValueError, match=">= 0"):
            resolve_threads(-1)


class TestCompressGrid:
    def test_matches_module_chain_bitwise(self):
        grid = make_grid(3, 4, 7, 5, 6, seed=42)
        result = compress_grid(grid, 0.5)
        sims = adjacent_cosine(grid)
        gmap = build_groups(sims, 0.5)
        seq = fuse(grid, gmap)
        assert np.array_equal(
            result.similarities.values.view(np.uint32), sims.values.view(np.uint32)
        )
        assert result.group_map == gmap
        assert np.array_equal(
            result.sequence.fused.view(np.uint32), seq.fused.view(np.uint32)
        )
        assert np.array_equal(result.sequence.provenance, seq.provenance)
        assert result.stats == compute_stats(seq, grid.grid_shape, threshold=0.5)

    def test_thread_count_does_not_change_bytes(self):
        grid = make_grid(6, 5, 9, 8, 4, seed=17)
        serial = compress_grid(grid, 0.45, threads=1)
        threaded = compress_grid(grid, 0.45, threads=4)
        assert np.array_equal(
            serial.sequence.fused.view(np.uint32),
            threaded.sequence.fused.view(np.uint32),
        )
        assert np.array_equal(
            serial.sequence.provenance, threaded.sequence.provenance
        )
        assert serial.group_map == threaded.group_map
        assert np.array_equal(
            serial.similarities.values.view(np.uint32),
            threaded.similarities.values.view(np.uint32),
        )

    def test_more_threads_than_frames(self):
        grid = make_grid(2, 3, 4, 3, seed=8)
        a = compress_grid(grid, 0.6, threads=16)
        b = compress_grid(grid, 0.6, threads=1)
        assert a.group_map == b.group_map

    def test_pool2_runs_before_compression(self):
        grid = make_grid(2, 6, 8, 4, seed=10)
        result = compress_grid(grid, 0.5, pool_spec=True)
        assert result.grid.grid_shape == (2, 3, 4)
        assert result.sequence.source_shape == (2, 3, 4)
        manual = pool(grid, POOL2)
        assert result.grid == manual

    def test_custom_pool_spec(self):
        grid = make_grid(1, 6, 6, 4, seed=11)
        spec = PoolSpec(kernel=(3, 3), stride=(3, 3), mode="mean")
        result = compress_grid(grid, 0.5, pool_spec=spec)
        assert result.grid.grid_shape == (1, 2, 2)

    def test_stats_carry_threshold(self):
        grid = make_grid(1, 2, 3, 4, seed=0)
        assert compress_grid(grid, 0.55).stats.threshold == 0.55

    def test_invalid_threshold_rejected(self):
        grid = make_grid(1, 2, 3, 4)
        with pytest.raises(ValueError, match="threshold"):
            compress_grid(grid, 1.5)


class TestSweepGrid:
    def test_per_threshold_maps_and_stats(self):
        grid = make_grid(2, 3, 8, 5, seed=14)
        pooled, sims, maps, stats = sweep_grid(grid, (0.4, 0.5, 0.6))
        assert pooled == grid
        assert np.array_equal(
            sims.values.view(np.uint32),
            adjacent_cosine(grid).values.view(np.uint32),
        )
        assert [m.threshold for m in maps] == [0.4, 0.5, 0.6]
        for m, st in zip(maps, stats):
            assert st.fused_tokens == int(m.start_mask.sum())

    def test_sweep_threads_do_not_change_bytes(self):
        grid = make_grid(5, 4, 9, 6, seed=15)
        _, a, maps_a, _ = sweep_grid(grid, (0.4, 0.6), threads=1)
        _, b, maps_b, _ = sweep_grid(grid, (0.4, 0.6), threads=4)
        assert np.array_equal(a.values.view(np.uint32), b.values.view(np.uint32))
        assert maps_a == maps_b

    def test_sweep_agrees_with_individual_compressions(self):
        grid = make_grid(2, 4, 7, 5, seed=16)
        _, _, maps, stats = sweep_grid(grid, (0.45, 0.55))
        for th, m, st in zip((0.45, 0.55), maps, stats):
            single = compress_grid(grid, th)
            assert single.group_map == m
            assert single.stats == st

    def test_validation(self):
        grid = make_grid(1, 2, 3, 4)
        with pytest.raises(ValueError, match="ascending"):
            sweep_grid(grid, (0.6, 0.4))
        with pytest.raises(ValueError, match="at least one"):
            sweep_grid(grid, ())

    def test_pooled_sweep(self):
        grid = make_grid(2, 4, 6, 4, seed=19)
        pooled, _, maps, _ = sweep_grid(grid, (0.5,), pool_spec=True)
        assert pooled.grid_shape == (2, 2, 3)
        assert maps[0].shape == (2, 2, 3)
