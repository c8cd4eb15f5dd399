"""
Tests for the snapshot cache.
"""

import os
import time

import pytest

from snapshot_cache import SnapshotCache, cached_ingest, source_key
from temporal_graph import CsvSchema, to_csv


@pytest.fixture
def cache(tmp_path):
    return SnapshotCache(cache_dir=str(tmp_path / "cache"), cache_ttl_days=30)


@pytest.fixture
def csv_path(random_graph, tmp_path):
    return to_csv(random_graph, tmp_path / "stream.csv")


class TestSnapshotCache:
    """Test storing, expiring and clearing cached snapshots."""

    def test_initialization(self, cache):
        assert cache.cache_dir.exists()
        assert cache.info_file.exists()

    def test_store_and_get(self, cache, random_graph):
        cache.store_graph("abc", random_graph, source="stream.csv")
        restored = cache.get_cached_graph("abc")
        assert restored is not None
        assert restored.equals(random_graph)

    def test_miss(self, cache):
        assert cache.get_cached_graph("missing") is None

    def test_ttl_zero_disables_cache(self, tmp_path, random_graph):
        cache = SnapshotCache(cache_dir=str(tmp_path / "off"), cache_ttl_days=0)
        cache.store_graph("abc", random_graph)
        assert cache.get_cached_graph("abc") is None
        assert cache.get_cache_stats()["total_files"] == 0

    def test_expired_entry(self, cache, random_graph):
        cache.store_graph("old", random_graph)
        stale = time.time() - 40 * 86400
        os.utime(cache._cache_file("old"), (stale, stale))
        assert not cache.is_cache_valid("old")
        assert cache.cleanup_expired() == 1
        assert "old" not in cache.get_cache_stats()["snapshots"]

    def test_clear_one(self, cache, random_graph):
        cache.store_graph("a", random_graph)
        cache.store_graph("b", random_graph)
        cache.clear_cache("a")
        stats = cache.get_cache_stats()
        assert set(stats["snapshots"]) == {"b"}
        assert stats["total_files"] == 1

    def test_clear_all(self, cache, random_graph):
        cache.store_graph("a", random_graph)
        cache.clear_cache()
        assert cache.get_cache_stats()["total_snapshots"] == 0

    def test_stats(self, cache, random_graph):
        cache.store_graph("a", random_graph, source="stream.csv")
        stats = cache.get_cache_stats()
        assert stats["ttl_days"] == 30
        entry = stats["snapshots"]["a"]
        assert entry["num_edges"] == random_graph.num_edges
        assert entry["dataset_hash"] == random_graph.dataset_hash()

    def test_corrupt_file_is_a_miss(self, cache, random_graph):
        cache.store_graph("a", random_graph)
        cache._cache_file("a").write_bytes(b"garbage")
        assert cache.get_cached_graph("a") is None


class TestCachedIngest:
    def test_second_call_hits_cache(self, cache, csv_path, monkeypatch):
        first = cached_ingest(csv_path, cache=cache)
        assert cache.get_cache_stats()["total_snapshots"] == 1

        def fail(*args, **kwargs):
            raise AssertionError("ingest should not run on a cache hit")

        monkeypatch.setattr("snapshot_cache.ingest_csv", fail)
        second = cached_ingest(csv_path, cache=cache)
        assert second.equals(first)

    def test_key_depends_on_options(self, csv_path):
        assert source_key(csv_path) != source_key(csv_path, normalize=False)
        assert source_key(csv_path) != source_key(csv_path, CsvSchema.jodie())
        assert source_key(csv_path) == source_key(csv_path)

    def test_key_depends_on_content(self, csv_path):
        before = source_key(csv_path)
        with open(csv_path, "a") as f:
            f.write("1,2,999.0,0,0.1,0.1,0.1\n")
        assert source_key(csv_path) != before

    def test_without_cache(self, csv_path, random_graph):
        g = cached_ingest(csv_path, normalize=False)
        assert g.num_edges == random_graph.num_edges
