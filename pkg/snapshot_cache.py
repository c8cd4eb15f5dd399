#!/usr/bin/env python3
"""
Disk cache of ingested graph snapshots.

- Inputs: an interaction CSV (plus optional node-feature file) and the ingest options
- Outputs: the cached binary snapshot, or a fresh ingest stored for next time
- Features:
  * entries keyed by the SHA-256 of the source files and ingest options
  * time-to-live expiry by file modification time
  * cache_info.json index with per-entry metadata
  * broken cache files degrade to a miss
"""

import hashlib
import json
import logging
import shutil
from dataclasses import asdict
from datetime import datetime, timedelta
from pathlib import Path
from typing import Dict, Optional

from stgl_config import cache_root
from temporal_graph import (
    CsvSchema,
    TemporalGraph,
    ingest_csv,
    load_snapshot,
    normalize_features,
    save_snapshot,
)

logger = logging.getLogger(__name__)

INFO_FILE = "cache_info.json"


def _file_digest(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def source_key(
    csv_path,
    schema: Optional[CsvSchema] = None,
    node_feats_path=None,
    normalize: bool = True,
) -> str:
    """Cache key for one ingest: source contents plus the options applied."""
    parts = [_file_digest(Path(csv_path))]
    if node_feats_path is not None:
        parts.append(_file_digest(Path(node_feats_path)))
    options = {"schema": asdict(schema or CsvSchema()), "normalize": normalize}
    parts.append(json.dumps(options, sort_keys=True))
    return hashlib.sha256("|".join(parts).encode("utf-8")).hexdigest()[:16]


class SnapshotCache:
    """
    Snapshot files under the cache directory with automatic expiration.
    """

    def __init__(self, cache_dir: Optional[str] = None, cache_ttl_days: int = 30):
        """
        Args:
            cache_dir: Directory for cache files (default: STGL_CACHE_DIR or ~/.stgl_cache)
            cache_ttl_days: Time-to-live in days (0 disables caching)
        """
        self.cache_dir = Path(cache_dir) if cache_dir else cache_root()
        self.cache_ttl_days = cache_ttl_days
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.info_file = self.cache_dir / INFO_FILE
        if not self.info_file.exists():
            self._write_cache_info({})

    def _cache_file(self, key: str) -> Path:
        return self.cache_dir / f"{key}.stgl"

    def _write_cache_info(self, info: Dict):
        with open(self.info_file, "w") as f:
            json.dump(info, f, indent=2)

    def _read_cache_info(self) -> Dict:
        try:
            with open(self.info_file, "r") as f:
                return json.load(f)
        except (FileNotFoundError, json.JSONDecodeError):
            return {}

    def is_cache_valid(self, key: str) -> bool:
        if self.cache_ttl_days <= 0:
            return False
        cache_file = self._cache_file(key)
        if not cache_file.exists():
            return False
        try:
            file_time = datetime.fromtimestamp(cache_file.stat().st_mtime)
        except OSError as e:
            logger.debug(f"Error checking cache validity for {key}: {e}")
            return False
        if datetime.now() > file_time + timedelta(days=self.cache_ttl_days):
            logger.debug(f"Cache expired for {key} (cached: {file_time})")
            return False
        return True

    def get_cached_graph(self, key: str) -> Optional[TemporalGraph]:
        if not self.is_cache_valid(key):
            return None
        try:
            g = load_snapshot(self._cache_file(key))
        except Exception as e:
            logger.error(f"Error reading cache entry {key}: {e}")
            return None
        logger.info(f"📁 Using cached snapshot {key} ({g.num_edges} interactions)")
        return g

    def store_graph(self, key: str, g: TemporalGraph, source: Optional[str] = None):
        if self.cache_ttl_days <= 0:
            logger.debug(f"Caching disabled (TTL=0), not storing {key}")
            return
        try:
            save_snapshot(g, self._cache_file(key))
            info = self._read_cache_info()
            info[key] = {
                "filename": self._cache_file(key).name,
                "source": source,
                "cached_at": datetime.now().isoformat(),
                "num_nodes": g.num_nodes,
                "num_edges": g.num_edges,
                "dataset_hash": g.dataset_hash(),
            }
            self._write_cache_info(info)
            logger.info(f"💾 Cached snapshot {key} ({g.num_edges} interactions)")
        except Exception as e:
            logger.error(f"Error storing cache entry {key}: {e}")

    def clear_cache(self, key: Optional[str] = None):
        """Remove one entry, or everything."""
        if key:
            info = self._read_cache_info()
            cache_file = self._cache_file(key)
            removed = cache_file.exists()
            if removed:
                cache_file.unlink()
            if key in info:
                del info[key]
                removed = True
            if removed:
                self._write_cache_info(info)
                logger.info(f"🗑️  Cleared cache entry {key}")
            else:
                logger.info(f"No cache entry {key}")
            return
        if self.cache_dir.exists():
            shutil.rmtree(self.cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._write_cache_info({})
        logger.info("🗑️  Cleared all cache")

    def get_cache_stats(self) -> Dict:
        info = self._read_cache_info()
        files = list(self.cache_dir.glob("*.stgl"))
        total_size = sum(f.stat().st_size for f in files)
        return {
            "cache_dir": str(self.cache_dir),
            "ttl_days": self.cache_ttl_days,
            "total_snapshots": len(info),
            "total_files": len(files),
            "total_size_mb": round(total_size / (1024 * 1024), 2),
            "snapshots": info,
        }

    def cleanup_expired(self) -> int:
        info = self._read_cache_info()
        expired = [key for key in info if not self.is_cache_valid(key)]
        for key in expired:
            cache_file = self._cache_file(key)
            if cache_file.exists():
                cache_file.unlink()
            del info[key]
        if expired:
            self._write_cache_info(info)
            logger.info(f"🧹 Cleaned up {len(expired)} expired snapshot(s)")
        return len(expired)


def cached_ingest(
    csv_path,
    schema: Optional[CsvSchema] = None,
    node_feats_path=None,
    normalize: bool = True,
    cache: Optional[SnapshotCache] = None,
) -> TemporalGraph:
    """ingest_csv (+ normalize_features) through the snapshot cache."""
    key = None
    if cache is not None:
        key = source_key(csv_path, schema, node_feats_path, normalize)
        g = cache.get_cached_graph(key)
        if g is not None:
            return g
    g = ingest_csv(csv_path, schema, node_feats_path)
    if normalize:
        g = normalize_features(g)
    if cache is not None:
        cache.store_graph(key, g, source=str(csv_path))
    return g
