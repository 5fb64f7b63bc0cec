"""
LRU cache for materialized chain operators.

Dense 2^N x 2^N operators are built once per parameter set and reused by
commutator checks, spectra and sweeps. Keys are hashable tuples
of the operator name and a frozen parameter record.
"""
import threading
from collections import OrderedDict
from dataclasses import dataclass, asdict
from typing import Any, Callable, Dict, Hashable, Optional, TypeVar

from ellspin.utils.logger import get_logger
from ellspin.config import get_settings

logger = get_logger(__name__)

T = TypeVar("T")


@dataclass
class CacheStats:
    """Cache statistics."""
    hits: int = 0
    misses: int = 0
    evictions: int = 0
    entries: int = 0

    @property
    def hit_rate(self) -> float:
        """Fraction of lookups served from the cache."""
        total = self.hits + self.misses
        return self.hits / total if total else 0.0

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        result = asdict(self)
        result["hit_rate"] = self.hit_rate
        return result


class OperatorCache:
    """
    Thread-safe LRU cache of built operators.

    Builders run outside the lock, so two threads asking for the same
    missing key may both build it; the first stored value wins.
    """

    def __init__(self, max_entries: int = 256):
        """
        Initialize operator cache.

        Args:
            max_entries: Maximum number of entries (LRU eviction)
        """
        self.max_entries = max_entries
        self._store: "OrderedDict[Hashable, Any]" = OrderedDict()
        self._lock = threading.Lock()
        self.stats = CacheStats()

    def get(self, key: Hashable) -> Optional[Any]:
        """Return the cached value or None, updating LRU order."""
        with self._lock:
            if key not in self._store:
                self.stats.misses += 1
                return None
            self._store.move_to_end(key)
            self.stats.hits += 1
            return self._store[key]

    def set(self, key: Hashable, value: Any) -> Any:
        """Store a value, evicting the least recently used entry if full."""
        with self._lock:
            if key in self._store:
                self._store.move_to_end(key)
                return self._store[key]
            if len(self._store) >= self.max_entries:
                oldest_key, _ = self._store.popitem(last=False)
                self.stats.evictions += 1
                logger.debug("operator_cache_eviction", evicted_key=str(oldest_key)[:64])
            self._store[key] = value
            self.stats.entries = len(self._store)
            return value

    def get_or_build(self, key: Hashable, builder: Callable[[], T]) -> T:
        """Return the cached value for key, building and storing it on a miss."""
        cached = self.get(key)
        if cached is not None:
            return cached
        return self.set(key, builder())

    def clear(self) -> None:
        """Clear all cache entries."""
        with self._lock:
            self._store.clear()
            self.stats.entries = 0
        logger.debug("operator_cache_cleared")

    def __len__(self) -> int:
        return len(self._store)

    def get_stats(self) -> CacheStats:
        """Get cache statistics."""
        with self._lock:
            self.stats.entries = len(self._store)
            return self.stats


# Global cache instance
_operator_cache: Optional[OperatorCache] = None
_cache_lock = threading.Lock()


def get_operator_cache() -> OperatorCache:
    """
    Get or create the global operator cache.

    Returns:
        OperatorCache instance
    """
    global _operator_cache
    with _cache_lock:
        if _operator_cache is None:
            _operator_cache = OperatorCache(
                max_entries=get_settings().operator_cache_entries
            )
        return _operator_cache
