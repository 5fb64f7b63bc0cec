"""
Unit tests for the operator cache.
"""
from concurrent.futures import ThreadPoolExecutor

from ellspin.cache.operator_cache import CacheStats, OperatorCache, get_operator_cache
from ellspin.chain import ChainParams, h_left


class TestOperatorCache:
    """Test OperatorCache."""

    def test_miss_then_hit(self):
        """Test a second lookup is served from the cache."""
        cache = OperatorCache(max_entries=4)
        calls = []

        def builder():
            calls.append(1)
            return "op"

        assert cache.get_or_build("k", builder) == "op"
        assert cache.get_or_build("k", builder) == "op"
        assert len(calls) == 1
        stats = cache.get_stats()
        assert stats.hits == 1
        assert stats.misses == 1

    def test_lru_eviction(self):
        """Test the least recently used entry is evicted."""
        cache = OperatorCache(max_entries=2)
        cache.set("a", 1)
        cache.set("b", 2)
        cache.get("a")
        cache.set("c", 3)

        assert cache.get("b") is None
        assert cache.get("a") == 1
        assert cache.get("c") == 3
        assert cache.get_stats().evictions == 1

    def test_first_value_wins(self):
        """Test set does not overwrite an existing key."""
        cache = OperatorCache()
        cache.set("k", 1)
        assert cache.set("k", 2) == 1

    def test_clear(self):
        """Test clear empties the store."""
        cache = OperatorCache()
        cache.set("k", 1)
        cache.clear()
        assert len(cache) == 0
        assert cache.get_stats().entries == 0

    def test_concurrent_access(self):
        """Test concurrent builders agree on one stored value."""
        cache = OperatorCache(max_entries=8)
        with ThreadPoolExecutor(max_workers=4) as pool:
            values = list(pool.map(lambda i: cache.get_or_build(i % 3, lambda: object()), range(30)))

        for key in range(3):
            stored = cache.get(key)
            assert all(v is stored for i, v in enumerate(values) if i % 3 == key)
        assert len(cache) == 3


class TestCacheStats:
    """Test CacheStats."""

    def test_hit_rate(self):
        """Test hit rate computation."""
        assert CacheStats().hit_rate == 0.0
        stats = CacheStats(hits=3, misses=1)
        assert stats.hit_rate == 0.75
        assert stats.to_dict()["hit_rate"] == 0.75


class TestGlobalCache:
    """Test the shared cache used by chain operators."""

    def test_singleton(self):
        """Test get_operator_cache returns one instance."""
        assert get_operator_cache() is get_operator_cache()

    def test_chain_operators_are_cached(self, clear_operator_cache):
        """Test a chain Hamiltonian is built once per parameter set."""
        params = ChainParams(n_sites=3, kappa=0.8, eta=0.3, a=0.4)
        first = h_left(params)
        second = h_left(params)

        assert first is second
        assert clear_operator_cache.get_stats().hits >= 1
