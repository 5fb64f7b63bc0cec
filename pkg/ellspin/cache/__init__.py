"""
Operator caching for chain constructions.
"""
from ellspin.cache.operator_cache import (
    OperatorCache,
    CacheStats,
    get_operator_cache,
)

__all__ = [
    "OperatorCache",
    "CacheStats",
    "get_operator_cache",
]
