# eit_bistability/backend/base.py

"""
Abstract base class for sweep-result caches.

A sweep stores one serialized record per grid point under
``<namespace>:<parameter hash>`` (see ``key_builder``). Records are plain
JSON-like dicts with complex numbers; backends only move bytes.
"""

from abc import ABC, abstractmethod
from typing import Any, Optional, Sequence


class BaseCacheBackend(ABC):
    """
    Async store for sweep-point records.

    Subclasses provide single-key access; ``get_many`` has a sequential
    default that batching backends override.
    """

    @abstractmethod
    async def get(self, key: str) -> Optional[Any]:
        """
        Retrieve the record stored for one sweep point.

        :param key: Parameter-hash key of the point.
        :return: The decoded record, or None if absent or expired.
        """
        raise NotImplementedError

    @abstractmethod
    async def set(
        self,
        key: str,
        value: Any,
        ttl: Optional[int] = None,
    ) -> None:
        """
        Store a point record.

        :param key: Parameter-hash key of the point.
        :param value: The record (``SweepRecord.to_dict()``).
        :param ttl: Optional time-to-live in seconds; None keeps it forever.
        """
        raise NotImplementedError

    @abstractmethod
    async def delete(self, key: str) -> None:
        """Drop one point record; missing keys are ignored."""
        raise NotImplementedError

    @abstractmethod
    async def clear(self, namespace: Optional[str] = None) -> None:
        """
        Drop every record, or only those under ``<namespace>:``.

        :param namespace: e.g. ``sweep-point`` to forget all traced points.
        """
        raise NotImplementedError

    async def get_many(self, keys: Sequence[str]) -> list[Optional[Any]]:
        """Records for ``keys`` in order; None marks a miss."""
        return [await self.get(key) for key in keys]

    async def close(self) -> None:
        """Release connections; a no-op for in-process backends."""
        return None
