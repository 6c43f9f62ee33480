# eit_bistability/backend/memory.py

import time
from typing import Any, Optional

from .base import BaseCacheBackend
from eit_bistability.serializer import SerializationFormat, deserialize, serialize


class InMemoryCacheBackend(BaseCacheBackend):
    """
    Process-local cache backend.

    Values are stored serialized, so a hit returns a fresh copy and the
    payload goes through the same encoding as the Redis backend. Not safe
    to share between threads.
    """

    def __init__(
        self,
        key_prefix: str = "eit-bistability",
        format: Optional[SerializationFormat] = None,
    ) -> None:
        self.key_prefix = key_prefix
        self.format = format
        self._store: dict[str, tuple[bytes, Optional[float]]] = {}

    def _build_key(self, key: str) -> str:
        return f"{self.key_prefix}:{key}"

    async def get(self, key: str) -> Optional[Any]:
        store_key = self._build_key(key)
        entry = self._store.get(store_key)
        if entry is None:
            return None
        raw, expires_at = entry
        if expires_at is not None and time.monotonic() >= expires_at:
            del self._store[store_key]
            return None
        return deserialize(raw, self.format)

    async def set(
        self,
        key: str,
        value: Any,
        ttl: Optional[int] = None,
    ) -> None:
        data = serialize(value, self.format)
        expires_at = time.monotonic() + ttl if ttl is not None else None
        self._store[self._build_key(key)] = (data, expires_at)

    async def delete(self, key: str) -> None:
        self._store.pop(self._build_key(key), None)

    async def clear(self, namespace: Optional[str] = None) -> None:
        prefix = (
            f"{self.key_prefix}:{namespace}:"
            if namespace
            else f"{self.key_prefix}:"
        )
        for store_key in [k for k in self._store if k.startswith(prefix)]:
            del self._store[store_key]

    def __len__(self) -> int:
        return len(self._store)
