# eit_bistability/backend/redis.py

from typing import Any, Optional, Sequence

import redis.asyncio as redis

from .base import BaseCacheBackend
from eit_bistability.serializer import SerializationFormat, deserialize, serialize


class RedisCacheBackend(BaseCacheBackend):
    """
    Redis store for sweep-point records.

    Lets several sweep runs (or hosts) share traced points: a point already
    traced under the same parameter hash is read back instead of recomputed.
    A whole sweep grid is looked up with a single MGET.
    """

    def __init__(
        self,
        client: redis.Redis,
        key_prefix: str = "eit-bistability",
        format: Optional[SerializationFormat] = None,
    ) -> None:
        self.client = client
        self.key_prefix = key_prefix
        self.format = format

    @classmethod
    def from_url(cls, url: str, **kwargs: Any) -> "RedisCacheBackend":
        """Backend for a ``redis://`` URL, as given to ``sweep --cache``."""
        return cls(redis.Redis.from_url(url), **kwargs)

    def _build_key(self, key: str) -> str:
        return f"{self.key_prefix}:{key}"

    def _decode(self, raw: Optional[bytes]) -> Optional[Any]:
        return None if raw is None else deserialize(raw, self.format)

    async def get(self, key: str) -> Optional[Any]:
        return self._decode(await self.client.get(self._build_key(key)))

    async def get_many(self, keys: Sequence[str]) -> list[Optional[Any]]:
        if not keys:
            return []
        raws = await self.client.mget([self._build_key(key) for key in keys])
        return [self._decode(raw) for raw in raws]

    async def set(
        self,
        key: str,
        value: Any,
        ttl: Optional[int] = None,
    ) -> None:
        await self.client.set(
            name=self._build_key(key), value=serialize(value, self.format), ex=ttl
        )

    async def delete(self, key: str) -> None:
        await self.client.delete(self._build_key(key))

    async def clear(self, namespace: Optional[str] = None) -> None:
        """Drop matching records, walking the keyspace with SCAN."""
        pattern = (
            f"{self.key_prefix}:{namespace}:*"
            if namespace
            else f"{self.key_prefix}:*"
        )
        keys = [key async for key in self.client.scan_iter(match=pattern)]
        if keys:
            await self.client.delete(*keys)

    async def close(self) -> None:
        await self.client.aclose()
