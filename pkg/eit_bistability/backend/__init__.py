from eit_bistability.backend.base import BaseCacheBackend
from eit_bistability.backend.memory import InMemoryCacheBackend

__all__ = ["BaseCacheBackend", "InMemoryCacheBackend"]
