"""Monitoring plane: caches, agents, and publishers."""
from .caches import (
    CacheRefresher,
    CacheService,
    HostCacheEntry,
    OssCacheEntry,
    StaleCacheError,
)
from .monitor import (
    MAX_CACHE_AGE_INTERVALS,
    AgentConfig,
    AgentStats,
    GapMarker,
    MonitoringAgent,
)
from .publisher import (
    DEFAULT_QUEUE_CAPACITY,
    Publisher,
    PublisherStats,
    PublishResult,
    SinkTransport,
    SocketTransport,
)
from .runtime import SimulationRuntime

__all__ = [
    "CacheRefresher",
    "CacheService",
    "HostCacheEntry",
    "OssCacheEntry",
    "StaleCacheError",
    "MAX_CACHE_AGE_INTERVALS",
    "AgentConfig",
    "AgentStats",
    "GapMarker",
    "MonitoringAgent",
    "DEFAULT_QUEUE_CAPACITY",
    "Publisher",
    "PublisherStats",
    "PublishResult",
    "SinkTransport",
    "SocketTransport",
    "SimulationRuntime",
]
