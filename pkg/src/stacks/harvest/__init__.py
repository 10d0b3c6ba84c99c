"""OAI-PMH harvesting client: streaming full harvests with resumption
token handling, and watermark-based incremental sync with per-source
state."""

from .client import (
    HarvestDelta,
    HarvestError,
    HarvestItem,
    HarvestProtocolError,
    HarvestRestart,
    SourceState,
    harvest,
    incremental_sync,
    load_state,
    save_state,
)

__all__ = [
    "HarvestDelta",
    "HarvestError",
    "HarvestItem",
    "HarvestProtocolError",
    "HarvestRestart",
    "SourceState",
    "harvest",
    "incremental_sync",
    "load_state",
    "save_state",
]
