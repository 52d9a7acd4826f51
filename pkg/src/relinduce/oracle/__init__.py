from .base import LmOracle, MaskedQuery, SentenceVector, TopKPrediction
from .cache import CachedOracle
from .fixture import FixtureOracle, FixtureWorld
from .remote import RemoteOracle
from .replay import RecordingOracle, ReplayOracle

__all__ = [
    "LmOracle",
    "MaskedQuery",
    "TopKPrediction",
    "SentenceVector",
    "FixtureWorld",
    "FixtureOracle",
    "RemoteOracle",
    "CachedOracle",
    "RecordingOracle",
    "ReplayOracle",
]
