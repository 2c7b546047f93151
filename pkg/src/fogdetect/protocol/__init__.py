"""Four-entity detection protocol: bootstrap, sensing, fog aggregation, fog analysis."""
from .entities import (
    AggregatorSecrets,
    Analysis,
    AnalyzerSecrets,
    BatchVerificationError,
    ControlCenter,
    FogAggregator,
    FogAnalyzer,
    ProtocolError,
    PublicParams,
    ReplayError,
    Secrets,
    SensorSecrets,
    SizeModel,
    SmartSensor,
    TamperAlarm,
    VerificationError,
    cc_init,
)
from .messages import AggregationResult, DetectionReport, EncryptedSample, MalformedMessage
from .simulation import Channel, RoundTrace, World, WorldConfig, run_round

__all__ = [
    "AggregationResult",
    "AggregatorSecrets",
    "Analysis",
    "AnalyzerSecrets",
    "BatchVerificationError",
    "Channel",
    "ControlCenter",
    "DetectionReport",
    "EncryptedSample",
    "FogAggregator",
    "FogAnalyzer",
    "MalformedMessage",
    "ProtocolError",
    "PublicParams",
    "ReplayError",
    "RoundTrace",
    "Secrets",
    "SensorSecrets",
    "SizeModel",
    "SmartSensor",
    "TamperAlarm",
    "VerificationError",
    "World",
    "WorldConfig",
    "cc_init",
    "run_round",
]
