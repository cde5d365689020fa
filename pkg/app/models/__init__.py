from app.models.operators import ComplexOperator, DensityOperator, ProjectorOperator
from app.models.framework import ClassificationReport, FTensor, InstrumentModel, MicroState, MicroSystem, Verdict
from app.models.chain import (
    Branch,
    ChainParams,
    GridConfig,
    ModelClassificationReport,
    OverlapKind,
    PacketSpec,
    PerturbedChain,
    PotentialSpec,
    SiteState,
    TimeSeriesRecord,
)
from app.models.oracle import CompositeCheckReport, OracleCheck

__all__ = [
    "Branch",
    "ChainParams",
    "ClassificationReport",
    "ComplexOperator",
    "CompositeCheckReport",
    "DensityOperator",
    "FTensor",
    "GridConfig",
    "InstrumentModel",
    "MicroState",
    "MicroSystem",
    "ModelClassificationReport",
    "OracleCheck",
    "OverlapKind",
    "PacketSpec",
    "PerturbedChain",
    "PotentialSpec",
    "ProjectorOperator",
    "SiteState",
    "TimeSeriesRecord",
    "Verdict",
]
