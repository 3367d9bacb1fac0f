"""Trusted multi-view classification with hierarchical opinion aggregation.

Per-view features are decomposed into common and specific representations,
evidence from both is fused within each view, refined across views with
evidence-level attention, and combined into one joint opinion that carries
an explicit uncertainty mass.  The package ships its own small reverse-mode
autodiff engine, the subjective-logic opinion algebra, the full training
pipeline, and noise/conflict corruption harnesses.
"""

__version__ = "0.1.0"

from .autodiff import Adam, GradCheckReport, Tensor, backward, forward_op, grad_check
from .errors import (
    ContractError,
    DataError,
    DomainError,
    ShapeError,
    SingularityError,
    TrainingDiverged,
)
from .opinions import (
    BaseRate,
    EvidenceVector,
    Opinion,
    aggregate_all,
    aggregate_pair,
    conflict_degree,
    evidence_to_opinion,
    opinion_to_evidence,
    projected_probability,
)

__all__ = [
    "Adam",
    "BaseRate",
    "ContractError",
    "DataError",
    "DomainError",
    "EvidenceVector",
    "GradCheckReport",
    "Opinion",
    "ShapeError",
    "SingularityError",
    "Tensor",
    "TrainingDiverged",
    "aggregate_all",
    "aggregate_pair",
    "backward",
    "conflict_degree",
    "evidence_to_opinion",
    "forward_op",
    "grad_check",
    "opinion_to_evidence",
    "projected_probability",
    "__version__",
]
