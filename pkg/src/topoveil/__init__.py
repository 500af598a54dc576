"""Topology-privacy-preserving feedback design for consensus networks."""

__version__ = "0.1.0"

from .netgraph import Topology, random_topology, validate
from .design_central import (
    FeedbackMatrix,
    check_convergence,
    design_invariant_subspace,
    design_kernel_pb,
    design_laplacian,
    design_unobservable,
)
from .design_dist import run_protocol

__all__ = [
    "Topology",
    "random_topology",
    "validate",
    "FeedbackMatrix",
    "check_convergence",
    "design_invariant_subspace",
    "design_kernel_pb",
    "design_laplacian",
    "design_unobservable",
    "run_protocol",
    "__version__",
]
