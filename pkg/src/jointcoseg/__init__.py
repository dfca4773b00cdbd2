"""Joint colocalization and cosegmentation as one convex quadratic program."""
from .baselines import BaselineMode, run
from .diffrac import centering_projection, diffrac_matrix, ridge_loss_min
from .graph import assemble_block_laplacian, normalized_laplacian, similarity_matrix
from .instance import (BoundingBox, Hyperparams, ImageInstance, InstanceError, InstanceSet,
                       Superpixel, parse_instance, saliency_to_cost, serialize_instance, validate)
from .metrics import MetricsReport, box_iou, corloc, pixel_metrics
from .oracle import brute_force
from .qp import (JointQp, Labeling, ProblemMatrices, assemble, build_matrices, objective_value,
                 projection_matrix, round_solution)
from .solver import InfeasibleError, Solution, SolverConfig, Status, relaxation_gap, solve
from .synth import SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "BaselineMode", "run",
    "centering_projection", "diffrac_matrix", "ridge_loss_min",
    "assemble_block_laplacian", "normalized_laplacian", "similarity_matrix",
    "BoundingBox", "Hyperparams", "ImageInstance", "InstanceError", "InstanceSet",
    "Superpixel", "parse_instance", "saliency_to_cost", "serialize_instance", "validate",
    "MetricsReport", "box_iou", "corloc", "pixel_metrics",
    "brute_force",
    "JointQp", "Labeling", "ProblemMatrices", "assemble", "build_matrices", "objective_value",
    "projection_matrix", "round_solution",
    "InfeasibleError", "Solution", "SolverConfig", "Status", "relaxation_gap", "solve",
    "SynthConfig", "generate",
]
