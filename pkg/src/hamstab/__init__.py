"""Feedback stabilization of saddle-center equilibria of Hamiltonian systems.

Pipeline: find an equilibrium, classify the spectrum of ``J D^2H(z0)``,
build the symplectic normal-form transform, then either stabilize the
saddle with a dissipative linear feedback or turn a center into a saddle.
"""

from . import _kernels
from .control import (
    ClosedLoopSystem,
    FeedbackLaw,
    LinearFeedback,
    closed_loop_jacobian,
    destabilize,
    feedback_functions,
    modified_hamiltonian,
    stabilize,
    theorem1_checks,
)
from .errors import (
    ClassificationError,
    ConstructionError,
    ConvergenceError,
    DomainError,
    GainError,
    HamstabError,
    NonSemisimpleError,
    PreconditionError,
    RankError,
    SingularityError,
    StiffnessError,
)
from .hamsys import (
    FunctionHamiltonian,
    HamiltonianSystem,
    PolynomialHamiltonian,
    find_equilibrium,
    poisson_bracket,
    symplectic_J,
    vector_field,
)
from .normal_form import NormalFormTransform, build_transform, normalization_constants
from .reaction import classify_reactive, linear_invariants
from .sim import IntegratorConfig, Trajectory, integrate, simulate, verify_stability
from .spectral import Kind, SpectrumClassification, classify, linearize
from .systems import SYSTEMS, hydrogen, make_system, model, quadratic

__version__ = "0.1.0"
KERNEL_BACKEND = _kernels.BACKEND


def analyze(H, guess):
    """Equilibrium, classification and normal-form transform in one call.

    Returns ``(z0, classification, transform)``.
    """
    z0 = find_equilibrium(H, guess)
    cls = classify(linearize(H, z0))
    return z0, cls, build_transform(cls, H, z0)


__all__ = [
    "ClassificationError",
    "ClosedLoopSystem",
    "ConstructionError",
    "ConvergenceError",
    "DomainError",
    "FeedbackLaw",
    "FunctionHamiltonian",
    "GainError",
    "HamiltonianSystem",
    "HamstabError",
    "IntegratorConfig",
    "KERNEL_BACKEND",
    "Kind",
    "LinearFeedback",
    "NonSemisimpleError",
    "NormalFormTransform",
    "PolynomialHamiltonian",
    "PreconditionError",
    "RankError",
    "SYSTEMS",
    "SingularityError",
    "SpectrumClassification",
    "StiffnessError",
    "Trajectory",
    "__version__",
    "analyze",
    "build_transform",
    "classify",
    "classify_reactive",
    "closed_loop_jacobian",
    "destabilize",
    "feedback_functions",
    "find_equilibrium",
    "hydrogen",
    "integrate",
    "linear_invariants",
    "linearize",
    "make_system",
    "model",
    "modified_hamiltonian",
    "normalization_constants",
    "poisson_bracket",
    "quadratic",
    "simulate",
    "stabilize",
    "symplectic_J",
    "theorem1_checks",
    "vector_field",
    "verify_stability",
]
