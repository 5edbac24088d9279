"""Exception hierarchy shared by all enzlab modules.

Every error carries a stable symbolic ``name`` (used by the CLI to map
failures to distinct exit codes) and a human-readable message.
"""


class EnzLabError(Exception):
    """Base class for all enzlab errors."""

    name = "ERROR"
    exit_code = 1


class GeometryInvalid(EnzLabError):
    """Domain containment or curve validity violated."""

    name = "GEOMETRY_INVALID"
    exit_code = 5


class MeshFailure(EnzLabError):
    """Mesh could not be generated at the required quality floor."""

    name = "MESH_FAILURE"
    exit_code = 6


class ZeroCoefficient(EnzLabError):
    """A diffusion coefficient of zero was requested on an active region."""

    name = "ZERO_COEFFICIENT"
    exit_code = 7


class SingularSystem(EnzLabError):
    """Linear solve failed (factorization breakdown or residual blow-up)."""

    name = "SINGULAR_SYSTEM"
    exit_code = 8


class IncompatibleData(EnzLabError):
    """Pure-Neumann data violates the discrete compatibility condition."""

    name = "INCOMPATIBLE_DATA"
    exit_code = 9


class TagMismatch(EnzLabError):
    """Field/functional/boundary tags do not line up."""

    name = "TAG_MISMATCH"
    exit_code = 10


class EmptyWindow(EnzLabError):
    """A norm window selects no triangles."""

    name = "EMPTY_WINDOW"
    exit_code = 11


class ResonantDopant(EnzLabError):
    """k^2 is (numerically) a Dirichlet eigenvalue of the dopant."""

    name = "RESONANT_DOPANT"
    exit_code = 12


class BetaNearZero(EnzLabError):
    """The flux-balance constant is numerically zero; discretization failure."""

    name = "BETA_NEAR_ZERO"
    exit_code = 13


class NoConvergence(EnzLabError):
    """An iterative estimator failed to settle within its budget."""

    name = "NO_CONVERGENCE"
    exit_code = 14


class DivergentSeries(EnzLabError):
    """A full series sum was requested outside its convergence disk."""

    name = "DIVERGENT_SERIES"
    exit_code = 15


class DomainError(EnzLabError):
    """Special-function argument outside the supported range."""

    name = "DOMAIN"
    exit_code = 16


class SingularMatch(EnzLabError):
    """Radial interface-matching system is ill-conditioned."""

    name = "SINGULAR_MATCH"
    exit_code = 17


class Degenerate(EnzLabError):
    """Eigenvector means vanish where a nonzero mean is required."""

    name = "DEGENERATE"
    exit_code = 18


class ParseError(EnzLabError):
    """Configuration file could not be parsed."""

    name = "PARSE_ERROR"
    exit_code = 3


class ValidationError(EnzLabError):
    """Configuration parsed but violates an invariant."""

    name = "VALIDATION_ERROR"
    exit_code = 4
