"""Exception types shared across the package."""


class JumpFormsError(Exception):
    """Base class for all package errors."""


class NonIntegrable(JumpFormsError):
    """exp(-V) is not integrable on R^d (or the tail bound certifies divergence)."""


class TailBoundUnavailable(JumpFormsError):
    """A tabulated potential lacks the tail metadata needed for a certified bound."""


class EmptyAnnulus(JumpFormsError):
    """Annulus extremum requested with inner radius larger than outer radius."""


class PhiBounded(JumpFormsError):
    """Phi does not reach the requested level: no finite super-Poincare rate here."""


class TailTooHeavy(JumpFormsError):
    """No radius on the table satisfies the tail-mass constraint."""


class PsiDiverges(JumpFormsError):
    """The Psi integral fails its tail bound: no ultracontractivity bound."""


class TooLarge(JumpFormsError):
    """Grid or pair set exceeds the configured assembly cap."""


class TooLargeForDense(JumpFormsError):
    """Node count exceeds the dense eigensolver cap."""


class DimensionMismatch(JumpFormsError):
    """Vector length does not match the node count."""


class QuadratureFailure(JumpFormsError):
    """Adaptive quadrature did not reach the requested tolerance."""


class TailBoundFails(JumpFormsError):
    """Declared growth degree too large for the kernel tail: no certified remainder."""


class BallSearchFailed(JumpFormsError):
    """Could not shrink the witness ball to the required mass within the radius floor."""


class NonPositivePhi(JumpFormsError):
    """Lyapunov profile must be strictly positive on the nodes."""


class InsufficientRange(JumpFormsError):
    """Exponent fit needs at least 8 samples spanning at least 3 decades."""


class InnerIntegralDiverges(JumpFormsError):
    """Inner rate integral of the moment transform diverges."""


class ConfigError(JumpFormsError):
    """Run configuration is malformed or violates a module precondition."""
