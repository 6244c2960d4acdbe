"""Exception hierarchy.

Every error raised by the library derives from :class:`TronqueeError`; the
CLI reports ``type(err).__name__`` so the module error name survives to the
exit message.
"""


class TronqueeError(Exception):
    """Base class for all library errors."""


class ConfigError(TronqueeError, ValueError):
    pass


class InvalidParameters(TronqueeError, ValueError):
    pass


# algebra
class ZeroLeadingCoefficient(TronqueeError, ZeroDivisionError):
    pass


class TruncationExhausted(TronqueeError):
    pass


# series_engine
class DegenerateBranch(TronqueeError):
    pass


class NoConvergence(TronqueeError):
    pass


class RateNotUnit(TronqueeError):
    pass


class ResonanceCollision(TronqueeError):
    pass


class InsufficientDepth(TronqueeError):
    pass


# summation
class PadePoleOnRay(TronqueeError):
    pass


class QuadratureFail(TronqueeError):
    pass


class NoMinimum(TronqueeError):
    """Least-term summation found no interior minimum.

    The partial sum and error estimate are still attached so callers can use
    them as a flagged result.
    """

    def __init__(self, msg, value=None, err_est=None):
        super().__init__(msg)
        self.value = value
        self.err_est = err_est


class OutsideConvergenceRegion(TronqueeError):
    pass


# integrator
class StepUnderflow(TronqueeError):
    def __init__(self, msg, x=None):
        super().__init__(msg)
        self.x = x


class NonFiniteState(TronqueeError):
    pass


class NewtonDiverged(TronqueeError):
    pass


class DegenerateZero(TronqueeError):
    def __init__(self, msg, x=None):
        super().__init__(msg)
        self.x = x


# asymptotics
class DegenerateArray(TronqueeError):
    pass


class AtSingularity(TronqueeError, ZeroDivisionError):
    pass


class PoleOnApproach(TronqueeError):
    pass


class InconsistentJump(TronqueeError):
    pass


class NoPoleFound(TronqueeError):
    pass


# transforms
class ZeroScale(TronqueeError, ValueError):
    pass


class ZeroState(TronqueeError, ZeroDivisionError):
    pass
