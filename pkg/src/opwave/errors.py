"""Exception hierarchy for opwave."""


class OpwaveError(Exception):
    """Base class for all library errors."""


class NotExpansive(OpwaveError):
    pass


class NotScaledOrthogonal(OpwaveError):
    pass


class ResolutionTooSmall(OpwaveError):
    pass


class InternalError(OpwaveError):
    pass


class BadParameter(OpwaveError):
    pass


class Diverging(OpwaveError):
    pass


class UnsupportedScale(OpwaveError):
    pass


class UnsupportedOperator(OpwaveError):
    pass


class ZeroMismatch(OpwaveError):
    pass


class SingularSample(OpwaveError):
    pass


class SlowDecay(OpwaveError):
    pass


class DegenerateLowerBound(OpwaveError):
    pass


class ScaleRejected(OpwaveError):
    def __init__(self, scale, reason=""):
        self.scale = scale
        self.reason = reason
        super().__init__(f"scale j={scale} rejected: {reason}")


class IncommensurateGrid(OpwaveError):
    pass


class NoConvergence(OpwaveError):
    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"no convergence after {iterations} iterations (relative residual {residual:.3e})"
        )


class DegenerateFit(OpwaveError):
    pass


class FormatError(OpwaveError):
    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
