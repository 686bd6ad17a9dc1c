"""Exception hierarchy shared by the solver modules."""


class CutDGError(Exception):
    """Base class for all solver errors."""


class GeometryError(CutDGError):
    pass


class NoLargeElement(GeometryError):
    """A subdomain has no element whose intersection fraction reaches delta."""


class SingularBlock(CutDGError):
    pass


class InadmissibleState(CutDGError):
    """Non-positive density or pressure where a wave speed is needed."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ZeroDensity(CutDGError):
    pass


class MeanOutOfBounds(CutDGError):
    pass


class MeanNotAdmissible(CutDGError):
    pass


class BoundViolation(CutDGError):
    """Raised by the mean-value monitor when a CFL-type guarantee is broken."""

    def __init__(self, message, step=None, value=None):
        super().__init__(message)
        self.step = step
        self.value = value


class ColdHistory(CutDGError):
    pass


class NoReference(CutDGError):
    pass


class ConfigError(CutDGError):
    pass
