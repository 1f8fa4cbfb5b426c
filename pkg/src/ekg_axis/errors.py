"""Exception hierarchy shared by all solver stages."""


class EKGError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(EKGError):
    pass


class ParityError(EKGError):
    pass


class FamilyViolationError(EKGError):
    """Sampled data break the sign/derivative conditions on gamma."""


class CD1ViolationError(EKGError):
    """The integrated potential term reaches 1, so e^{-2 beta} would vanish."""

    def __init__(self, r, margin):
        self.r = float(r)
        self.margin = float(margin)
        super().__init__(f"(cd1) violated at r = {self.r:.6g} (integral = {self.margin:.6g})")


class GaugeSingularityError(EKGError):
    def __init__(self, r, t=None):
        self.r = float(r)
        self.t = t
        where = f"r = {self.r:.6g}" if t is None else f"t = {t:.6g}, r = {self.r:.6g}"
        super().__init__(f"gauge singularity (e^(-2 beta) -> 0) at {where}")


class NumericalFailureError(EKGError):
    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class ChartError(EKGError):
    pass


class SeedingError(EKGError):
    pass


class StepError(EKGError):
    pass


class RangeError(EKGError):
    pass
