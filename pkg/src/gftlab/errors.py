"""Exception types shared across the package."""


class GftLabError(Exception):
    """Base class for all errors raised by this package."""


class InstanceError(GftLabError):
    """An instance document failed validation."""


class NonAscendingSupport(InstanceError):
    pass


class NegativeValue(InstanceError):
    pass


class PmfNotNormalized(InstanceError):
    def __init__(self, deviation: float):
        self.deviation = deviation
        super().__init__(f"pmf sums to 1{deviation:+.3g} (deviation {deviation:.3g})")


class NotAMatching(InstanceError):
    def __init__(self, offending_set, reason: str):
        self.offending_set = offending_set
        super().__init__(f"feasible set {sorted(offending_set)} is not a matching: {reason}")


class TypeNotInSupport(GftLabError):
    pass


class ProfileSpaceTooLarge(GftLabError):
    pass


class FamilyTooLarge(GftLabError):
    pass


class NotBilateral(GftLabError):
    pass


class NegativeAlpha(GftLabError):
    pass


class LpTooLarge(GftLabError):
    pass


class SimplexIterationLimit(GftLabError):
    pass


class LpNotOptimal(GftLabError):
    """A computation required an optimal LP solution but the LP was infeasible or unbounded."""


class NotExAnteWBB(GftLabError):
    pass


class NotExAnteSBB(GftLabError):
    pass


class NegativePayment(GftLabError):
    pass
