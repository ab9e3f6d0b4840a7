"""Exception types raised by the constructions and checks."""


class DependentInput(ValueError):
    """A vector is (numerically) in the span of the ones before it."""


class NotOrthonormal(ValueError):
    pass


class NotInComplement(ValueError):
    pass


class DegeneratePath(ArithmeticError):
    pass


class NotInvertible(ArithmeticError):
    """The overlap operator of two frames is too close to singular."""


class NoConvergence(ArithmeticError):
    pass


class PathTooLong(RuntimeError):
    pass


class ScheduleOverflow(ValueError):
    """The requested parameter needs more stages than the configured cap."""


class HypothesisViolated(AssertionError):
    def __init__(self, j, t, defect):
        self.j, self.t, self.defect = j, t, defect
        super().__init__(f"f_t(e_{j}) != e_{j} at t={t!r} (defect {defect:.3e})")


class BoundViolated(AssertionError):
    def __init__(self, probe_index, t, lhs, rhs):
        self.probe_index, self.t, self.lhs, self.rhs = probe_index, t, lhs, rhs
        super().__init__(
            f"probe {probe_index} at t={t!r}: |f_t x - x| = {lhs:.3e} > {rhs:.3e}"
        )
