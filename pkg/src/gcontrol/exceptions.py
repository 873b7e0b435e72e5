"""Exception types raised by the controller, plants and harness."""


class ContractViolation(ValueError):
    """A caller broke a documented precondition (shapes, ranges, ordering)."""


class NoRulesError(ContractViolation):
    """Inference was requested on an empty rule base."""


class NumericalError(ArithmeticError):
    """A matrix expected to be SPD/invertible was not."""


class DivergenceError(RuntimeError):
    """A simulated state became non-finite."""

    def __init__(self, message, step=None, t=None):
        super().__init__(message)
        self.step = step
        self.t = t
