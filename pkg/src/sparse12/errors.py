"""Exception hierarchy shared across the package."""


class Sparse12Error(Exception):
    """Base class for every error raised by sparse12."""


class ShapeError(Sparse12Error, ValueError):
    """Array dimensions do not agree."""


class DomainError(Sparse12Error, ValueError):
    """An argument lies outside the domain of the operation."""


class DivergenceError(Sparse12Error, ArithmeticError):
    """A solver produced a non-finite iterate."""

    def __init__(self, solver, iteration):
        self.solver = solver
        self.iteration = iteration
        super().__init__(f"{solver}: non-finite iterate at iteration {iteration}")


class CapacityError(Sparse12Error):
    """An exhaustive enumeration would exceed the combinatorial guard."""


class TheoremNotApplicable(Sparse12Error, ValueError):
    """The hypotheses of a convergence/recovery result are violated."""


class InstanceFormatError(Sparse12Error, ValueError):
    """An instance file could not be parsed."""
