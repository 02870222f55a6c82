"""Exception hierarchy shared by all modules."""


class TWLError(Exception):
    """Base class for every error raised by :mod:`twl`."""


class PreconditionError(TWLError, ValueError):
    """An input violates the documented precondition of an operation."""


class OutOfChartError(PreconditionError):
    """A chart coordinate lies outside the chart radius."""


class DegenerateActionError(PreconditionError):
    """The circle action is degenerate at the requested point."""


class InfiniteStabilizerError(DegenerateActionError):
    """The point is fixed by the whole circle, so its stabilizer is infinite."""


class SymbolSyntaxError(TWLError, ValueError):
    """Symbol text does not follow the grammar.

    ``position`` is the 0-based character offset of the offending token.
    """

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class NonPositiveSymbolError(PreconditionError):
    """The symbol is not strictly positive on X."""


class NumericalFailure(TWLError, RuntimeError):
    """A numerical routine failed to meet its accuracy contract."""


class QuadratureError(NumericalFailure):
    """Quadrature did not reach the requested accuracy."""


class EigensolverError(NumericalFailure):
    """An eigendecomposition failed or violated the residual bound."""


class StepUnderflowError(NumericalFailure):
    """Adaptive integration step fell below the minimum step size."""


class IncompleteSpectrumError(PreconditionError):
    """The computed spectrum does not cover the requested spectral window.

    ``required_k_max`` is the smallest ``k_max`` that would make the query
    complete.
    """

    def __init__(self, message, required_k_max):
        super().__init__(f"{message}; requires k_max >= {required_k_max}")
        self.required_k_max = required_k_max


class ConfigError(TWLError, ValueError):
    """Invalid experiment configuration; ``field`` is the dotted path."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
