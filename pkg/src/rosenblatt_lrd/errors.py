class ParameterRangeError(ValueError):
    """A parameter lies outside the range where the quantity is defined or finite."""


class NumericalError(RuntimeError):
    """A numerical method failed (eigensolver, embedding, quadrature)."""
