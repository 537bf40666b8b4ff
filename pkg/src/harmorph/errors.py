"""Exception hierarchy shared by every module."""


class GeometryError(Exception):
    """Base class for all library errors."""


class ConfigError(GeometryError, ValueError):
    pass


class DomainError(GeometryError, ValueError):
    """A point lies outside the declared domain of a field or map."""


class ShapeError(GeometryError, ValueError):
    pass


class SingularMetricError(GeometryError, ArithmeticError):
    pass


class PreconditionError(GeometryError, ValueError):
    pass


class FrameError(GeometryError, ArithmeticError):
    """Gram-Schmidt ran out of independent candidates."""


class DimensionError(GeometryError, ValueError):
    pass


class SubmersionError(GeometryError, ArithmeticError):
    """The differential of a map is rank deficient at the requested point."""


class ValidationError(GeometryError, ValueError):
    """Constructor input data violates a structural constraint.

    Attributes:
        constraint: short name of the violated constraint.
        worst_point: sample point with the largest violation.
        violation: size of the violation there.
    """

    def __init__(self, constraint, worst_point, violation):
        self.constraint = constraint
        self.worst_point = worst_point
        self.violation = violation
        super().__init__(
            f"constraint {constraint!r} violated by {violation:.3e} at {list(worst_point)}"
        )


class ZeroLocusError(GeometryError, ArithmeticError):
    pass


class SamplingError(GeometryError, RuntimeError):
    pass
