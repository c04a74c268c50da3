"""Exception hierarchy shared by all modules."""


class HDSNRError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(HDSNRError, ValueError):
    pass


class CovarianceError(HDSNRError, ValueError):
    """Covariance matrix is not symmetric positive definite (or too close to singular)."""


class PatternError(HDSNRError, ValueError):
    pass


class RegimeError(HDSNRError, ValueError):
    """Estimator used outside the (n, d) regime where it is defined."""


class SingularDesignError(HDSNRError, ValueError):
    pass


class DegenerateSpectrumError(HDSNRError, ValueError):
    pass


class DomainError(HDSNRError, ValueError):
    """Argument outside the domain of a formula."""


class SnrUndefinedError(HDSNRError, ValueError):
    pass


class ComplexityError(HDSNRError, ValueError):
    pass


class SymmetryError(HDSNRError, ValueError):
    pass
