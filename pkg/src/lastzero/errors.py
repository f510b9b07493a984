"""Exception types shared across the package."""


class NumericalDomainError(ArithmeticError):
    """An integrand or formula produced a non-finite value where a finite one is required."""


class ConvergenceError(ArithmeticError):
    """Quadrature or root finding stopped before meeting its tolerance."""
