"""Exception types shared across the library."""


class DomainError(ValueError):
    """A geometric precondition was violated.

    Raised for off-manifold coordinates, tangent vectors at the wrong base
    point, points outside a common normal convex neighbourhood (e.g. antipodal
    sphere points), and mismatched manifolds.
    """


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its budget without meeting its tolerance."""
