"""Exception types shared across the package."""


class LpffdError(Exception):
    """Base class for solver and geometry errors."""


class VertexOutsideGrid(LpffdError):
    """A mesh vertex lies outside the lattice box (beyond the clamp tolerance)."""

    def __init__(self, vertex: int, overshoot: float):
        self.vertex = int(vertex)
        self.overshoot = float(overshoot)
        super().__init__(
            f"vertex {self.vertex} lies outside the lattice box "
            f"(overshoot {self.overshoot:.3e} of the box extent)"
        )


class NonPositiveDefiniteError(LpffdError):
    """The assembled normal matrix is not positive definite.

    Carries a human-readable description of the offending null direction so a
    caller can tell which handle is unconstrained.
    """

    def __init__(self, message: str, null_direction=None):
        self.null_direction = null_direction
        super().__init__(message)
