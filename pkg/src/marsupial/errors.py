"""Exception types raised across the planning pipeline."""


class LengthTooShort(ValueError):
    """Requested tether length is shorter than the endpoint distance."""


class NoConvergence(RuntimeError):
    """Catenary bisection ran out of iterations."""


class ParseError(ValueError):
    def __init__(self, message: str, line: int, path: str = ""):
        self.line = line
        self.path = path
        where = f"{path}:{line}" if path else f"line {line}"
        super().__init__(f"{where}: {message}")


class EmptyCloud(ValueError):
    pass


class GridTooLarge(MemoryError):
    """Distance-field grid would exceed the configured voxel cap."""


class NoTraversableSeed(ValueError):
    pass


class InfeasibleStart(ValueError):
    pass


class NoSolution(RuntimeError):
    pass


class SamplingExhausted(RuntimeError):
    pass


class CatenaryLost(RuntimeError):
    pass


class DivergedNumerically(FloatingPointError):
    def __init__(self, family: str, message: str = ""):
        self.family = family
        super().__init__(message or f"non-finite cost in residual family {family!r}")
