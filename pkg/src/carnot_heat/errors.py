"""Exception types shared across the package.

Exit-code conventions for the CLI: usage/config problems map to exit code 2,
failed numerical invariants to exit code 1.
"""


class CarnotHeatError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(CarnotHeatError):
    """Dimension argument outside its admissible range (odd, nonpositive...)."""


class InadmissibleDimensionsError(CarnotHeatError):
    """Center dimension m is not below the Radon-Hurwitz bound for 2n."""


class StructureMismatchError(CarnotHeatError):
    """Operands belong to different group structures or have wrong lengths."""


class GridError(CarnotHeatError):
    """Grid construction or compatibility failure."""


class GridMismatchError(GridError):
    """Grids are not compatible (spacings or lattice alignment differ)."""


class GridTooSmallError(GridError):
    """Grid lacks the interior points a stencil needs."""


class OutOfStencilError(GridError):
    """Evaluation point too close to the boundary for central differences."""


class QuadratureError(CarnotHeatError):
    """Kernel quadrature refused: oscillation or tail not resolvable."""


class TruncationError(CarnotHeatError):
    """Grid boundary mass too large for the requested operation."""


class FitFailureError(CarnotHeatError):
    """A least-squares fit missed its required residual tolerance."""


class ConfigError(CarnotHeatError):
    """Malformed experiment configuration (unknown key, bad value)."""


class UsageError(CarnotHeatError):
    """Malformed command-line invocation."""
