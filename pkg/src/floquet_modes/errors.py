"""Exception hierarchy.

Every error carries the name of the module that raised it and the CLI exit
code it maps to, so the command line can print ``ERROR <code> <module>: ...``.
"""


class FloquetModesError(Exception):
    """Base class for all library errors."""

    module = "floquet_modes"
    exit_code = 4


# --- model -----------------------------------------------------------------

class ValidationError(FloquetModesError, ValueError):
    module = "model"
    exit_code = 1


class AsymmetricMatrix(ValidationError):
    def __init__(self, name, asymmetry):
        self.name = name
        self.asymmetry = float(asymmetry)
        super().__init__(f"matrix {name} is not symmetric (max |M - M^T| = {self.asymmetry:.3g})")


class DimensionMismatch(ValidationError):
    pass


class NonPositiveDimension(ValidationError):
    pass


# --- floquet_oracle ----------------------------------------------------------

class NonFiniteResult(FloquetModesError):
    module = "floquet_oracle"


class DefectiveMonodromy(FloquetModesError):
    module = "floquet_oracle"

    def __init__(self, condition):
        self.condition = float(condition)
        super().__init__(f"monodromy eigenvectors are ill-conditioned (cond = {self.condition:.3g})")


class UnstableSystem(FloquetModesError):
    module = "floquet_oracle"
    exit_code = 2


class MarginalSystem(FloquetModesError):
    module = "floquet_oracle"
    exit_code = 3


# --- continued_inversion -----------------------------------------------------

class SingularInnerMatrix(FloquetModesError):
    module = "continued_inversion"

    def __init__(self, depth, condition=float("inf")):
        self.depth = depth
        self.condition = float(condition)
        super().__init__(f"inner matrix at depth {depth} is singular (cond = {self.condition:.3g})")


class NoConvergence(FloquetModesError):
    module = "continued_inversion"

    def __init__(self, n_max, change=float("nan")):
        self.n_max = n_max
        super().__init__(f"continued inversion not converged at N = {n_max} (relative change {change:.3g})")


class RootCountMismatch(FloquetModesError):
    module = "continued_inversion"

    def __init__(self, found, expected):
        self.found = found
        self.expected = expected
        super().__init__(f"found {found} characteristic exponents, expected {expected}")


class DegenerateRoot(FloquetModesError):
    module = "continued_inversion"


class ResidualTooLarge(FloquetModesError):
    module = "continued_inversion"

    def __init__(self, n, residual):
        self.n = n
        self.residual = float(residual)
        super().__init__(f"recursion residual {self.residual:.3g} at harmonic n = {n}")


class UnsupportedDepth(FloquetModesError):
    module = "continued_inversion"


# --- fl_transform ------------------------------------------------------------

class NonDiagonalScaling(FloquetModesError):
    module = "fl_transform"


class NonPositiveDiagonal(FloquetModesError):
    module = "fl_transform"


class NonRealRoundTrip(FloquetModesError):
    module = "fl_transform"


class SingularU(FloquetModesError):
    module = "fl_transform"


# --- inhomogeneous -----------------------------------------------------------

class SingularBlockSystem(FloquetModesError):
    module = "inhomogeneous"


class UnsupportedSystem(FloquetModesError):
    module = "inhomogeneous"


# --- quantum -----------------------------------------------------------------

class DegreeTooLarge(FloquetModesError):
    module = "quantum"


class GridTooCoarse(FloquetModesError):
    module = "quantum"
