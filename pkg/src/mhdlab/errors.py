"""Exception hierarchy for the laboratory.

Every failure mode that callers are expected to catch has its own class so
that the CLI can map them to machine-readable error reports.
"""


class MHDLabError(Exception):
    """Base class for all package errors."""


# --- profiles ---------------------------------------------------------------

class StabilityViolation(MHDLabError):
    """The background field does not dominate the shear flow (b <= |u|)."""


class DegenerateField(MHDLabError):
    """The background magnetic field vanishes or changes sign."""


class RangeOverlap(MHDLabError):
    """Ran Z+ and Ran Z- are not separated by 0 (corrupted profile data)."""


class DegenerateCritical(MHDLabError):
    """A critical point with |Z''(y0)| below the non-degeneracy tolerance."""


# --- grid_ops ---------------------------------------------------------------

class ZeroWavenumber(MHDLabError):
    """alpha = 0 requested where the modified Helmholtz operator is singular."""


class GridMismatch(MHDLabError):
    """Fields defined on different grids were combined."""


# --- evolution --------------------------------------------------------------

class StepTooLarge(MHDLabError):
    """Requested RK4 step exceeds the empirical stability bound."""


# --- sturmian ---------------------------------------------------------------

class NearSingular(MHDLabError):
    """Dense resolvent solve too ill-conditioned (c too close to spectrum)."""


class SeriesDiverging(MHDLabError):
    """Neumann series failed to contract within the term budget."""


class SingularDeterminant(MHDLabError):
    """|D(c*) sigma| fell below tolerance, signalling quadrature failure."""


class WindowInvalid(MHDLabError):
    """Turning points escaped the requested window."""


class BranchCutViolation(MHDLabError):
    """A Log argument crossed the negative real axis unexpectedly."""


class FitUnstable(MHDLabError):
    """A least-squares exponent fit has residual above tolerance."""


class NotConverging(MHDLabError):
    """Boundary-limit Cauchy differences failed to decrease."""


# --- dunford ----------------------------------------------------------------

class EpsilonTooLarge(MHDLabError):
    """Contour offset exceeds the validity strip half-width."""


class DensityTooCoarse(MHDLabError):
    """Jump-density refinement changed the reconstruction beyond tolerance."""


# --- cli --------------------------------------------------------------------

class ConfigError(MHDLabError):
    """Run configuration failed validation."""
