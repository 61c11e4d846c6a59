"""Exception types raised across the package."""


class HoneyedgeError(Exception):
    """Base class for all package errors."""


class NotCoprime(HoneyedgeError):
    """Edge direction integers must be coprime and not both zero."""


class ZeroAmplitude(HoneyedgeError):
    """A default potential was requested with amplitude zero."""


class CutoffTooSmall(HoneyedgeError):
    """Plane-wave cutoff does not cover the potential's Fourier support."""


class SolverFailure(HoneyedgeError):
    """An eigensolver failed to converge or returned inconsistent data."""


class NoDiracPoint(HoneyedgeError):
    """No degenerate band pair found at the high-symmetry point."""


class NotConical(HoneyedgeError):
    """A band degeneracy was found but the touching is not conical."""


class AnisotropyTooLarge(HoneyedgeError):
    """Directional spread of the cone slope exceeds tolerance."""


class RotationSortFailure(HoneyedgeError):
    """Degenerate modes could not be sorted into rotation eigenspaces."""


class NondegeneracyFailure(HoneyedgeError):
    """A symmetry-breaking coupling constant is numerically zero."""


class GapClosed(HoneyedgeError):
    """The perturbed bulk operators do not open a spectral gap."""


class GridTooCoarse(HoneyedgeError):
    """1D grid resolution insufficient for the requested model."""


class NotNormalizable(HoneyedgeError):
    """Closed-form zero mode failed to decay; sign bookkeeping error."""


class TrackingAmbiguity(HoneyedgeError):
    """Eigenbranch continuation could not match states between steps."""


class PrerequisiteFailure(HoneyedgeError):
    """A bulk hypothesis (H1/H2/H3) required by the edge solver failed."""


class RibbonTooNarrow(HoneyedgeError):
    """Transverse window does not cover enough domain-wall widths."""


class GaugeMismatch(HoneyedgeError):
    """Supplied Bloch modes do not satisfy the frame gauge relations."""


class NonMonotoneResiduals(HoneyedgeError):
    """Multiscale residuals do not decrease along the delta sequence."""


class CountMismatch(HoneyedgeError):
    """In-gap eigenvalue count disagrees with the 1D prediction."""


class OrderTooLow(HoneyedgeError):
    """Fitted convergence order fell below the contracted exponent."""


class PairIdentificationFailure(HoneyedgeError):
    """Could not identify a valley pair among armchair edge curves."""
