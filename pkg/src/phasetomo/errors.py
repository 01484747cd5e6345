"""Exception types shared across the package."""


class PhasetomoError(Exception):
    """Base class for all package errors."""


class TruncationError(PhasetomoError):
    """Fock-space truncation too small for the requested accuracy."""

    def __init__(self, msg, tail=None, suggested_dim=None):
        super().__init__(msg)
        self.tail = tail
        self.suggested_dim = suggested_dim


class UnderflowError(PhasetomoError):
    """A Gaussian prefactor underflows at this argument."""


class CoverageError(PhasetomoError):
    """Grid does not cover the support of the sampled symbol."""


class ScaleOverflowError(PhasetomoError):
    """A known scalar factor overflows double precision at this grid extent."""

    def __init__(self, msg, safe_radius=None):
        super().__init__(msg)
        self.safe_radius = safe_radius


class DecayGateError(PhasetomoError):
    """Amplified Fourier transform does not decay; result would be distributional."""


class ConditioningError(PhasetomoError):
    """Linear solve too ill conditioned to trust."""

    def __init__(self, msg, cond=None):
        super().__init__(msg)
        self.cond = cond


class FrameRankError(PhasetomoError):
    """Sampled frame operator is rank deficient after the SVD cutoff."""

    def __init__(self, msg, achieved_rank=None, needed_rank=None):
        super().__init__(msg)
        self.achieved_rank = achieved_rank
        self.needed_rank = needed_rank


class ConvergenceError(PhasetomoError):
    """Self-check residuals too large; parameters insufficient."""

    def __init__(self, msg, residuals=None):
        super().__init__(msg)
        self.residuals = residuals


class GridError(PhasetomoError):
    """Invalid grid construction parameters."""


class SpecError(PhasetomoError):
    """Invalid deformation or kernel parameter specification."""


class BranchError(PhasetomoError):
    """No square-root branch consistent with the reference oracle."""


class ParseError(PhasetomoError):
    """CLI mini-grammar parse failure, with the offending position."""

    def __init__(self, msg, text=None, pos=None):
        super().__init__(msg)
        self.text = text
        self.pos = pos
