"""Exception types shared across the package."""


class MfpanelError(Exception):
    """Base class for all package-specific errors."""


class IngestError(MfpanelError):
    """A price file could not be read or contains invalid rows."""


class AlignmentError(MfpanelError):
    """Series cannot be placed on a common grid (empty overlap, oversized
    gaps, or mismatched grids)."""


class DegenerateDataError(MfpanelError):
    """Input data carries no usable signal (constant prices, zero variance,
    all segments excluded)."""


class ConfigError(MfpanelError):
    """A run configuration failed schema or semantic validation."""
