class TricodeError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(TricodeError, ValueError):
    pass


class RegionGeometryError(TricodeError, ValueError):
    pass


class AnalysisError(TricodeError):
    pass


class InsufficientDataError(AnalysisError, ValueError):
    pass


class NoOverlapError(AnalysisError):
    pass


class FitFailure(AnalysisError):
    """Optimizer gave up; ``best`` holds the best parameters seen."""

    def __init__(self, message, best=None, quality=None):
        super().__init__(message)
        self.best = best
        self.quality = quality
