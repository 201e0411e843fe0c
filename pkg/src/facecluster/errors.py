"""Exception types shared across the package.

Argument and dimension errors raise plain ValueError; the classes here mark
failures that callers are expected to branch on (CLI exit codes, retries,
skip-and-continue loops).
"""


class FaceClusterError(Exception):
    """Base class for package-specific failures."""


class DecodeError(FaceClusterError):
    """An image payload could not be decoded."""


class DegenerateInputError(FaceClusterError):
    """Training input collapses to a single class or is otherwise unusable."""


class BoostingStalledError(FaceClusterError):
    """No weak classifier achieved weighted error below 0.5."""

    def __init__(self, round_index, best_error):
        self.round_index = round_index
        self.best_error = best_error
        super().__init__(
            f"boosting stalled at round {round_index}: "
            f"best weighted error {best_error:.6f} >= 0.5"
        )


class CascadeTrainingError(FaceClusterError):
    """A cascade stage could not reach its goals within the round budget."""

    def __init__(self, message, stage_reports=None):
        self.stage_reports = stage_reports or []
        super().__init__(message)


class UndefinedSilhouetteError(FaceClusterError):
    """Silhouette requested for a labeling with fewer than two clusters."""


class SplitError(FaceClusterError):
    """A stratified split is impossible, e.g. a class with one sample."""


class ConfigError(FaceClusterError):
    """Invalid pipeline configuration (maps to CLI exit code 1)."""
