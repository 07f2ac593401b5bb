"""Exception types shared across the package."""


class PcsKitError(Exception):
    """Base class for package-specific failures."""


class UnsupportedGateError(PcsKitError):
    """A gate kind is outside the set an operation can handle."""


class CapacityError(PcsKitError):
    """A dense computation was requested above its qubit cap."""


class CalibrationError(PcsKitError):
    """A calibration curve is unusable (too few points, degenerate range)."""


class ExecutionError(PcsKitError):
    """A simulation job failed; message carries the thread context."""


class ConfigError(PcsKitError):
    """Invalid experiment configuration.

    Carries the complete list of violations so a user can fix everything
    in one pass instead of replaying validation one field at a time.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
