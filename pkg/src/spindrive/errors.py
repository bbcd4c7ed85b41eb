"""Exception types shared across the toolkit."""


class SpindriveError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SpindriveError, ValueError):
    """Invalid configuration or domain input (CLI exit code 2)."""


class IntegrationError(SpindriveError, RuntimeError):
    """Adaptive integrator failed (step-size underflow or non-finite state).

    Carries the time actually reached before the failure.
    """

    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (integration reached t={t_reached:.6g})")
        self.t_reached = float(t_reached)


class TrainingDivergedError(SpindriveError, RuntimeError):
    """Non-finite loss encountered during training; carries the epoch index."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = int(epoch)


class DataIntegrityError(SpindriveError, RuntimeError):
    """Stored dataset failed hash verification; names the offending file."""
