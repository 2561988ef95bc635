"""Exception types shared across the package."""


class SingmosError(Exception):
    """Base class for every error this package raises on purpose."""


class DimensionError(SingmosError):
    """Shape mismatch; the message names the offending axis."""


class DomainError(SingmosError):
    """Value outside the mathematical domain of an operation."""


class ConfigurationError(SingmosError):
    """Invalid model or training configuration."""


class FormatError(SingmosError):
    """File does not carry the expected magic bytes or version."""


class CorruptionError(SingmosError):
    """Structurally broken file contents; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class ValidationError(SingmosError):
    """Semantically invalid input data (bad label row, duplicate id, ...)."""


class DataConsistencyError(SingmosError):
    """Labels and embedding tables disagree (missing clip, wrong dim)."""


class NumericDivergenceError(SingmosError):
    """Training produced a non-finite loss value."""

    def __init__(self, message: str, epoch: int, batch: int):
        super().__init__(f"{message} (epoch {epoch}, batch {batch})")
        self.epoch = epoch
        self.batch = batch
