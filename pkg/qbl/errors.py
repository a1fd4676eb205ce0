"""Exception hierarchy for qbl.

Every error carries the name of the module that raised it so the experiment
runner can report provenance in ``manifest.json``.
"""
from typing import Optional


class QBLError(Exception):
    """Base class for all analyzer failures."""

    exit_code = 3

    def __init__(self, message: str, module: Optional[str] = None):
        super().__init__(message)
        self.module = module or "qbl"


class ConfigError(QBLError):
    """Unknown experiment, missing parameter or otherwise unusable config."""

    exit_code = 2


class StructureError(QBLError):
    """A matrix or state violates the Nambu structure it is supposed to carry."""


class SpecError(QBLError):
    """A ModelSpec is physically inconsistent (Delta > J, kappa <= 0, ...)."""


class NumericalError(QBLError):
    """A numerical procedure failed or its result is not trustworthy."""


class BandTrackingError(NumericalError):
    """Adjacent-k eigenvector overlaps gave no dominant band assignment."""
