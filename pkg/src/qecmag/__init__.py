"""qecmag - error-correction-enhanced qubit magnetometry simulator."""

__version__ = "2026.10.19"
