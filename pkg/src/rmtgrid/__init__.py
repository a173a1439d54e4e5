"""Linear-eigenvalue-statistic indicators for power-grid situation awareness."""

__version__ = "0.1.0"
