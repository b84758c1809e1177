"""srlab - Sharpe-ratio bandit laboratory."""

__version__ = "1.0.0"
