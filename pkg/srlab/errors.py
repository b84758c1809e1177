class SharpeLabError(Exception):
    """Base class for every error raised by srlab."""


class InvalidInstance(SharpeLabError):
    pass


class TiedOptimum(InvalidInstance):
    def __init__(self, tied_indices, sharpe):
        self.tied_indices = list(tied_indices)
        self.sharpe = sharpe
        super().__init__(
            f"Optimal Sharpe ratio {sharpe:.6g} is attained by arms {self.tied_indices}; the optimum must be unique"
        )


class EmptySample(SharpeLabError):
    pass


class InsufficientData(SharpeLabError):
    pass


class NotWarmedUp(SharpeLabError):
    pass


class InvalidReward(SharpeLabError):
    pass


class DegenerateDenominator(SharpeLabError):
    pass


class DomainError(SharpeLabError, ValueError):
    pass


class ConfigError(SharpeLabError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        self.message = message
        super().__init__(self._render())

    def _render(self):
        where = []
        if self.field:
            where.append(f"field '{self.field}'")
        if self.line is not None:
            where.append(f"(line {self.line})")
        prefix = " ".join(where)
        return f"{prefix}: {self.message}" if prefix else self.message
