# Exception hierarchy
# Topological Portfolio Strategy
#
# Every failure the pipeline can report is a PortfolioError. Input and
# configuration problems are InputErrors and map to exit code 2 on the CLI.


class PortfolioError(Exception):
    """Base class for all pipeline errors"""
    exit_code = 1


class InputError(PortfolioError):
    """Bad input data or configuration"""
    exit_code = 2


class ConfigError(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f'line {line}: {message}'
        super().__init__(message)


class ValidationError(InputError):
    pass


class EmptyUniverseError(InputError):
    pass


class EmptyScheduleError(InputError):
    pass


class ContractError(PortfolioError):
    pass


class DegenerateSampleError(PortfolioError):
    pass


class DegenerateSeriesError(PortfolioError):
    def __init__(self, ticker):
        self.ticker = ticker
        super().__init__(f'zero variance in window for {ticker}')


class TrivialGraphError(PortfolioError):
    pass


class InsufficientTrackError(PortfolioError):
    pass


class UnknownNodeError(PortfolioError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class DivergentEstimateError(PortfolioError):
    pass


class SelectionInfeasibleError(PortfolioError):
    pass


class InsufficientWindowError(PortfolioError):
    pass


class UndefinedRatioError(PortfolioError):
    pass


class RegimeContradictionError(PortfolioError):
    pass


class HorizonRangeError(PortfolioError):
    pass


class InsufficientDataError(PortfolioError):
    pass


class DegenerateAnovaError(PortfolioError):
    pass


class DegenerateSharpeError(PortfolioError):
    pass
