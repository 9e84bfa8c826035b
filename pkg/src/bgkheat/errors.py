class BGKHeatError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BGKHeatError, ValueError):
    pass


class DomainError(BGKHeatError, ValueError):
    pass


class ContractViolation(BGKHeatError, ValueError):
    pass


class SolverFault(BGKHeatError, RuntimeError):
    pass


class AnalysisError(BGKHeatError, RuntimeError):
    pass
