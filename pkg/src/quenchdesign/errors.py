"""Exception hierarchy shared by all modules."""


class QuenchDesignError(Exception):
    pass


class ParameterError(QuenchDesignError, ValueError):
    """Invalid argument combination (bad sector, index out of range, ...)."""


class StatisticsError(QuenchDesignError, ValueError):
    """Not enough samples or grid points for the requested estimate."""


class CapacityError(QuenchDesignError):
    """Requested dense object exceeds the supported size."""


class ConfigurationError(QuenchDesignError):
    pass


class NumericalError(QuenchDesignError, ArithmeticError):
    pass
