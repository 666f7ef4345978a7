"""Exception hierarchy shared by all modules."""


class DomainError(ValueError):
    """Evaluation requested on a singular locus (r = 0, a pole, ...)."""


class DegenerateFrameError(DomainError):
    """The angular frame is undefined because sin(beta) vanishes."""


class PoleError(DomainError):
    """A complex seed was evaluated at one of its poles or branch points."""


class NumericError(ArithmeticError):
    """A non-finite value appeared inside an operator."""


class BackendError(ValueError):
    """The requested derivative backend cannot serve this field."""


class ConfigError(ValueError):
    """Invalid sampling plan or run configuration."""


class EmptySampleError(RuntimeError):
    """A check was asked to aggregate over zero sample points."""
