"""Exception hierarchy.

Every error raised by the library derives from :class:`QCTError`.  The three
intermediate bases map onto the command-line exit codes (config 2,
numerical 3, I/O 4).
"""


class QCTError(Exception):
    exit_code = 3


class ConfigError(QCTError, ValueError):
    exit_code = 2


class NumericalError(QCTError, ArithmeticError):
    exit_code = 3


class FieldIOError(QCTError, OSError):
    exit_code = 4


# configuration / contract violations
class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    def __init__(self, key, message=""):
        self.key = key
        super().__init__(f"{key}: {message}" if message else str(key))


class UnknownKey(ConfigError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"unknown config key {key!r}")


class BadExtents(ConfigError):
    pass


class NotPowerOfTwo(ConfigError):
    pass


class OutOfRange(ConfigError):
    pass


class GridMismatch(ConfigError):
    pass


class SupportClipped(ConfigError):
    pass


class DegenerateForce(ConfigError):
    pass


class DegenerateFilter(ConfigError):
    pass


class AllPointsOutsideGrid(NumericalError):
    pass


# numerical failures
class NonFiniteState(NumericalError):
    pass


class NonFiniteField(NumericalError):
    pass


class BoundaryMassExceeded(NumericalError):
    def __init__(self, mass, cap, t=None):
        self.mass, self.cap, self.t = mass, cap, t
        super().__init__(f"boundary mass {mass:.3e} exceeds cap {cap:.1e} at t={t}")


class HermiticityLost(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NotHyperbolic(NumericalError):
    pass


class LinearRegimeExceeded(NumericalError):
    pass


class NonChaotic(NumericalError):
    def __init__(self, message, result=None):
        self.result = result
        super().__init__(message)


class ArcBudgetExceeded(NumericalError):
    def __init__(self, message, polylines=None):
        self.polylines = polylines or []
        super().__init__(message)


class NoRoot(NumericalError):
    pass


class NoBranches(NumericalError):
    pass


class CausticUnresolved(NumericalError):
    pass


# file format
class BadMagic(FieldIOError):
    pass


class VersionMismatch(FieldIOError):
    pass
