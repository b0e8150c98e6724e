"""Small argument checks shared by the model, simulator and CLI."""
import math
import numbers


class InvalidParameters(ValueError):
    """Raised when inputs violate a documented precondition."""


class UnsupportedConfiguration(ValueError):
    """Raised for configurations outside the range the model covers."""


def check_positive(name, value, allow_inf=False):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise InvalidParameters(f"{name} must be a real number, got {value!r}")
    if math.isnan(value) or value <= 0:
        raise InvalidParameters(f"{name} must be > 0, got {value!r}")
    if math.isinf(value) and not allow_inf:
        raise InvalidParameters(f"{name} must be finite, got {value!r}")
    return value


def check_nonneg(name, value):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise InvalidParameters(f"{name} must be a real number, got {value!r}")
    if math.isnan(value) or value < 0 or math.isinf(value):
        raise InvalidParameters(f"{name} must be finite and >= 0, got {value!r}")
    return value


def check_int(name, value, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise InvalidParameters(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise InvalidParameters(f"{name} must be >= {minimum}, got {value}")
    return value


def check_fraction(name, value, open_low=True, open_high=True):
    check_nonneg(name, value)
    lo_bad = value <= 0 if open_low else value < 0
    hi_bad = value >= 1 if open_high else value > 1
    if lo_bad or hi_bad:
        raise InvalidParameters(f"{name} must lie in the unit interval, got {value!r}")
    return value
