"""
Exact scalar parsing and formatting.

Distances are fractions.Fraction values; documents carry them as decimal
strings ("0.25") or fraction strings ("1/4").
"""

from enum import Enum
from fractions import Fraction
from typing import Any

from metric_amalgam.amalgam_logic.errors import ErrorCode, MetricError

Scalar = Fraction


def parse_scalar(value: Any) -> Fraction:
    """
    Parse a scalar from a string, int or Fraction without rounding.

    Floats are accepted through their shortest decimal representation, so
    0.1 parses as 1/10.

    :param value: Decimal string, "p/q" string, int or Fraction.
    :return: The exact Fraction.
    :raises MetricError: If the value cannot be parsed.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise MetricError(ErrorCode.INVALID_SCALAR, f"Booleans are not scalars: {value!r}", value=value)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        value = repr(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise MetricError(ErrorCode.INVALID_SCALAR, f"Cannot parse scalar: {value!r}", value=value) from e
    raise MetricError(ErrorCode.INVALID_SCALAR, f"Unsupported scalar type: {type(value).__name__}", value=str(value))


def format_scalar(value: Fraction | int) -> str:
    """
    Format a scalar as "p/q" (integers as "p").

    :param value: Exact value.
    :return: Lossless string form.
    """
    return str(Fraction(value))


def format_float(value: float) -> str:
    """
    Format a floating point value with 17 significant digits.

    :param value: Float from the cycl0 solver.
    :return: String that round-trips to the same float.
    """
    return format(float(value), ".17g")


def power_leq(card: int, coefficient: Fraction, base: Fraction, exponent: Fraction) -> bool:
    """
    Decide card <= coefficient * base ** exponent exactly for rational exponents.

    With exponent = p/q (q > 0) and all quantities positive the inequality is
    equivalent to card**q <= coefficient**q * base**p.

    :return: True if the inequality holds.
    """
    p, q = exponent.numerator, exponent.denominator
    return Fraction(card) ** q <= coefficient ** q * base ** p


def power_gap(card: int, coefficient: Fraction, base: Fraction, exponent: Fraction) -> Fraction:
    """
    Exact signed gap card**q - coefficient**q * base**p for exponent = p/q.

    Equals card - coefficient * base**exponent when the exponent is an integer;
    in general it has the same sign.
    """
    p, q = exponent.numerator, exponent.denominator
    return Fraction(card) ** q - coefficient ** q * base ** p


def to_jsonable(value: Any) -> Any:
    """
    Convert report payloads to JSON-ready values.

    Fractions become "p/q" strings, floats 17-digit strings, enums their value;
    containers are converted recursively and objects with to_dict() use it.
    """
    if isinstance(value, bool) or value is None or isinstance(value, (str, int)):
        return value
    if isinstance(value, Fraction):
        return format_scalar(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    return str(value)
