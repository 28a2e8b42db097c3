"""
Utility functions shared across the simulator: hashing, integer rounding
and unit conversion for the dimensioned literals of the scenario DSL.
"""
import re
from decimal import Decimal, ROUND_HALF_UP
from fractions import Fraction

from core.exceptions import FarmValidationError

MASK64 = 0xFFFFFFFFFFFFFFFF

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

US_PER_SECOND = 1_000_000


def fnv1a_64(data, state=FNV_OFFSET_BASIS):
    """
    FNV-1a 64-bit hash of ``data``.

    Args:
        data (bytes): Bytes to hash
        state (int): Starting state; pass a previous result to continue a
            hash over a longer message

    Returns:
        int: 64-bit hash value
    """
    for byte in data:
        state = ((state ^ byte) * FNV_PRIME) & MASK64
    return state


def u64_le(value):
    """Eight-byte little-endian encoding of a non-negative integer."""
    return (value & MASK64).to_bytes(8, 'little')


def ceil_div(numerator, denominator):
    """Integer ceiling division for non-negative operands."""
    return -(-numerator // denominator)


def round_half_up(value):
    """Round a real (int, float, Decimal or Fraction) to the nearest int, halves up."""
    if isinstance(value, Fraction):
        return (2 * value.numerator + value.denominator) // (2 * value.denominator)
    return int(Decimal(str(value)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def copy_duration_us(size_bytes, copy_rate_bps):
    """Whole microseconds needed to copy ``size_bytes`` at ``copy_rate_bps``."""
    return ceil_div(int(size_bytes) * US_PER_SECOND, int(copy_rate_bps))


# Unit tables. Sizes use decimal prefixes: 10 GB at 100 MB/s takes 100 s.
TIME_UNITS = {
    'us': 1,
    'ms': 1_000,
    's': 1_000_000,
    'min': 60_000_000,
    'h': 3_600_000_000,
}

SIZE_UNITS = {
    'B': 1,
    'KB': 10 ** 3,
    'MB': 10 ** 6,
    'GB': 10 ** 9,
    'TB': 10 ** 12,
}

BANDWIDTH_UNITS = {f'{unit}/s': factor for unit, factor in SIZE_UNITS.items()}

RATE_UNITS = {
    'rps': 1,
}

DIMENSIONS = {
    'time': TIME_UNITS,
    'size': SIZE_UNITS,
    'bandwidth': BANDWIDTH_UNITS,
    'rate': RATE_UNITS,
}


class UnknownUnit(FarmValidationError):
    """A dimensioned literal uses a unit that does not exist for its dimension."""

    default_code = 'unknown_unit'

    def __init__(self, unit, dimension, line=None, column=None):
        self.unit = unit
        self.dimension = dimension
        self.line = line
        self.column = column
        allowed = ', '.join(DIMENSIONS[dimension])
        where = f" at line {line}, column {column}" if line is not None else ''
        super().__init__(
            f"Unknown {dimension} unit '{unit}'{where}; expected one of: {allowed}",
            element=unit,
        )


def to_base_units(value, unit, dimension, line=None, column=None):
    """
    Convert a literal to the base unit of its dimension.

    Time converts to whole microseconds (round half up), sizes and bandwidths
    to whole bytes (per second), request rates stay real.

    Raises:
        UnknownUnit: If ``unit`` does not belong to ``dimension``
    """
    table = DIMENSIONS[dimension]
    if unit not in table:
        raise UnknownUnit(unit, dimension, line, column)
    scaled = Decimal(value) * table[unit]
    if dimension == 'rate':
        return float(scaled)
    return round_half_up(scaled)


_DURATION_PATTERN = re.compile(r'^\s*(\d+(?:\.\d+)?)\s*([A-Za-z]+)\s*$')


def parse_duration(text):
    """
    Parse a duration flag such as ``3600s`` or ``250 ms`` into microseconds.

    Raises:
        ValueError: If the text is not a number followed by a time unit
    """
    match = _DURATION_PATTERN.match(text)
    if not match:
        raise ValueError(f"Invalid duration '{text}'; expected e.g. 3600s or 250ms")
    number, unit = match.groups()
    if unit not in TIME_UNITS:
        raise ValueError(f"Unknown time unit '{unit}' in '{text}'")
    return to_base_units(number, unit, 'time')


def format_us(value):
    """Human readable rendering of a microsecond quantity."""
    if value % TIME_UNITS['s'] == 0:
        return f"{value // TIME_UNITS['s']}s"
    if value % TIME_UNITS['ms'] == 0:
        return f"{value // TIME_UNITS['ms']}ms"
    return f"{value}us"
