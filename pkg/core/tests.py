from decimal import Decimal
from fractions import Fraction

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from core.exceptions import FarmValidationError
from core.utils import (
    UnknownUnit,
    ceil_div,
    copy_duration_us,
    fnv1a_64,
    format_us,
    parse_duration,
    round_half_up,
    to_base_units,
    u64_le,
)


class HashingUtilsTestCase(SimpleTestCase):
    """Test cases for the FNV-1a hash and key encoding."""

    def test_fnv1a_known_values(self):
        """Test FNV-1a 64 against published reference values."""
        self.assertEqual(fnv1a_64(b''), 0xCBF29CE484222325)
        self.assertEqual(fnv1a_64(b'a'), 0xAF63DC4C8601EC8C)
        self.assertEqual(fnv1a_64(b'foobar'), 0x85944171F73967E8)

    def test_fnv1a_continues_from_state(self):
        """Test that hashing in two parts equals hashing the whole message."""
        self.assertEqual(fnv1a_64(b'bar', fnv1a_64(b'foo')), fnv1a_64(b'foobar'))

    def test_u64_little_endian(self):
        """Test the eight-byte little-endian key encoding."""
        self.assertEqual(u64_le(1), b'\x01' + b'\x00' * 7)
        self.assertEqual(u64_le(0x0102), b'\x02\x01' + b'\x00' * 6)
        self.assertEqual(len(u64_le(2 ** 64 - 1)), 8)


class RoundingUtilsTestCase(SimpleTestCase):
    """Test cases for integer rounding helpers."""

    def test_ceil_div(self):
        """Test integer ceiling division."""
        self.assertEqual(ceil_div(10, 5), 2)
        self.assertEqual(ceil_div(11, 5), 3)
        self.assertEqual(ceil_div(0, 7), 0)

    def test_round_half_up(self):
        """Test that halves round away from zero for positive values."""
        self.assertEqual(round_half_up(2.5), 3)
        self.assertEqual(round_half_up(Decimal('0.5')), 1)
        self.assertEqual(round_half_up(Fraction(5, 2)), 3)
        self.assertEqual(round_half_up(Fraction(7, 3)), 2)
        self.assertEqual(round_half_up(1.49), 1)

    def test_copy_duration(self):
        """Test whole-microsecond copy durations."""
        # 10 GB at 100 MB/s
        self.assertEqual(copy_duration_us(10 ** 10, 10 ** 8), 100_000_000)
        self.assertEqual(copy_duration_us(1, 3), 333_334)


class UnitConversionTestCase(SimpleTestCase):
    """Test cases for dimensioned literals."""

    def test_time_units(self):
        """Test conversion of every time unit to microseconds."""
        self.assertEqual(to_base_units('500', 'ms', 'time'), 500_000)
        self.assertEqual(to_base_units('1', 'h', 'time'), 3_600_000_000)
        self.assertEqual(to_base_units('1.5', 'us', 'time'), 2)
        self.assertEqual(to_base_units(Decimal('0.25'), 's', 'time'), 250_000)

    def test_size_and_bandwidth_units(self):
        """Test decimal size prefixes."""
        self.assertEqual(to_base_units('10', 'GB', 'size'), 10 ** 10)
        self.assertEqual(to_base_units('100', 'MB/s', 'bandwidth'), 10 ** 8)

    def test_rates_stay_real(self):
        """Test that request rates are not rounded."""
        self.assertEqual(to_base_units('2.5', 'rps', 'rate'), 2.5)

    def test_unknown_unit(self):
        """Test that a unit from another dimension is rejected with its position."""
        with self.assertRaises(UnknownUnit) as raised:
            to_base_units('10', 'GB', 'time', line=3, column=9)
        self.assertEqual(raised.exception.unit, 'GB')
        self.assertIn('line 3, column 9', str(raised.exception))
        self.assertIsInstance(raised.exception, FarmValidationError)
        self.assertIsInstance(raised.exception, ValidationError)

    def test_parse_duration(self):
        """Test duration flags with and without a space."""
        self.assertEqual(parse_duration('3600s'), 3_600_000_000)
        self.assertEqual(parse_duration('250 ms'), 250_000)
        with self.assertRaises(ValueError):
            parse_duration('soon')
        with self.assertRaises(ValueError):
            parse_duration('10 GB')

    def test_format_us(self):
        """Test the human-readable microsecond rendering."""
        self.assertEqual(format_us(2_000_000), '2s')
        self.assertEqual(format_us(1_500), '1500us')
        self.assertEqual(format_us(3_000), '3ms')


class FarmValidationErrorTestCase(SimpleTestCase):
    """Test cases for the validation error base."""

    def test_message_and_element(self):
        """Test that the element is kept and the message is the string form."""
        error = FarmValidationError("Service 'f/s' is empty", element='f/s')
        self.assertEqual(str(error), "Service 'f/s' is empty")
        self.assertEqual(error.element, 'f/s')
        self.assertEqual(error.code, 'invalid')
