import math
import re

_MASK64 = (1 << 64) - 1


def splitmix64(value):
    """SplitMix64 finalizer: a bijection on 64-bit integers"""
    z = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed, index):
    """
    Derive the seed of replication `index` from a batch base seed.

    seed = splitmix64(base_seed XOR index). XOR is injective in the index
    and splitmix64 is a bijection, so two replications of one batch never
    share a seed. Only 64-bit integer arithmetic is involved, so the value
    is the same on every platform.

    Args:
        base_seed: Batch seed, 0 <= base_seed < 2**64
        index: Replication index, >= 0

    Returns:
        int: Derived 64-bit seed
    """
    validate_seed(base_seed)
    if index < 0:
        raise ValueError(f"Replication index must be >= 0, got {index}")
    return splitmix64((base_seed ^ index) & _MASK64)


def validate_seed(seed):
    """Validate that a seed fits an unsigned 64-bit integer"""
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed <= _MASK64:
        raise ValueError(f"Seed must be an integer in [0, 2**64), got {seed!r}")
    return seed


def validate_probability(name, value, low_open=False, high_open=False):
    """Validate that `value` lies in [0, 1], optionally excluding an end"""
    if value is None or math.isnan(value):
        raise ValueError(f"{name} must be a probability, got {value!r}")
    low_ok = value > 0.0 if low_open else value >= 0.0
    high_ok = value < 1.0 if high_open else value <= 1.0
    if not (low_ok and high_ok):
        lo = '(0' if low_open else '[0'
        hi = '1)' if high_open else '1]'
        raise ValueError(f"{name} must be in {lo}, {hi}, got {value}")
    return value


def format_float(value, digits=9):
    """Format a number for CSV output with a fixed count of significant digits"""
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if value is None:
        return 'inf'
    if isinstance(value, int):
        return str(value)
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return format(value, f'.{digits}g')


def parse_int_list(text):
    """Parse '10,20,50' into [10, 20, 50]"""
    return [int(part) for part in _split_list(text)]


def parse_float_list(text):
    """Parse '0.9,0.99,1' into [0.9, 0.99, 1.0]"""
    return [float(part) for part in _split_list(text)]


def parse_range(text):
    """
    Parse an inclusive integer range.

    Accepts 'A..B' and also a plain comma list, so '2..5' and '2,3,4,5'
    give the same result.

    Returns:
        list: Integers in the range, ascending
    """
    match = re.fullmatch(r'\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*', text)
    if match:
        start, stop = int(match.group(1)), int(match.group(2))
        if stop < start:
            raise ValueError(f"Empty range: {text}")
        return list(range(start, stop + 1))
    values = sorted(set(parse_int_list(text)))
    if not values:
        raise ValueError(f"Empty range: {text}")
    return values


def _split_list(text):
    parts = [part.strip() for part in str(text).split(',')]
    parts = [part for part in parts if part]
    if not parts:
        raise ValueError(f"Empty list: {text!r}")
    return parts
