import pytest

from app.utils import derive_seed, format_float, parse_float_list, parse_int_list, parse_range, splitmix64, validate_probability, validate_seed


def test_splitmix64_known_value():
    # Reference output of the SplitMix64 finalizer for state 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_derive_seed_is_injective_in_index():
    seeds = {derive_seed(12345, k) for k in range(10_000)}
    assert len(seeds) == 10_000


def test_derive_seed_depends_on_base():
    assert derive_seed(1, 0) != derive_seed(2, 0)
    assert derive_seed(1, 5) == derive_seed(1, 5)


@pytest.mark.parametrize('seed', [-1, 2 ** 64, 1.5, True])
def test_validate_seed_rejects(seed):
    with pytest.raises(ValueError):
        validate_seed(seed)


def test_validate_probability_open_ends():
    assert validate_probability('p', 0.0) == 0.0
    with pytest.raises(ValueError):
        validate_probability('p', 0.0, low_open=True)
    with pytest.raises(ValueError):
        validate_probability('p', 1.0, high_open=True)
    with pytest.raises(ValueError):
        validate_probability('p', float('nan'))


def test_format_float():
    assert format_float(1 / 3) == '0.333333333'
    assert format_float(None) == 'inf'
    assert format_float(float('inf')) == 'inf'
    assert format_float(True) == 'true'
    assert format_float(7) == '7'
    assert format_float(0.1 + 0.2) == '0.3'


def test_parse_lists_and_ranges():
    assert parse_int_list('10, 20,50') == [10, 20, 50]
    assert parse_float_list('0.9,1') == [0.9, 1.0]
    assert parse_range('2..5') == [2, 3, 4, 5]
    assert parse_range('5,2,3') == [2, 3, 5]
    with pytest.raises(ValueError):
        parse_range('5..2')
    with pytest.raises(ValueError):
        parse_int_list(' , ')
