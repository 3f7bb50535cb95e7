from fractions import Fraction

import pytest

from emergence_lab.config import AVRO, Caps, RunConfig, parse_range


def test_parse_range():
    assert parse_range("2..10") == (2, 10)
    assert parse_range("3") == (3, 3)


@pytest.mark.parametrize("value", ["5..2", "a..b", ""])
def test_parse_range_errors(value):
    with pytest.raises(ValueError):
        parse_range(value)


def test_run_config_defaults():
    config = RunConfig(command="entropy")

    assert config.caps == Caps()
    assert list(config.horizons) == [1]
    assert config.eps_values(Fraction(1, 2)) == [Fraction(1, 2)]


def test_eps_values_run_coarse_to_fine():
    config = RunConfig(command="entropy", eps_exponents=(3, 1, 3))
    assert config.eps_values(Fraction(1, 3)) == [Fraction(1, 3), Fraction(1, 27)]


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_range": (0, 3)},
        {"n_range": (4, 3)},
        {"eps_exponents": ()},
        {"eps_exponents": (0, 1)},
        {"seed": -1},
        {"format": "parquet"},
        {"workers": 0},
    ],
)
def test_run_config_errors(kwargs):
    with pytest.raises(ValueError):
        RunConfig(command="entropy", **kwargs)


def test_run_config_to_dict():
    config = RunConfig(
        command="certify",
        n_range=(2, 4),
        eps_exponents=(1, 2),
        format=AVRO,
        options={"eps": Fraction(1, 4), "pair": (1, 2)},
    )
    data = config.to_dict()

    assert data["n_range"] == [2, 4]
    assert data["eps_exponents"] == [1, 2]
    assert data["format"] == "avro"
    assert data["options"] == {"eps": "1/4", "pair": [1, 2]}
    assert data["caps"]["code"] == 64
