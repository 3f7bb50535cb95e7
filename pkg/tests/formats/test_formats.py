from fractions import Fraction

import pytest

from emergence_lab import errors, utils
from emergence_lab.certificates import apart_measure_family
from emergence_lab.formats import (
    CertificateFormat,
    EnsembleFormat,
    MeasureFormat,
    SetFormat,
    SystemFormat,
)
from emergence_lab.hyperspace import FiniteClosedSet
from emergence_lab.measures import DiscreteMeasure
from emergence_lab.serializers import to_json
from tests import data_gen


def test_system_format(golden):
    system_format = SystemFormat(data_gen.load_spec_file("golden_mean.json"))

    assert system_format.name == "system"
    assert system_format.build() == golden


def test_system_format_load(shift3):
    assert SystemFormat.load(data_gen.get_spec_path("fullshift3.json")).build() == shift3


@pytest.mark.asyncio
async def test_system_format_async_load(shift2):
    system_format = await SystemFormat.async_load(data_gen.get_spec_path("fullshift2.json"))
    assert system_format.build() == shift2


def test_system_format_equality():
    left = SystemFormat(data_gen.load_spec_file("fullshift2.json"))
    right = SystemFormat(data_gen.load_spec_file("fullshift2.json"))
    assert left == right
    assert hash(left) == hash(right)


@pytest.mark.parametrize("fname", ["not_json.json", "missing_alphabet.json"])
def test_malformed_system_files(fname):
    with pytest.raises(errors.MalformedSpecError):
        SystemFormat.load(data_gen.get_spec_path(fname))


@pytest.mark.parametrize("fname", ["bad_lambda.json", "sft_without_transitions.json"])
def test_invalid_systems(fname):
    system_format = SystemFormat.load(data_gen.get_spec_path(fname))
    with pytest.raises(errors.SystemSpecError):
        system_format.build()


def test_unknown_fields_are_rejected():
    with pytest.raises(errors.MalformedSpecError):
        SystemFormat({"type": "full_shift", "m": 2, "alphabet": "01"})


def test_only_json_spec_files():
    with pytest.raises(ValueError):
        data_gen.get_spec_path("fullshift2.yaml")


def test_measure_format(shift2):
    measure = MeasureFormat.load(data_gen.get_spec_path("measure.json")).build(shift2)
    assert measure == DiscreteMeasure.uniform(shift2, ["01", "11"])


def test_measure_format_needs_a_system():
    with pytest.raises(ValueError):
        MeasureFormat.load(data_gen.get_spec_path("measure.json")).build()


def test_measure_format_checks_words():
    with pytest.raises(errors.MalformedSpecError):
        MeasureFormat({"atoms": [{"word": "0-", "weight": "1"}]})


def test_measure_format_checks_weights(shift2):
    measure_format = MeasureFormat({"atoms": [{"word": "01", "weight": "1/3"}]})
    with pytest.raises(errors.MalformedSpecError):
        measure_format.build(shift2)


def test_set_format(shift2):
    subset = SetFormat.load(data_gen.get_spec_path("closed_set.json")).build(shift2)
    assert subset == FiniteClosedSet(["0101", "1010"], shift2)
    assert subset.is_invariant()


def test_ensemble_format(shift2):
    entries = EnsembleFormat.load(data_gen.get_spec_path("ensemble_two_orbits.json")).build(shift2)
    assert [(measure.words, Fraction(weight)) for measure, weight in entries] == [
        (["0000"], Fraction(1, 2)),
        (["1111"], Fraction(1, 2)),
    ]


def test_ensemble_format_defaults_to_uniform_weights(shift2):
    entries = EnsembleFormat.load(data_gen.get_spec_path("vx_two_orbits.json")).build(shift2)
    assert [Fraction(weight) for _, weight in entries] == [Fraction(1, 2), Fraction(1, 2)]

    ergodic = EnsembleFormat.load(data_gen.get_spec_path("ensemble_ergodic.json")).build(shift2)
    assert [Fraction(weight) for _, weight in ergodic] == [Fraction(1)]


def test_certificate_format(shift2, tmp_path):
    family = apart_measure_family(shift2, 3, Fraction(3, 10), route=utils.PERIODIC)
    path = tmp_path / "certificate.json"
    path.write_text(to_json(family))

    certificate = CertificateFormat.load(str(path)).build()
    assert certificate.witnesses == family.witnesses
    assert certificate.kind == family.kind


def test_certificate_format_rejects_missing_sections(shift2):
    data = apart_measure_family(shift2, 3, Fraction(3, 10), route=utils.PERIODIC).to_dict()
    del data["verification"]
    with pytest.raises(errors.MalformedSpecError):
        CertificateFormat(data)
