from fractions import Fraction

from emergence_lab import checks
from emergence_lab.measures import DiscreteMeasure


def test_holder_checks_on_diracs(dirac):
    report = checks.CheckReport(suite="metric")
    checks.holder_checks(report, dirac("00"), dirac("01"))

    assert report.ok
    assert report.checked["holder_lower"] == 3
    assert report.checked["prokhorov_upper"] == 3


def test_report_records_violations():
    report = checks.CheckReport(suite="metric", seed=1)
    report.record("always", True)
    report.record("never", False, detail="x")

    assert not report.ok
    assert report.checked == {"always": 1, "never": 1}
    assert report.to_dict()["violations"] == [{"check": "never", "detail": "x"}]


def test_merge_reports():
    left = checks.CheckReport(suite="metric")
    left.record("a", True)
    right = checks.CheckReport(suite="oracle")
    right.record("a", True)
    right.record("b", False)

    left.merge(right)
    assert left.checked == {"a": 2, "b": 1}
    assert len(left.violations) == 1


def test_dynamical_checks(shift2):
    report = checks.CheckReport(suite="metric")
    mu = DiscreteMeasure.uniform(shift2, ["0010", "0111"])
    nu = DiscreteMeasure.from_words(shift2, {"0011": Fraction(1, 3), "1100": Fraction(2, 3)})
    checks.dynamical_measure_checks(report, mu, nu, 3)
    assert report.ok


def test_hausdorff_checks(closed_set):
    report = checks.CheckReport(suite="metric")
    checks.hausdorff_checks(report, closed_set("0010", "0111"), closed_set("0011", "1100"), 2)
    assert report.ok
    assert report.checked == {"orbit_hausdorff_lower": 1, "orbit_hausdorff_upper": 1}


def test_metric_suite():
    report = checks.metric_suite(pairs=20, seed=5)
    assert report.ok
    assert report.checked["holder_lower"] == 60


def test_oracle_suite():
    report = checks.oracle_suite(instances=40, seed=5)
    assert report.ok
    assert report.checked["closed_form"] == 40


def test_quantization_suite():
    report = checks.quantization_suite(seed=2, nested=5, periodic=3, max_n=4)
    assert report.ok
    assert report.checked["nested_monotone"] == 5
    assert report.checked["ergodic_emergence"] == 3
