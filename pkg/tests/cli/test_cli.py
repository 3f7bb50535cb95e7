import csv
import json
import math

import pytest

from emergence_lab import errors, utils
from emergence_lab.cli import main
from emergence_lab.serializers import read_avro_cells
from tests import data_gen

SHIFT2 = data_gen.get_spec_path("fullshift2.json")


def run(*args: str) -> int:
    return main(list(args))


def read_rows(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def test_entropy(tmp_path, capsys):
    code = run("entropy", "--system", SHIFT2, "--n", "1..4", "--eps-exp", "1..2", "-o", str(tmp_path))

    assert code == utils.EXIT_OK
    assert len(read_rows(tmp_path / "entropy.csv")) == 8
    summary = json.loads((tmp_path / "entropy-summary.json").read_text())
    # S(f, n, 1) = 1 for every n
    assert summary["single_log"][1]["exact_ratio"] == "2/1"
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["artifacts"] == ["entropy-summary.json", "entropy.csv"]
    assert manifest["config"]["n_range"] == [1, 4]
    assert "reference=0.693147" in capsys.readouterr().out


def test_entropy_avro(tmp_path):
    code = run("entropy", "--system", SHIFT2, "--n", "2..3", "--format", "avro", "-o", str(tmp_path))

    assert code == utils.EXIT_OK
    records = read_avro_cells(str(tmp_path / "entropy.avro"))
    assert [record["n"] for record in records] == [2, 3, 2, 3, 2, 3, 2, 3]


def test_unknown_command():
    assert run("entropie") == utils.EXIT_USAGE
    assert run("certify", "nope") == utils.EXIT_USAGE


@pytest.mark.parametrize(
    "args",
    [
        ("entropy",),
        ("entropy", "--system", "/does/not/exist.json"),
        ("entropy", "--system", SHIFT2, "--n", "5..2"),
        ("entropy", "--system", SHIFT2, "--seed", "-1"),
        ("entropy", "--system", SHIFT2, "--mode", "nope"),
    ],
)
def test_usage_errors(args, tmp_path):
    assert run(*args, "-o", str(tmp_path)) == utils.EXIT_USAGE


@pytest.mark.parametrize(
    "fname", ["not_json.json", "missing_alphabet.json", "bad_lambda.json", "sft_without_transitions.json"]
)
def test_malformed_system(fname, tmp_path):
    code = run("entropy", "--system", data_gen.get_spec_path(fname), "-o", str(tmp_path))
    assert code == utils.EXIT_MALFORMED_SPEC


def test_certify_then_verify(tmp_path, capsys):
    certify_dir, verify_dir = tmp_path / "certify", tmp_path / "verify"
    code = run("certify", "periodic", "--system", SHIFT2, "--n", "3", "--eps", "3/10", "-o", str(certify_dir))
    assert code == utils.EXIT_OK

    certificate = json.loads((certify_dir / "certificate.json").read_text())
    assert certificate["kind"] == utils.APART_MEASURES
    assert len(certificate["witnesses"]) == 6
    assert certificate["scale"] == {"n": 3, "epsilon": "3/10"}

    code = run("verify", str(certify_dir / "certificate.json"), "-o", str(verify_dir))
    assert code == utils.EXIT_OK
    assert json.loads((verify_dir / "verification.json").read_text()) == {
        "kind": utils.APART_MEASURES,
        "ok": True,
        "pairs": 15,
    }
    assert "15 pairs verified" in capsys.readouterr().out


def test_tampered_certificate(tmp_path, capsys):
    run("certify", "periodic", "--system", SHIFT2, "--n", "3", "--eps", "3/10", "-o", str(tmp_path))
    path = tmp_path / "certificate.json"
    certificate = json.loads(path.read_text())
    # nudge one weight by 1/1000
    certificate["witnesses"][0]["atoms"][0]["weight"] = "1001/1000"
    path.write_text(json.dumps(certificate))

    assert run("verify", str(path), "-o", str(tmp_path / "verify")) == utils.EXIT_VERIFICATION_FAILED
    err = capsys.readouterr().err
    assert "verification failed" in err
    assert "first failing pair: 0 1" in err


def test_certify_hamming(tmp_path):
    code = run(
        "certify", "hamming", "--system", SHIFT2, "--n", "3", "--eps", "3/10", "--code-cap", "8", "-o", str(tmp_path)
    )
    assert code == utils.EXIT_OK
    certificate = json.loads((tmp_path / "certificate.json").read_text())
    assert certificate["kind"] == utils.SEPARATED_MEASURES
    assert certificate["scale"]["epsilon"] == "3/40"
    assert certificate["metadata"]["code_length"] == 8


def test_certify_split_sets(tmp_path):
    code = run(
        "certify",
        "hyperspace",
        "--system",
        SHIFT2,
        "--n",
        "5",
        "--eps",
        "3/10",
        "--direction",
        "split",
        "--code-cap",
        "8",
        "-o",
        str(tmp_path),
    )
    assert code == utils.EXIT_OK
    certificate = json.loads((tmp_path / "certificate.json").read_text())
    assert certificate["kind"] == utils.SPLIT_SETS
    assert certificate["metadata"]["invariant"] is True


def test_certify_with_a_small_base(tmp_path, capsys):
    code = run("certify", "hyperspace", "--system", SHIFT2, "--n", "1", "--eps", "1/2", "-o", str(tmp_path))
    assert code == utils.EXIT_VERIFICATION_FAILED
    assert "too small" in capsys.readouterr().err


def test_metric_check(tmp_path):
    code = run(
        "metric-check", "--pairs", "5", "--instances", "5", "--suite", "metric", "--suite", "oracle",
        "-o", str(tmp_path),
    )
    assert code == utils.EXIT_OK
    report = json.loads((tmp_path / "metric-check.json").read_text())
    assert report["violations"] == []
    assert report["suite"] == "metric+oracle"


def test_quantize(tmp_path):
    code = run(
        "quantize",
        "--system",
        SHIFT2,
        "--ensemble",
        data_gen.get_spec_path("ensemble_two_orbits.json"),
        "--n",
        "1..2",
        "--eps-exp",
        "3..3",
        "-o",
        str(tmp_path),
    )
    assert code == utils.EXIT_OK
    assert [row["upper"] for row in read_rows(tmp_path / "quantize.csv")] == ["2", "2"]


def test_pointwise_static(tmp_path, capsys):
    code = run(
        "pointwise",
        "--system",
        SHIFT2,
        "--vx",
        data_gen.get_spec_path("vx_two_orbits.json"),
        "--static",
        "--eps-exp",
        "1..2",
        "-o",
        str(tmp_path),
    )
    assert code == utils.EXIT_OK
    rows = read_rows(tmp_path / "pointwise.csv")
    assert [row["upper"] for row in rows] == ["1", "2"]
    assert [row["lower"] for row in rows] == ["1", "2"]
    assert [row["exact"] for row in rows] == ["True", "True"]
    assert "E_x=2 lower=2" in capsys.readouterr().out


def test_order_hyperspace(tmp_path):
    code = run(
        "order-hyperspace", "--system", SHIFT2, "--n", "1..2", "--eps-exp", "2..2", "--samples", "5",
        "-o", str(tmp_path),
    )
    assert code == utils.EXIT_OK
    rows = read_rows(tmp_path / "order-hyperspace.csv")
    assert [row["base"] for row in rows] == ["4", "8"]
    assert float(rows[1]["log_base_float"]) == pytest.approx(math.log(8))
    assert float(rows[0]["double_log_lower_float"]) == 0


def test_order_measures(tmp_path):
    code = run(
        "order-measures", "--system", SHIFT2, "--n", "1..2", "--eps-exp", "1..1", "--samples", "2", "-o", str(tmp_path)
    )
    assert code == utils.EXIT_OK
    assert len(read_rows(tmp_path / "order-measures.csv")) == 2


def test_metric_order_points(tmp_path):
    code = run("metric-order", "--system", SHIFT2, "--space", "points", "--eps-exp", "1..3", "-o", str(tmp_path))
    assert code == utils.EXIT_OK
    assert len(read_rows(tmp_path / "box-dimension.csv")) == 3
    assert (tmp_path / "metric-order-summary.json").exists()


def test_resource_cap(tmp_path, mocker):
    mocker.patch(
        "emergence_lab.certificates.build_half_weight_code",
        side_effect=errors.ResourceLimitError("code length 16 exceeds the cap 8"),
    )
    code = run("certify", "hamming", "--system", SHIFT2, "--n", "3", "--eps", "3/10", "-o", str(tmp_path))
    assert code == utils.EXIT_RESOURCE_CAP
    assert not (tmp_path / "certificate.json").exists()


def test_entropy_is_byte_identical_across_runs(tmp_path):
    for name in ("first", "second"):
        args = ("entropy", "--system", SHIFT2, "--n", "1..3", "--eps-exp", "1..2", "--mode", "mean", "--seed", "7")
        assert run(*args, "-o", str(tmp_path / name)) == utils.EXIT_OK

    for artifact in ("entropy.csv", "entropy-summary.json"):
        assert (tmp_path / "first" / artifact).read_bytes() == (tmp_path / "second" / artifact).read_bytes()


@pytest.mark.parametrize(
    "caps",
    [
        ("--strategy", "exact", "--exact-cap", "2"),
        ("--enum-cap", "2"),
    ],
)
def test_entropy_caps(caps, tmp_path, capsys):
    code = run(
        "entropy", "--system", SHIFT2, "--mode", "mean", "--n", "1..1", "--eps-exp", "1..1", *caps, "-o", str(tmp_path)
    )
    assert code == utils.EXIT_RESOURCE_CAP
    assert "ResourceLimitError" in capsys.readouterr().err
    assert not (tmp_path / "entropy.csv").exists()


def test_grid_cap_falls_back_to_the_closed_form_bound(tmp_path):
    code = run(
        "order-measures", "--system", SHIFT2, "--n", "1..1", "--eps-exp", "1..1", "--samples", "2", "--grid-cap", "10",
        "-o", str(tmp_path),
    )
    assert code == utils.EXIT_OK
    (row,) = read_rows(tmp_path / "order-measures.csv")
    assert row["upper"] == ""
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["caps"]["grid"] == 10


def test_certify_respects_the_enumeration_cap(tmp_path):
    code = run(
        "certify", "periodic", "--system", SHIFT2, "--n", "3", "--eps", "3/10", "--enum-cap", "2", "-o", str(tmp_path)
    )
    assert code == utils.EXIT_RESOURCE_CAP
