"""
These tests run the command line tool in a subprocess. They are not
intended to be comprehensive, more of a smoke test to ensure that we
haven't broken the subcommands, the output files or the exit codes.

Keep the meshes small so the whole module runs in a few seconds.
"""

import csv
import json
import subprocess as sp
import sys
from typing import NamedTuple

import pytest

from pytht.constants import CURRENT_VERSION, PROGRAM_NAME


class Return(NamedTuple):
    stdout: str
    stderr: str
    status: int


def runit(*args: str) -> Return:
    """
    Run the command line tool with the provided command line arguments,
    using the interpreter that runs the tests.
    """
    result = sp.run(
        [sys.executable, "-m", PROGRAM_NAME] + list(args),
        capture_output=True,
        encoding="utf-8",
        text=True,
    )
    return Return(
        stdout=result.stdout, stderr=result.stderr, status=result.returncode,
    )


@pytest.mark.subprocess
def test_cli_version() -> None:
    ret = runit("--version")
    assert ret.status == 0
    assert ret.stdout.strip() == f"{CURRENT_VERSION}"


@pytest.mark.subprocess
def test_cli_classify_to_stdout() -> None:
    ret = runit("classify", "--format", "json", "--out", ":stdout:")
    assert ret.status == 0
    payload = json.loads(ret.stdout)
    assert payload["header"]["case"] == "Gap"
    row = payload["rows"][0]
    assert [row[f"a{k}"] for k in range(1, 5)] == [-3.0, -2.0, -1.0, 0.0]
    assert row["reflected"] is True


@pytest.mark.subprocess
def test_cli_negative_interval() -> None:
    ret = runit("classify", "--I=-1,0", "--J=-0.5,2", "--out", ":stdout:")
    assert ret.status == 0
    assert "Overlap" in ret.stdout


@pytest.mark.subprocess
def test_cli_gram_writes_manifest(tmp_path) -> None:
    ret = runit("gram", "--n", "3", "--raw-kernel", "--out", str(tmp_path))
    assert ret.status == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["program"] == PROGRAM_NAME
    assert manifest["version"] == CURRENT_VERSION
    assert manifest["command"] == "gram"
    names = [entry["file"] for entry in manifest["files"]]
    assert names == ["gram-eigenvalues.csv", "gram-worst.csv"]
    with open(tmp_path / "gram-eigenvalues.csv", encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 3
    assert float(rows[-1]["eigenvalue"]) == pytest.approx(0.28, rel=0.05)


@pytest.mark.subprocess
def test_cli_torus(tmp_path) -> None:
    ret = runit("torus", "--n", "8", "--decay", "polynomial", "--out", str(tmp_path))
    assert ret.status == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["files"][0]["header"]["preferred"] == "polynomial"


@pytest.mark.slow
@pytest.mark.subprocess
def test_cli_reconstruct_sweep(tmp_path) -> None:
    ret = runit("reconstruct", "--format", "json", "--out", str(tmp_path))
    assert ret.status == 0
    payload = json.loads(
        (tmp_path / "reconstruct-diameter.json").read_text(encoding="utf-8")
    )
    header, rows = payload["header"], payload["rows"]
    assert header["pearson"] >= 0.8
    assert header["all_within_bound"] is True
    medians = [row["median_error"] for row in rows]
    assert all(a > b for a, b in zip(medians, medians[1:]))
    assert all(row["converged"] for row in rows)


@pytest.mark.subprocess
@pytest.mark.parametrize(
    "args",
    [
        ("classify", "--I", "1,0"),
        ("classify", "--I", "0,1,2"),
        ("gram", "--n", "0"),
        ("svd", "--cells", "0"),
        ("classify", "--raw-kernel"),
        ("verify", "polydecay", "--raw-kernel"),
    ],
)
def test_cli_rejects_invalid_input(args) -> None:
    ret = runit(*args, "--out", ":stdout:")
    assert ret.status == 2
    assert f"{PROGRAM_NAME}: error:" in ret.stderr
