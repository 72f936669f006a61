import json

import pytest

from pytht import CSVFormatter, FormatterException, JSONFormatter
from pytht.formatter import format_value, get_formatter, registered_formatters


def test_registered_formatters():
    assert set(registered_formatters()) >= {"csv", "json"}
    assert isinstance(get_formatter("csv", ":stdout:"), CSVFormatter)
    assert get_formatter("xml", ":stdout:") is None


def test_CSVFormatter_writes_file(tmp_path):
    path = tmp_path / "eigenvalues.csv"
    formatter = CSVFormatter(str(path))
    formatter.prologue({"n": 2})
    formatter.write_all(
        [{"index": 0, "eigenvalue": 0.5}, {"index": 1, "eigenvalue": None}]
    )
    formatter.epilogue()
    assert path.read_bytes() == b"index,eigenvalue\n0,0.5\n1,\n"


def test_CSVFormatter_rejects_changing_columns(tmp_path):
    formatter = CSVFormatter(str(tmp_path / "rows.csv"))
    formatter.prologue({})
    formatter.write({"a": 1})
    with pytest.raises(FormatterException):
        formatter.write({"b": 2})
    formatter.epilogue()


def test_JSONFormatter_output_parses(tmp_path):
    path = tmp_path / "rows.json"
    formatter = JSONFormatter(str(path))
    formatter.prologue({"case": "Gap"})
    formatter.write_all([{"n": 1, "sigma": 0.5}, {"n": 2, "sigma": 0.01}])
    formatter.epilogue()
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["header"] == {"case": "Gap"}
    assert [row["n"] for row in payload["rows"]] == [1, 2]


@pytest.mark.parametrize(
    "value,text",
    [(0.25, "0.25"), (2.0, "2"), (False, "false"), ("Gap", "Gap")],
)
def test_format_value(value, text):
    assert format_value(value) == text


@pytest.mark.parametrize("cls", [CSVFormatter, JSONFormatter])
def test_Formatter_requires_prologue(cls, tmp_path):
    formatter = cls(str(tmp_path / "rows.out"))
    with pytest.raises(FormatterException):
        formatter.write({"n": 1})
    with pytest.raises(FormatterException):
        formatter.epilogue()
