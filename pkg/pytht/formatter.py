"""
Writers for result tables. Every command produces one or more tables,
each a header describing the run plus a list of flat rows, and a
formatter turns one table into one file (or into standard output).
"""

from __future__ import annotations

import csv
import json
import sys
from typing import (
    Any,
    Callable,
    Dict,
    Iterable,
    List,
    Mapping,
    Optional,
    Protocol,
    Sequence,
    TextIO,
    Type,
)

from .constants import CSV_FLOAT_FORMAT

Row = Mapping[str, Any]

_registry: Dict[str, Type[Formatter]] = {}


class FormatterException(Exception):
    pass


def register_formatter(name: str) -> Callable[[Type[Formatter]], Type[Formatter]]:
    """
    Class decorator that makes a formatter selectable with `--format name`.
    The class is constructed with a single argument, the destination.
    """

    def _decorator(cls: Type[Formatter]) -> Type[Formatter]:
        if name in _registry:
            raise FormatterException(f"formatter '{name}' registered twice")
        cls.name = name
        _registry[name] = cls
        return cls

    return _decorator


def registered_formatters() -> List[str]:
    """
    Names of the known formatters, in registration order; the first one
    is the command line default.
    """
    return list(_registry)


def get_formatter(name: str, destination: str) -> Optional[Formatter]:
    """
    A new formatter writing to `destination`, or `None` for an unknown
    name.
    """
    cls = _registry.get(name)
    return cls(destination) if cls is not None else None


def format_value(value: Any) -> str:
    """
    The text of a single CSV cell. Floats keep every digit, so the same
    run always produces the same bytes.

    >>> format_value(0.1)
    '0.10000000000000001'
    >>> format_value(3), format_value(True), format_value(None)
    ('3', 'true', '')
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return CSV_FLOAT_FORMAT % value
    return str(value)


def _open_destination(destination: str) -> TextIO:
    if destination == ":stdout:":
        return sys.stdout
    if destination == ":stderr:":
        return sys.stderr
    return open(destination, "w", encoding="utf-8", newline="")


class Formatter:
    """
    Base class for table writers. The life cycle is `prologue(header)`,
    any number of `write(row)` calls, then `epilogue()`; subclasses fill
    in `_begin`, `_row` and `_end` and never deal with opening or closing
    the destination.
    """

    name: str = ""

    _destination: str

    _out: Optional[TextIO] = None

    _rows: int = 0

    def __init__(self, destination: str):
        self._destination = destination

    def prologue(self, header: Mapping[str, Any]) -> None:
        if self._out is not None:
            return
        self._out = _open_destination(self._destination)
        self._begin(self._out, header)

    def write(self, row: Row) -> None:
        if self._out is None:
            raise FormatterException("must call prologue() before write()")
        self._row(self._out, row)
        self._rows += 1

    def write_all(self, rows: Iterable[Row]) -> None:
        for row in rows:
            self.write(row)

    def epilogue(self) -> None:
        if self._out is None:
            raise FormatterException("must call prologue() before epilogue()")
        self._end(self._out)
        if not self._destination.startswith(":"):
            self._out.close()
        self._out = None

    def _begin(self, out: TextIO, header: Mapping[str, Any]) -> None:
        pass

    def _row(self, out: TextIO, row: Row) -> None:
        raise NotImplementedError()

    def _end(self, out: TextIO) -> None:
        pass


class CSVWriterProtocol(Protocol):
    """
    The part of `csv.writer` we use, for type annotations.
    """

    def writerow(self, row: Iterable[Any]) -> Any:
        ...


@register_formatter("csv")
class CSVFormatter(Formatter):
    """
    Comma-separated rows under a header row taken from the keys of the
    first row. The run header is not written; it belongs in the manifest.

    >>> f = CSVFormatter(":stdout:")
    >>> f.prologue({"n": 3})
    >>> f.write_all([{"index": 0, "eigenvalue": 0.25}])
    index,eigenvalue
    0,0.25
    >>> f.epilogue()
    """

    _columns: Sequence[str] = ()

    _writer: Optional[CSVWriterProtocol] = None

    def _begin(self, out: TextIO, header: Mapping[str, Any]) -> None:
        self._writer = csv.writer(out, lineterminator="\n")

    def _row(self, out: TextIO, row: Row) -> None:
        assert self._writer is not None
        columns = list(row.keys())
        if self._rows == 0:
            self._columns = columns
            self._writer.writerow(columns)
        elif columns != list(self._columns):
            raise FormatterException(
                f"row columns {columns} differ from {list(self._columns)}"
            )
        self._writer.writerow([format_value(row[c]) for c in self._columns])

    def _end(self, out: TextIO) -> None:
        self._writer = None


@register_formatter("json")
class JSONFormatter(Formatter):
    """
    One JSON object per table, `{"header": ..., "rows": [...]}`, keys in
    insertion order.

    >>> f = JSONFormatter(":stdout:")
    >>> f.prologue({"case": "Gap"})
    {"header": {"case": "Gap"}, "rows": [
    >>> f.write({"n": 1})
    {"n": 1}
    >>> f.epilogue()
    ]}
    """

    def _begin(self, out: TextIO, header: Mapping[str, Any]) -> None:
        out.write('{"header": ')
        json.dump(dict(header), out)
        out.write(', "rows": [')

    def _row(self, out: TextIO, row: Row) -> None:
        if self._rows > 0:
            out.write(", ")
        json.dump(dict(row), out)

    def _end(self, out: TextIO) -> None:
        out.write("]}\n")
