from __future__ import annotations

import logging
from argparse import ArgumentParser, Namespace
from typing import Any, Dict, NamedTuple, Optional, Tuple

from .bounds import TheoremId
from .constants import (
    CURRENT_VERSION,
    DEFAULT_OUTPUT_PATH,
    PROGRAM_DESCRIPTION,
    PROGRAM_NAME,
)
from .core import Interval, ValidationException
from .formatter import registered_formatters
from .torus import DECAY_TARGETS

_log_levels = {
    "none": -100,
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warn": logging.WARN,
    "error": logging.ERROR,
    "fatal": logging.FATAL,
}

_logger = logging.getLogger(__name__)

DEFAULT_CELLS = 128

DEFAULT_DELTAS = "1e-2,1e-3,1e-4,1e-5,1e-6"


parser = ArgumentParser(
    prog=PROGRAM_NAME,
    description=PROGRAM_DESCRIPTION,
    epilog="Every run writes plot-ready data and a manifest to --out.",
)

parser.add_argument(
    "--version", "-v", action="version", version=CURRENT_VERSION,
)

parser.add_argument(
    "--log-level",
    type=str,
    choices=_log_levels.keys(),
    default="none",
    help="set the log level, no logging is done by default",
)

# ---------------------------------- #
# Options shared by every subcommand #
# ---------------------------------- #

common = ArgumentParser(add_help=False)

common.add_argument(
    "--I", dest="interval_i", type=str, default="0,1", help="support interval 'lo,hi'",
)

common.add_argument(
    "--J",
    dest="interval_j",
    type=str,
    default="2,3",
    help="measurement interval 'lo,hi'",
)

common.add_argument(
    "--cells",
    type=str,
    default=str(DEFAULT_CELLS),
    help="cells on I and J, either 'N' for both or 'NI,NJ'",
)

common.add_argument(
    "--seed", type=int, default=0, help="seed for every random draw",
)

common.add_argument(
    "--out",
    type=str,
    default=DEFAULT_OUTPUT_PATH,
    help="output directory, or ':stdout:' to print the data without a manifest",
)

common.add_argument(
    "--format",
    dest="format_name",
    type=str,
    choices=registered_formatters(),
    default=registered_formatters()[0],
    help="format of the data files",
)

subparsers = parser.add_subparsers(dest="command", required=True)

for command in ("classify", "assemble", "asymptotics"):
    subparsers.add_parser(
        command, parents=[common], help=f"{command} a pair of intervals"
    )

gram_parser = subparsers.add_parser(
    "gram", parents=[common], help="Gram matrix of cell indicators and its decay"
)
gram_parser.add_argument(
    "--n", type=int, default=3, help="number of cell indicators on I",
)
gram_parser.add_argument(
    "--raw-kernel",
    action="store_true",
    default=False,
    help="use the kernel 1/(x - y) without the 1/pi factor",
)

svd_parser = subparsers.add_parser(
    "svd", parents=[common], help="singular values and the commuting operator"
)
svd_parser.add_argument(
    "--n", type=int, default=8, help="number of singular triples",
)
svd_parser.add_argument(
    "--mu", type=float, default=0.5, help="margin of the inner window J*",
)

verify_parser = subparsers.add_parser(
    "verify", parents=[common], help="check one stability estimate on test families"
)
verify_parser.add_argument(
    "theorem", type=str, choices=[t.value for t in TheoremId], help="estimate to check",
)
verify_parser.add_argument(
    "--M", dest="power", type=int, default=1, help="power of the differential operator",
)
verify_parser.add_argument(
    "--mu", type=float, default=0.5, help="margin of the inner window J*",
)
verify_parser.add_argument(
    "--kappa", type=float, default=None, help="total variation budget",
)

reconstruct_parser = subparsers.add_parser(
    "reconstruct", parents=[common], help="TV reconstruction over noise levels"
)
reconstruct_parser.add_argument(
    "--delta-list",
    type=str,
    default=DEFAULT_DELTAS,
    help="descending noise levels, comma-separated",
)
reconstruct_parser.add_argument(
    "--kappa", type=float, default=None, help="total variation budget",
)
reconstruct_parser.add_argument(
    "--seeds", type=int, default=5, help="noise draws per level",
)

torus_parser = subparsers.add_parser(
    "torus", parents=[common], help="convolution kernel with a designed decay"
)
torus_parser.add_argument(
    "--n", type=int, default=32, help="number of Fourier modes",
)
torus_parser.add_argument(
    "--decay",
    type=str,
    choices=list(DECAY_TARGETS.keys()),
    default="exponential",
    help="profile of the kernel's Fourier coefficients",
)


def _parse_cells(text: str) -> Tuple[int, int]:
    parts = text.split(",")
    try:
        values = [int(p) for p in parts]
    except ValueError:
        raise ValidationException(f"expected 'N' or 'NI,NJ' cells, got '{text}'")
    if len(values) == 1:
        values = values * 2
    if len(values) != 2 or min(values) < 1:
        raise ValidationException(f"expected positive 'N' or 'NI,NJ', got '{text}'")
    return values[0], values[1]


def _parse_deltas(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise ValidationException(f"expected comma-separated numbers, got '{text}'")


class Options(NamedTuple):
    @staticmethod
    def from_args(args: Namespace) -> Options:
        interval_i = Interval.from_text(args.interval_i)
        interval_j = Interval.from_text(args.interval_j)
        cells_i, cells_j = _parse_cells(args.cells)
        _logger.debug(f"intervals I={interval_i}, J={interval_j}")
        _logger.debug(f"cells {cells_i}x{cells_j}")

        n: Optional[int] = getattr(args, "n", None)
        if n is not None and n < 1:
            raise ValidationException(f"--n must be positive, got {n}")

        mu: Optional[float] = getattr(args, "mu", None)
        if mu is not None and mu <= 0.0:
            raise ValidationException(f"--mu must be positive, got {mu}")

        kappa: Optional[float] = getattr(args, "kappa", None)
        if kappa is not None and kappa <= 0.0:
            raise ValidationException(f"--kappa must be positive, got {kappa}")

        theorem = getattr(args, "theorem", None)
        deltas = _parse_deltas(getattr(args, "delta_list", DEFAULT_DELTAS))
        _logger.debug(f"noise levels {deltas}")

        return Options(
            command=args.command,
            interval_i=interval_i,
            interval_j=interval_j,
            cells_i=cells_i,
            cells_j=cells_j,
            seed=args.seed,
            output=args.out,
            format_name=args.format_name,
            raw_kernel=getattr(args, "raw_kernel", False),
            log_level=args.log_level,
            n=n,
            mu=mu,
            kappa=kappa,
            power=getattr(args, "power", 1),
            theorem=TheoremId(theorem) if theorem is not None else None,
            delta_list=deltas,
            seeds=getattr(args, "seeds", 5),
            decay=getattr(args, "decay", "exponential"),
        )

    command: str

    interval_i: Interval

    interval_j: Interval

    cells_i: int

    cells_j: int

    seed: int

    output: str

    format_name: str

    raw_kernel: bool

    log_level: str

    n: Optional[int] = None

    mu: Optional[float] = None

    kappa: Optional[float] = None

    power: int = 1

    theorem: Optional[TheoremId] = None

    delta_list: Tuple[float, ...] = ()

    seeds: int = 5

    decay: str = "exponential"

    def to_json(self) -> Dict[str, Any]:
        """
        The echo of the run configuration stored in the manifest.
        """
        return {
            "command": self.command,
            "I": self.interval_i.to_json(),
            "J": self.interval_j.to_json(),
            "cells_i": self.cells_i,
            "cells_j": self.cells_j,
            "seed": self.seed,
            "output": self.output,
            "format": self.format_name,
            "raw_kernel": self.raw_kernel,
            "log_level": self.log_level,
            "n": self.n,
            "mu": self.mu,
            "kappa": self.kappa,
            "M": self.power,
            "theorem": self.theorem.value if self.theorem else None,
            "delta_list": list(self.delta_list),
            "seeds": self.seeds,
            "decay": self.decay,
        }
