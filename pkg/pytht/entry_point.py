import sys

from . import app
from ._options import Options, _log_levels, parser
from .core import ConvergenceException, ValidationException


def entry_point() -> None:
    import logging

    logging.basicConfig()
    logger = logging.getLogger(__package__)

    args = parser.parse_args(sys.argv[1:])

    # Set the level before building Options so the factory can log.
    if args.log_level != "none":
        logger.setLevel(_log_levels[args.log_level])

    try:
        options = Options.from_args(args)
        status = app.run(options)
    except ValidationException as e:
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        sys.exit(app.EXIT_INVALID)
    except ConvergenceException as e:
        print(f"{parser.prog}: did not converge: {e}", file=sys.stderr)
        sys.exit(app.EXIT_NOT_CONVERGED)

    sys.exit(status)
