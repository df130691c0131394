import json
import logging
import sys
from typing import List, Optional

from gwrap.api import build_parser
from gwrap.services.errors import GwrapError

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(verbose: bool = False) -> None:
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand and return its exit status.

    Domain errors become one JSON line on stderr and the error's exit
    status; argparse exits with 2 on usage errors.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except GwrapError as exc:
        logger.error(f"{args.command} failed: {exc.message}")
        print(json.dumps(exc.to_dict(), default=str), file=sys.stderr)
        return exc.exit_status


if __name__ == "__main__":
    sys.exit(main())
