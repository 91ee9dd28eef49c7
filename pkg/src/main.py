import sys

from src.entrypoints.cli import main
from src.infra.adapters.logging.settings import set_up_logger


def run():
    set_up_logger()
    sys.exit(main())


if __name__ == '__main__':
    run()
