"""
Main application entry point.
Configures logging and dispatches to the command-line front end.
"""
import logging
import sys

from .cli import run
from .config import Config


logging.basicConfig(
    level=getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        # stdout carries CSV/JSON artifacts
        logging.StreamHandler(sys.stderr)
    ]
)

logger = logging.getLogger(__name__)


def main():
    """Main entry point"""
    logger.debug(f"{Config.APP_NAME} v{Config.APP_VERSION}")
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
