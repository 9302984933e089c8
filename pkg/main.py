# main.py
import logging
import sys

from config import settings
from cli.app import run_cli

# --- Logging Configuration ---
# stderr keeps stdout free for CSV and JSON-lines output.
logging.basicConfig(
    level=getattr(logging, settings.log_level.upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S',
    stream=sys.stderr,
)
logger = logging.getLogger(__name__)


# --- Main Execution Block ---
if __name__ == "__main__":
    sys.exit(run_cli(sys.argv[1:]))
