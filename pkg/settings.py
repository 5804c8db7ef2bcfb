import os
import logging
from dotenv import load_dotenv
from pythonjsonlogger import jsonlogger

# Load environment variables
load_dotenv()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

MH_THREADS = max(1, int(os.getenv("MH_THREADS", str(os.cpu_count() or 1))))
MH_LOG_LEVEL = os.getenv("MH_LOG_LEVEL", "INFO").upper()
MH_LOG_JSON = os.getenv("MH_LOG_JSON", "0") == "1"
MH_OUT_DIR = os.getenv("MH_OUT_DIR", "out")
MH_SEED = int(os.getenv("MH_SEED", "20240607"))


def configure_logging(level: str = None) -> None:
    """Install the root handler once; JSON records when MH_LOG_JSON=1"""
    root = logging.getLogger()
    if getattr(configure_logging, "_done", False):
        return
    handler = logging.StreamHandler()
    if MH_LOG_JSON:
        handler.setFormatter(jsonlogger.JsonFormatter(LOG_FORMAT))
    else:
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level or MH_LOG_LEVEL)
    configure_logging._done = True
