import logging
import sys
import os
from datetime import datetime
from dotenv import load_dotenv

load_dotenv()

root = logging.getLogger()
root.setLevel(os.getenv("OCULOFILT_LOG_LEVEL", "INFO").upper())

# stdout may carry CSV output, so log records go to stderr
if not any(getattr(h, "_oculofilt", False) for h in root.handlers):
    handler = logging.StreamHandler(sys.stderr)
    formatter = logging.Formatter('[%(asctime)s] %(lineno)d %(name)s - %(levelname)s - %(message)s')
    handler.setFormatter(formatter)
    handler._oculofilt = True
    root.addHandler(handler)

    # Per-run log file, only when asked for
    log_dir = os.getenv("OCULOFILT_LOG_DIR")
    if log_dir:
        LOG_FILE = f"{datetime.now().strftime('%m_%d_%Y_%H_%M_%S')}.log"
        os.makedirs(log_dir, exist_ok=True)
        LOG_FILE_PATH = os.path.join(log_dir, LOG_FILE)
        file_handler = logging.FileHandler(LOG_FILE_PATH)
        file_handler.setFormatter(logging.Formatter("[ %(asctime)s] %(lineno)d %(name)s - %(levelname)s - %(message)s"))
        file_handler._oculofilt = True
        root.addHandler(file_handler)
