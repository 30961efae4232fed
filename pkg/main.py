"""End-to-end example run: the three-direction table and the twist example."""
import logging

from stringtable.cli import configure_logging
from stringtable.config import load_config
from stringtable.pipeline import run_pipeline

CONFIGS = ["configs/three_directions.json", "configs/twist.json"]

if __name__ == "__main__":
    configure_logging()
    for path in CONFIGS:
        bundle = run_pipeline(load_config(path))
        logging.getLogger("stringtable.main").info(
            "%s: %s", bundle.config.name, "passed" if bundle.passed else "FAILED"
        )
