#!/usr/bin/env python3
"""Run the full pipeline on the bundled mini corpus.

Equivalent to `intentflow pipeline --config data/mini/config.json`; run it
from the repository root so the relative paths in the config resolve.
"""

import sys

from intentflow.cli import main

if __name__ == "__main__":
    sys.exit(main(["pipeline", "--config", "data/mini/config.json", *sys.argv[1:]]))
