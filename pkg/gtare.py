#!/usr/bin/env python3
"""
Command-line entry point.

    python gtare.py solve fixtures/three_state_game.json --trace trace.csv
    python gtare.py residual fixtures/three_state_game.json fixtures/three_state_solution.json
    python gtare.py simulate fixtures/three_state_game.json solution.json --paths 2000 --out paths.csv
    python gtare.py certificate fixtures/scalar_game.json fixtures/scalar_certificate.json
    python gtare.py validate fixtures/three_state_game.json
"""

import signal
import sys

from src.cli import main


def handle_interrupt(signum, frame):
    print("Interrupted", file=sys.stderr)
    sys.exit(128 + signum)


signal.signal(signal.SIGINT, handle_interrupt)
signal.signal(signal.SIGTERM, handle_interrupt)

if __name__ == '__main__':
    sys.exit(main())
