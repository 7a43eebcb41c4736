"""
Make `python -m pyferry` an alias for running `pyferry`.
"""
import sys

from .entry_points.run_pyferry import run

if __name__ == "__main__":
    sys.exit(run())
