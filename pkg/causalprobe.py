"""
causalprobe

Command-line entry point; run `python causalprobe.py --help`.
"""
import sys
from causal_probe.cli import main


if __name__ == "__main__":
    sys.exit(main())
