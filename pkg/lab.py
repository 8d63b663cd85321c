#!/usr/bin/env python3
"""
Half-plane Euler laboratory command line.

Usage:
    python lab.py verify-regions --config config/default_experiment.cfg --out out/regions
    python lab.py simulate --config config/default_experiment.cfg --deterministic
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from lab.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
