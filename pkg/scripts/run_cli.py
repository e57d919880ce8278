#!/usr/bin/env python3
"""Development runner for the qgspec command line."""

import sys

from qgspec.cli import main

if __name__ == "__main__":
    sys.exit(main())
