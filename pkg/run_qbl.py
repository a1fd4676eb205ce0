#!/usr/bin/env python3
"""QBL launcher — runs the `qbl` command line without installing the package."""
import os
import sys

os.environ.setdefault('PYTHONIOENCODING', 'utf-8')

from qbl.cli import main

if __name__ == "__main__":
    sys.exit(main())
