"""Run every numerical verification suite and print one line per check."""

from __future__ import annotations

import sys

from fracinv.cli import main

if __name__ == "__main__":
    sys.exit(main(["verify", *sys.argv[1:]]))
