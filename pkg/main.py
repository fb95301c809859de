"""
CLI entry point for the uframe commands.
"""
import sys

from uframe.main import run

if __name__ == "__main__":
    sys.exit(run())
