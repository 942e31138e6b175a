#!/usr/bin/env python3
"""Simple test runner for the Raman qubit simulator.

``python run_tests.py`` runs the fast suite; ``python run_tests.py --slow``
adds the end-to-end physics checks.
"""

import subprocess
import sys
from pathlib import Path


def main():
    """Run all tests."""
    slow = "--slow" in sys.argv[1:]
    print("Running raman-qubit tests" + (" (including slow acceptance runs)..." if slow else "..."))

    # Add current directory to Python path
    sys.path.insert(0, str(Path(__file__).parent))

    command = [sys.executable, "-m", "pytest", "tests/", "-v", "--tb=short"]
    if slow:
        command += ["-m", "slow or not slow"]

    try:
        result = subprocess.run(command, capture_output=True, text=True)
    except OSError as e:
        print(f"Error running tests: {e}")
        return 1

    if result.returncode == 0:
        print("All tests passed!")
        print(result.stdout)
        return 0

    print("Some tests failed:")
    print(result.stdout)
    print(result.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
