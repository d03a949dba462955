"""Run the acceptance suite and print only the per-criterion summary.

    python3 scripts/run_acceptance.py [-k AC6]
"""
import subprocess
import sys
from pathlib import Path

root = Path(__file__).resolve().parents[1]
cmd = [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
       str(root / "tests" / "test_acceptance.py"), *sys.argv[1:]]
proc = subprocess.run(cmd, cwd=root, capture_output=True, text=True)
lines = proc.stdout.splitlines()
start = next((i for i, ln in enumerate(lines) if "acceptance criteria" in ln), None)
print("\n".join(lines[start:] if start is not None else lines[-20:]))
sys.exit(proc.returncode)
