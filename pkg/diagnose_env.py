#!/usr/bin/env python3
"""Diagnostic script: effective solver configuration and numerical library versions."""

import os
import sys
from dataclasses import asdict
from pathlib import Path

from dotenv import load_dotenv

# Load environment
load_dotenv(override=False)
root_env = Path(__file__).resolve().parent / ".env"
if root_env.exists():
    load_dotenv(dotenv_path=root_env, override=False)
sys.path.insert(0, str(Path(__file__).resolve().parent))


def diagnose_libraries():
    """Check that the numerical stack imports and report versions."""
    print("=== Library Diagnostic ===\n")
    print(f"Python: {sys.version.split()[0]}")
    for name in ("numpy", "scipy", "pandas", "dotenv"):
        try:
            module = __import__(name)
            print(f"✓ {name} {getattr(module, '__version__', '(version unknown)')}")
        except ImportError:
            print(f"✗ {name} module not installed")
            print("  Install with: pip install -r requirements.txt")

    try:
        import scipy.linalg
        scipy.linalg.lapack.get_lapack_funcs("gecon")
        print("✓ LAPACK gecon available (condition estimates)")
    except Exception as e:
        print(f"✗ LAPACK gecon unavailable: {e}")


def diagnose_config():
    """Print the tolerance record as the solver will see it."""
    print("\n=== Solver Configuration ===\n")
    print(f".env at repository root: {'found' if root_env.exists() else 'not found'}")
    overrides = sorted(k for k in os.environ if k.startswith("GTARE_"))
    print(f"GTARE_* overrides: {', '.join(overrides) if overrides else '(none)'}\n")

    try:
        from src.numerics import get_tolerances
        from src.numerics.config import continuation_enabled, sim_chunk, sim_workers

        for name, value in asdict(get_tolerances()).items():
            print(f"  {name:<24} {value}")
        print(f"  {'continuation':<24} {continuation_enabled()}")
        print(f"  {'sim_workers':<24} {sim_workers()}")
        print(f"  {'sim_chunk':<24} {sim_chunk()}")
        print(f"  {'log_level':<24} {os.getenv('GTARE_LOG_LEVEL', 'WARNING')}")
    except Exception as e:
        print(f"✗ Failed to load solver configuration")
        print(f"  Error: {e}")


def diagnose_fixtures():
    """Check that the bundled fixtures parse and validate."""
    print("\n=== Bundled Fixtures ===\n")
    fixtures = Path(__file__).resolve().parent / "fixtures"
    try:
        from src.cli.problem_file import load_problem
        from src.model import validate
    except Exception as e:
        print(f"✗ Cannot import the problem loader: {e}")
        return

    for path in sorted(fixtures.glob("*_game.json")):
        try:
            problem, _ = load_problem(path, check=False)
            diagnostics = validate(problem)
            if diagnostics:
                print(f"✗ {path.name}: {'; '.join(diagnostics)}")
            else:
                print(f"✓ {path.name} (n={problem.n}, m1={problem.m1}, m2={problem.m2}, r={problem.r})")
        except Exception as e:
            print(f"✗ {path.name}: {e}")


if __name__ == "__main__":
    diagnose_libraries()
    diagnose_config()
    diagnose_fixtures()
