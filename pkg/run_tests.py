#!/usr/bin/env python3
"""
Master test runner for the half-plane Euler laboratory.

Runs every test script as its own process, grouped by category, and
prints a summary.
"""

import argparse
import asyncio
import sys
from datetime import datetime
from pathlib import Path

ROOT = Path(__file__).parent

UNIT_TESTS = [
    ("Regions", "tests/unit/test_regions.py"),
    ("Kernel", "tests/unit/test_kernel.py"),
    ("Estimates", "tests/unit/test_estimates.py"),
    ("Refinement", "tests/unit/test_refinement.py"),
    ("Barrier", "tests/unit/test_barrier.py"),
    ("Checkpoint", "tests/unit/test_checkpoint.py"),
    ("Simulation", "tests/unit/test_simulation.py"),
    ("Configuration", "tests/unit/test_config.py"),
    ("Reporting", "tests/unit/test_reporting.py"),
]

QUICK_TESTS = {"Refinement", "Checkpoint", "Configuration", "Reporting"}

INTEGRATION_TESTS = [
    ("Command Line", "tests/integration/test_cli.py"),
]

TIMEOUTS = {"unit": 900, "integration": 1800}


class TestRunner:
    """Runs test scripts and collects pass/fail per category."""

    def __init__(self):
        self.results = {
            "unit": {},
            "integration": {},
        }

    async def run_category(self, category: str, tests, title: str):
        print("\n" + "=" * 70)
        print(title)
        print("=" * 70)

        for name, test_file in tests:
            path = ROOT / test_file
            if path.exists():
                print(f"\n▶ Running {name}...")
                self.results[category][name] = await self._run_test(path, TIMEOUTS[category])
            else:
                print(f"⚠️  {name} not found: {test_file}")

    async def _run_test(self, test_file: Path, timeout: float) -> bool:
        """Run a single test file"""
        try:
            proc = await asyncio.create_subprocess_exec(
                sys.executable, str(test_file),
                stdout=asyncio.subprocess.PIPE,
                stderr=asyncio.subprocess.PIPE,
                cwd=str(ROOT),
            )
            try:
                stdout, stderr = await asyncio.wait_for(proc.communicate(), timeout=timeout)
            except asyncio.TimeoutError:
                proc.kill()
                await proc.wait()
                print(f"  ⏱️  TIMEOUT after {timeout:.0f}s")
                return False
        except OSError as e:
            print(f"  ❌ ERROR: {e}")
            return False

        if proc.returncode == 0:
            print("  ✅ PASSED")
            return True
        print("  ❌ FAILED")
        failures = [line for line in stdout.decode(errors="replace").splitlines() if line.startswith("✗")]
        for line in failures[:10]:
            print(f"  {line}")
        if stderr and not failures:
            print(f"  Error: {stderr.decode(errors='replace')[-400:]}")
        return False

    def print_summary(self) -> bool:
        """Print test summary"""
        print("\n" + "=" * 70)
        print("📊 TEST SUMMARY")
        print("=" * 70)

        total_passed = 0
        total_failed = 0

        for category, tests in self.results.items():
            if tests:
                print(f"\n{category.upper()}:")
                for name, passed in tests.items():
                    status = "✅ PASS" if passed else "❌ FAIL"
                    print(f"  {name}: {status}")
                    if passed:
                        total_passed += 1
                    else:
                        total_failed += 1

        total = total_passed + total_failed
        print(f"\n{'=' * 70}")
        print(f"Total: {total_passed}/{total} test files passed")

        if total_failed == 0:
            print("🎉 ALL TESTS PASSED!")
        else:
            print(f"⚠️  {total_failed} test file(s) failed")

        return total_failed == 0


async def main():
    """Main test runner"""
    parser = argparse.ArgumentParser(description="Run the half-plane Euler laboratory tests")
    parser.add_argument(
        "--category",
        choices=["unit", "integration", "all"],
        default="all",
        help="Test category to run"
    )
    parser.add_argument(
        "--quick",
        action="store_true",
        help="Run only the fast unit tests"
    )

    args = parser.parse_args()

    runner = TestRunner()

    print("\n🌀 Half-plane Euler laboratory - Test Suite")
    print(f"Started: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")

    if args.quick:
        quick = [(name, path) for name, path in UNIT_TESTS if name in QUICK_TESTS]
        await runner.run_category("unit", quick, "🧪 QUICK UNIT TESTS")
    if not args.quick and args.category in ("unit", "all"):
        await runner.run_category("unit", UNIT_TESTS, "🧪 UNIT TESTS")
    if not args.quick and args.category in ("integration", "all"):
        await runner.run_category("integration", INTEGRATION_TESTS, "🔗 INTEGRATION TESTS")

    success = runner.print_summary()

    print(f"\nCompleted: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")

    sys.exit(0 if success else 1)


if __name__ == "__main__":
    asyncio.run(main())
