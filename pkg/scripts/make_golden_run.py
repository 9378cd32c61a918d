#!/usr/bin/env python3
"""Regenerate tests/data/golden_convergence.csv from the reference scenario.

Run this only when an intentional behavior change invalidates the pinned
trace; the replay test compares bytes, so any diff should be reviewed.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from helpers import GOLDEN_CSV_PATH, golden_run_state  # noqa: E402

import latentqubo as lq  # noqa: E402


def main() -> None:
    state = golden_run_state()
    GOLDEN_CSV_PATH.parent.mkdir(parents=True, exist_ok=True)
    lq.write_convergence_csv(state.history, GOLDEN_CSV_PATH)
    last = state.history[-1]
    print(f"wrote {GOLDEN_CSV_PATH} ({len(state.history)} iterations, "
          f"final running max {last.running_max_fom:.6f})")


if __name__ == "__main__":
    main()
