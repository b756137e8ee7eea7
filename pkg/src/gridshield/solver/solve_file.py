"""Reference process adapter: model file in, solution file out.

Usage::

    python -m gridshield.solver.solve_file MODEL SOLUTION [--gap G] [--time-limit S]

Reads an emitted LP or MPS file, solves it with the in-process backend,
and writes the documented solution format.  Any solver can replace this
script as long as it honors the same file contract.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .backend import HighsBackend, emit_solution
from .emit import parse_model


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gridshield-solve-file",
                                     description=__doc__)
    parser.add_argument("model", help="emitted model file (lp or mps)")
    parser.add_argument("solution", help="where to write the solution file")
    parser.add_argument("--gap", type=float, default=0.0)
    parser.add_argument("--time-limit", type=float, default=None)
    args = parser.parse_args(argv)

    model = parse_model(Path(args.model).read_text(encoding="utf-8"))
    sol = HighsBackend().solve(model, gap=args.gap, time_limit=args.time_limit)
    Path(args.solution).write_text(emit_solution(sol, model), encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main())
