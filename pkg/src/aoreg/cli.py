"""Command-line entry point.

Exit codes: 0 all checks passed, 1 at least one check failed, 2 bad
configuration or usage.
"""

import argparse
import sys

from .config import load_config
from .errors import ConfigError
from .experiment import compare_report, format_comparison, run_experiment


def build_parser():
    parser = argparse.ArgumentParser(
        prog="aoreg",
        description=(
            "Learn an optimal output-regulating controller for a linear plant "
            "from trajectory data and verify it against the model-based oracle."
        ),
    )
    parser.add_argument("--config", required=True, help="path to a JSON experiment config")
    parser.add_argument(
        "--algorithm", choices=["original", "refined", "both"], default=None,
        help="override the config's algorithm selector (default: config value, 'both')",
    )
    parser.add_argument("--seed", type=int, default=0, help="run seed (default 0)")
    parser.add_argument("--out", default="./out", help="output directory (default ./out)")
    parser.add_argument(
        "--emit-trajectory", action="store_true",
        help="also dump the exploration trajectory as trajectory.csv",
    )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, default_seed=args.seed)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    result = run_experiment(config, seed=args.seed, algorithm=args.algorithm)
    result.write(args.out, emit_trajectory=args.emit_trajectory)

    for check in result.report["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        detail = f"  ({check['detail']})" if check["detail"] else ""
        print(f"[{status}] {check['name']}{detail}")
    for warning in result.report.get("warnings", []):
        print(f"[warn] {warning}")
    try:
        print(format_comparison(compare_report(result.report)))
    except ValueError:
        pass
    print(f"outputs written to {args.out}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
