"""Command line entry point.

Exit status: 0 ran (and certified, when a verdict was requested), 1 ran but
not certified, 2 runtime failure (bad scenario, overflow).
"""
import argparse
import sys
from pathlib import Path

from .linalg import NumericalFailure
from .scenario import (COMMANDS, EXIT_FAILURE, PRESETS, ScenarioError, parse_scenario,
                       preset_scenario, run_scenario, summary_json)

# flag dest -> scenario key
_OVERRIDES = {
    "set": "set",
    "alpha": "alpha",
    "norm": "norm",
    "dt": "dt",
    "t_end": "t_end",
    "epsilon": "epsilon",
    "delta1": "delta1",
    "delta2": "delta2",
    "margin": "max_total_margin",
    "sweep_count": "sweep_count",
    "out_trajectory": "out_trajectory",
    "out_indicator": "out_indicator",
    "out_summary": "out_summary",
}


def _common(parser):
    parser.add_argument("--scenario", type=Path, help="scenario file (key = value lines)")
    parser.add_argument("--out-trajectory", help="trajectory CSV path")
    parser.add_argument("--out-indicator", help="indicator CSV path")
    parser.add_argument("--out-summary", help="JSON summary path (default: stdout only)")
    parser.add_argument("--norm", choices=["l1", "max", "l2"])
    parser.add_argument("--dt")
    parser.add_argument("--t-end")
    parser.add_argument("--epsilon")
    parser.add_argument("--delta1")
    parser.add_argument("--delta2")
    parser.add_argument("--margin", help="demand indicator values below -margin")
    parser.add_argument("--sweep-count")
    parser.add_argument("--set", help="fig1 parameter set (1 or 2)")
    parser.add_argument("--alpha", help="fig2 scale of A(t)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="voltstab",
        description="Solve linear Volterra IE/IDE systems and certify stability "
                    "with logarithmic-norm indicators.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "integrate and write the trajectory",
        "indicate": "evaluate the stability indicator only",
        "certify": "trajectory, indicator and verdict",
        "sweep": "integrate from points on the unit sphere",
    }
    for name in COMMANDS:
        _common(sub.add_parser(name, help=helps[name]))
    rep = sub.add_parser("reproduce", help="run a preset experiment")
    rep.add_argument("preset", choices=sorted(PRESETS))
    _common(rep)
    return parser


def _write(path, text):
    if path and text is not None:
        Path(path).write_text(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {key: getattr(args, dest) for dest, key in _OVERRIDES.items()}
    try:
        if args.command == "reproduce":
            if args.scenario is not None:
                raise ScenarioError("scenario", "reproduce takes its scenario from the preset")
            scenario = preset_scenario(args.preset, overrides)
            command = "certify"
        else:
            text = args.scenario.read_text() if args.scenario else ""
            scenario = parse_scenario(text, overrides)
            command = args.command
        output = run_scenario(scenario, command)
    except (ScenarioError, OSError) as exc:
        print(f"voltstab: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (ValueError, NumericalFailure) as exc:
        print(f"voltstab: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    _write(scenario.out_trajectory, output.trajectory_csv)
    _write(scenario.out_indicator, output.indicator_csv)
    text = summary_json(output.summary)
    _write(scenario.out_summary, text + "\n")
    print(text)
    for line in output.diagnostics:
        print(f"voltstab: {line}", file=sys.stderr)
    return output.exit_code


if __name__ == "__main__":
    sys.exit(main())
