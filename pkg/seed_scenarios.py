import sys
from pathlib import Path

from main import cli

# Output directory; pass another one as the first argument.
OUT_DIR = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("scenarios")
SEED = 7
TRUTH = "-5,1"

scenarios = [
    # 1) Precise data
    {"name": "precise", "args": []},

    # 2) Symmetric intervals, centre drawn around x
    {"name": "symmetric", "args": ["--intervalize", "symmetric", "--epsilon", "0.375"]},

    # 3) Biased intervals: x is the lower end
    {"name": "left_biased", "args": ["--intervalize", "left", "--epsilon", "0.375"]},

    # 4) Biased intervals: x is the upper end
    {"name": "right_biased", "args": ["--intervalize", "right", "--epsilon", "0.375"]},

    # 5) Biased intervals pointing away from the boundary
    {"name": "split_biased", "args": ["--intervalize", "split", "--epsilon", "0.375", "--split-point", "5"]},

    # 6) Five unknown labels nearest the boundary
    {"name": "censored_labels", "args": ["--censor-labels", "5"]},

    # 7) Interval features and unknown labels together
    {
        "name": "combined",
        "args": ["--intervalize", "symmetric", "--epsilon", "0.375", "--censor-labels", "5"],
    },
]

burn_scenarios = [
    # 8) Burn stand-in: ages over 80 as [80,90], 20 inhalation cells and 10 outcomes unknown
    {"name": "burn", "args": []},

    # 9) Precise burn draw for evaluation
    {"name": "burn_test", "args": ["--precise", "--seed", str(SEED + 1)]},
]


def main():
    for scenario in scenarios:
        out = OUT_DIR / f"{scenario['name']}.csv"
        args = [
            "synth", "--n", "50", "--seed", str(SEED), f"--truth-beta={TRUTH}",
            "--out", str(out), *scenario["args"],
        ]
        cli.main(args, prog_name="imprecise-logit", standalone_mode=False)
    for scenario in burn_scenarios:
        out = OUT_DIR / f"{scenario['name']}.csv"
        args = ["synth-burn", "--seed", str(SEED), "--out", str(out), *scenario["args"]]
        cli.main(args, prog_name="imprecise-logit", standalone_mode=False)


if __name__ == "__main__":
    main()
