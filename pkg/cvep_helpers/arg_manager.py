import argparse
from pathlib import Path


def checkRange(minVal, maxVal, cast=int):
    def checkFn(value):
        cvalue = cast(value)
        if minVal <= cvalue <= maxVal:
            return cvalue
        else:
            raise argparse.ArgumentTypeError(
                "{} is an invalid {} value, must be in range {}..{}".format(value, cast.__name__, minVal, maxVal)
            )

    return checkFn


def _comaSeparated(cast=float):
    def _fun(option):
        try:
            return [cast(item) for item in option.split(",") if item.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError("{0} format is invalid, expected a comma separated list".format(option))

    return _fun


def _commonParser():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, help="Master seed of the run. Default: config value (42)")
    parser.add_argument("--out", type=Path, help="Output path (file or directory, depending on the command)")
    parser.add_argument("--config", type=Path,
                        help="JSON run configuration or a manifest.json of a previous run to re-execute it")
    parser.add_argument("--jobs", dest="nJobs", type=int, help="Parallel jobs for simulation, folds and sweep points")
    parser.add_argument("--quiet", action="store_true", help="Only print errors")
    return parser


def _evaluationArgs(parser):
    parser.add_argument("--ridge", type=float, help="Decoder ridge, relative to the mean auto-covariance eigenvalue")
    parser.add_argument("--folds", type=checkRange(2, 100), help="Number of chronological folds")
    parser.add_argument("--permutations", type=checkRange(0, 10 ** 6), help="Permutations of the p-value")
    parser.add_argument("--condition", choices=["overt", "covert", "all"], default="all",
                        help="Condition to evaluate. Default: %(default)s")


def parseArgs(argv=None):
    common = _commonParser()
    parser = argparse.ArgumentParser(formatter_class=argparse.RawTextHelpFormatter,
                                     description="Reconvolution c-VEP pipeline: codes, stimulus plan, simulation, "
                                                 "preprocessing, evaluation and reporting")
    commands = parser.add_subparsers(dest="command", required=True)

    codes = commands.add_parser("codes", help="Generate or verify Gold codes")
    codesActions = codes.add_subparsers(dest="action", required=True)
    generate = codesActions.add_parser("generate", parents=[common], help="Write the modulated Gold family and pair")
    generate.add_argument("--degree", type=int, help="LFSR degree of the Gold family. Default: 6")
    generate.add_argument("--shift", dest="shiftBits", type=int, help="Phase shift of the right code in bits. Default: 61")
    verify = codesActions.add_parser("verify", parents=[common], help="Verify a codes.json document")
    verify.add_argument("path", type=Path, help="codes.json to verify")

    stim = commands.add_parser("stim", help="Stimulus schedule and event matrices")
    stimActions = stim.add_subparsers(dest="action", required=True)
    stimActions.add_parser("plan", parents=[common], help="Write the session plan")
    events = stimActions.add_parser("events", parents=[common], help="Dump event and structure matrices as CSV")
    events.add_argument("--code", required=True, help="Name of the code (e.g. gold00 or left / right)")
    events.add_argument("--L", dest="lengthSamples", type=checkRange(1, 2400), default=36,
                        help="Modeled response length in samples. Default: %(default)s")
    events.add_argument("--codes", dest="codesPath", type=Path, help="codes.json to read the code from")

    simulate = commands.add_parser("simulate", parents=[common], help="Simulate a dataset")
    simulate.add_argument("--plan", type=Path, help="plan.json to simulate, generated from the seed if omitted")
    simulate.add_argument("--snr", type=float, help="Peak-channel amplitude SNR ('inf' disables noise)")
    simulate.add_argument("--channels", type=checkRange(2, 512), help="Number of channels")
    simulate.add_argument("--noise", dest="noiseModel", choices=["white", "pink"], help="Noise model")
    simulate.add_argument("--raw", action="store_true", help="Write a continuous 512 Hz recording instead of epochs")

    preprocess = commands.add_parser("preprocess", parents=[common], help="Preprocess a raw recording into epochs")
    preprocess.add_argument("--data", required=True, type=Path, help="Raw recording directory")

    evaluate = commands.add_parser("evaluate", parents=[common], help="Cross-validate the decoder")
    evaluate.add_argument("--data", required=True, type=Path, help="Dataset directory")
    evaluate.add_argument("--L", dest="lengthS", type=float, help="Modeled response length in seconds. Default: 0.3")
    _evaluationArgs(evaluate)

    sweep = commands.add_parser("sweep", parents=[common], help="Sweep the modeled response length")
    sweep.add_argument("--data", required=True, type=Path, help="Dataset directory")
    sweep.add_argument("--lengths", type=_comaSeparated(float), help="Comma separated lengths in seconds")
    _evaluationArgs(sweep)

    report = commands.add_parser("report", parents=[common], help="Render the report of a run directory")
    report.add_argument("--data", type=Path, help="Run directory holding curve_*.csv, evaluation.json and models")
    report.add_argument("--svg", action="store_true", help="Render SVG figures (summary.csv is always written)")

    run = commands.add_parser("run", parents=[common], help="Run the whole experiment and write a manifest")
    run.add_argument("--snr", type=float, help="Peak-channel amplitude SNR")
    run.add_argument("--channels", type=checkRange(2, 512), help="Number of channels")
    run.add_argument("--lengths", type=_comaSeparated(float), help="Comma separated sweep lengths in seconds")
    run.add_argument("--permutations", type=checkRange(0, 10 ** 6), help="Permutations of the p-value")

    return parser.parse_args(argv)
