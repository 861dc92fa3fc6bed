#!/usr/bin/env python3

import json
from pathlib import Path
from types import SimpleNamespace


PrintColors = SimpleNamespace(
    HEADER="\033[95m",
    BLUE="\033[94m",
    GREEN="\033[92m",
    RED="\033[91m",
    WARNING="\033[1;5;31m",
    FAIL="\033[91m",
    ENDC="\033[0m",
    BOLD="\033[1m",
)

#: dict: Process exit codes of the CLI
EXIT_CODES = {"ok": 0, "runtime": 1, "validation": 2}


#: tuple: Suffixes that make :code:`--out` name a file rather than a directory
OUTPUT_FILE_SUFFIXES = (".json", ".csv")


def isFilePath(path):
    """
    Tells whether an output path names a file. Existing directories and names without a known file suffix
    (:code:`out.v2`) are directories
    """
    path = Path(path)
    return not path.is_dir() and path.suffix.lower() in OUTPUT_FILE_SUFFIXES


def cliPrint(msg, print_color):
    print("{0}{1}{2}".format(print_color, msg, PrintColors.ENDC))


def exitCodeFor(ex):
    """
    Maps an exception to the CLI exit code: 2 for invalid input, 1 for everything else
    """
    return EXIT_CODES["validation"] if isinstance(ex, ValueError) else EXIT_CODES["runtime"]


def writeErrorReport(outputDir, stage, ex):
    """
    Writes :code:`error.json` describing a failed stage

    Args:
        outputDir (pathlib.Path): Directory of the report, nothing is written if :code:`None`
        stage (str): Name of the failed stage
        ex (Exception): Raised exception

    Returns:
        pathlib.Path: written report or :code:`None`
    """
    report = {
        "stage": stage,
        "type": type(ex).__name__,
        "message": str(ex),
        "exit_code": exitCodeFor(ex),
    }
    if outputDir is None:
        return None
    try:
        path = Path(outputDir) / "error.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as f:
            json.dump(report, f, indent=2)
        return path
    except OSError as err:
        cliPrint("Unable to write error report: {}".format(err), PrintColors.WARNING)
        return None
