import json
from pathlib import Path

from cvep_helpers.cli_utils import cliPrint, isFilePath, PrintColors
from cvep_sdk.managers.pipeline_manager import buildConfig
from cvep_sdk.utils import mergeLayers


CVEP_CONFIGS = Path(__file__).parent.parent / Path("resources/configs/")

# command line attribute -> configuration key
_ARG_KEYS = {
    "seed": "seed",
    "snr": "snr",
    "channels": "channels",
    "noiseModel": "noise_model",
    "ridge": "ridge",
    "folds": "folds",
    "permutations": "permutations",
    "lengths": "length_grid_s",
    "lengthS": "response_length_s",
    "nJobs": "n_jobs",
    "degree": "degree",
    "shiftBits": "shift_bits",
}


class ConfigManager:
    """
    Run configuration: built-in defaults, overlaid by the :code:`--config` document, overlaid by explicit command line
    flags. A manifest of a previous run is accepted as :code:`--config`, its recorded configuration is used as is
    """

    def __init__(self, args):
        self.args = args
        document = self._loadDocument(getattr(args, "config", None))
        cli = {}
        for attr, key in _ARG_KEYS.items():
            value = getattr(args, attr, None)
            if value is not None:
                cli[key] = value
        if self.command == "run" and getattr(args, "out", None) is not None:
            cli["paths"] = {"out": str(args.out)}
        #: dict: validated run configuration
        self.runConfig = buildConfig(mergeLayers(document, cli))

    @staticmethod
    def _loadDocument(path):
        if path is None:
            return {}
        path = Path(path)
        if not path.exists():
            named = CVEP_CONFIGS / "{}.json".format(path.stem)
            if not named.exists():
                raise ValueError("Config file {} does not exist!".format(path))
            path = named
        with path.open() as f:
            try:
                document = json.load(f)
            except json.JSONDecodeError as ex:
                raise ValueError("Config file {} is not valid JSON: {}".format(path, ex))
        if "config" in document and "artifacts" in document:
            cliPrint("Re-running configuration recorded in manifest {}".format(path), PrintColors.BLUE)
            document = document["config"]
        return document

    @property
    def command(self):
        return getattr(self.args, "command", None)

    @property
    def verbose(self):
        return not getattr(self.args, "quiet", False)

    @property
    def seed(self):
        return self.runConfig["seed"]

    @property
    def outputPath(self):
        """
        Returns:
            pathlib.Path: :code:`--out` if given, otherwise the configured output directory
        """
        if getattr(self.args, "out", None) is not None:
            return Path(self.args.out)
        return Path(self.runConfig["paths"]["out"])

    @property
    def outputDir(self):
        """
        Returns:
            pathlib.Path: directory receiving outputs and the error report
        """
        path = self.outputPath
        return path.parent if isFilePath(path) else path

    @property
    def responseLengthS(self):
        return self.runConfig["response_length_s"]

    @property
    def lengthGrid(self):
        return list(self.runConfig["length_grid_s"])

    @property
    def conditions(self):
        condition = getattr(self.args, "condition", "all")
        return ("overt", "covert") if condition == "all" else (condition,)
