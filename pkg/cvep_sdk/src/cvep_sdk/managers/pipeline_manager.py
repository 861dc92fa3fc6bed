from pathlib import Path

import numpy as np

from ..codes import PREFERRED_PAIRS, defaultGoldCodeSet, modulate, saveCodes, selectCodePair, verifyCodes
from ..evaluation import evaluateConditions, fitOperatingPoint, lengthToSamples, sweepResponseLength
from ..reconvolution import EEG_RATE_HZ
from ..simulator import NOISE_MODELS, defaultForwardModel, simulateDataset
from ..stimulus import makeSessionPlan, savePlan
from ..timer import StageTimer
from ..utils import mergeLayers, sha256File, sha256Json, writeJson
from .dataset_manager import DatasetManager
from .report_manager import ReportManager

#: dict: Run configuration defaults
DEFAULT_CONFIG = {
    "seed": 42,
    "channels": 8,
    "snr": 0.07,
    "condition_gains": {"overt": 1.0, "covert": 0.4},
    "lateralization": 0.5,
    "noise_model": "white",
    "generation_length_s": 0.3,
    "response_length_s": 0.3,
    "length_grid_s": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
    "ridge": 1e-9,
    "folds": 4,
    "permutations": 1000,
    "degree": 6,
    "shift_bits": 61,
    "runs": 5,
    "trials_per_run": 20,
    "overt_runs": 1,
    "n_jobs": 1,
    "paths": {"out": "out"},
}


def buildConfig(overrides: dict = None) -> dict:
    """
    Layers :code:`overrides` onto a copy of :data:`DEFAULT_CONFIG` and validates the result
    """
    unknown = set(overrides or {}) - set(DEFAULT_CONFIG)
    if unknown:
        raise ValueError("Unknown configuration keys: {}".format(sorted(unknown)))
    config = mergeLayers(DEFAULT_CONFIG, overrides or {})
    validateConfig(config)
    return config


def validateConfig(config: dict):
    """
    Raises:
        ValueError: on the first invalid value
    """
    def check(condition, message, *args):
        if not condition:
            raise ValueError(message.format(*args))

    check(len(config["length_grid_s"]) > 0, "Response length grid is empty")
    for length in list(config["length_grid_s"]) + [config["response_length_s"], config["generation_length_s"]]:
        check(length > 0, "Response lengths must be positive (supplied: {})", length)
        lengthToSamples(length, EEG_RATE_HZ)
    check(config["folds"] >= 2, "At least 2 folds are required (supplied: {})", config["folds"])
    check(config["channels"] >= 2, "At least 2 channels are required (supplied: {})", config["channels"])
    check(config["snr"] >= 0, "SNR must be non-negative (supplied: {})", config["snr"])
    for condition in ("overt", "covert"):
        gain = config["condition_gains"].get(condition)
        check(gain is not None and 0 <= gain <= 1, "Gain of condition '{}' must lie within [0, 1]", condition)
    check(0 <= config["lateralization"] <= 1, "Lateralization must lie within [0, 1]")
    check(config["noise_model"] in NOISE_MODELS, "Unknown noise model '{}'", config["noise_model"])
    check(config["ridge"] >= 0, "Ridge must be non-negative (supplied: {})", config["ridge"])
    check(config["permutations"] >= 0, "Number of permutations must be non-negative")
    check(config["degree"] in PREFERRED_PAIRS, "No preferred pair for degree {} (available: {})",
          config["degree"], sorted(PREFERRED_PAIRS))
    codeLength = 2 * (2 ** config["degree"] - 1)
    check(0 < config["shift_bits"] < codeLength, "Shift of {} bits must lie within 1..{}",
          config["shift_bits"], codeLength - 1)
    check(config["trials_per_run"] >= 2 and config["trials_per_run"] % 2 == 0,
          "Trials per run must be a positive even number")
    check(0 <= config["overt_runs"] <= config["runs"], "Overt runs must lie within 0..{}", config["runs"])
    check(config["n_jobs"] != 0, "n_jobs must not be 0")
    for condition, runs in (("overt", config["overt_runs"]), ("covert", config["runs"] - config["overt_runs"])):
        trials = runs * config["trials_per_run"]
        check(trials == 0 or trials >= config["folds"],
              "{} {} trials cannot be split into {} folds", trials, condition, config["folds"])


class PipelineManager:
    """
    Manager class running the pipeline stages (codes, plan, simulation, evaluation, sweep, report) and writing their
    artifacts below one output directory. :func:`runExperiment` chains all stages and writes :code:`manifest.json`,
    which records the configuration, seeds, stage timings and a sha256 of every artifact.
    """

    def __init__(self, config: dict, outputDir: Path = None, verbose: bool = True):
        """
        Args:
            config (dict): Run configuration, validated by :func:`buildConfig`
            outputDir (pathlib.Path, Optional): Output directory, defaults to :code:`config["paths"]["out"]`
            verbose (bool): Print stage messages
        """
        self.config = buildConfig(config)
        self.outputDir = Path(outputDir if outputDir is not None else self.config["paths"]["out"])
        self.verbose = verbose
        self.timer = StageTimer()
        self.artifacts = []
        state = np.random.SeedSequence(self.config["seed"]).generate_state(4)
        #: dict: Seeds of the stochastic stages, derived from the configuration seed
        self.seeds = {
            "plan": int(state[0]),
            "forward_model": int(state[1]),
            "simulation": int(state[2]),
            "evaluation": int(state[3]),
        }

    def _log(self, message):
        if self.verbose:
            print(message)

    def _record(self, path):
        path = Path(path)
        if path not in self.artifacts:
            self.artifacts.append(path)
        return path

    def generateCodes(self):
        """
        Builds the Gold family of the configured degree, modulates it, selects the pair and writes :code:`codes.json`

        Returns:
            tuple: gold codes, modulated codes and the :class:`CodePair`

        Raises:
            RuntimeError: if the generated codes fail verification
        """
        with self.timer.measure("codes"):
            gold = defaultGoldCodeSet(self.config["degree"])
            modulated = [modulate(code) for code in gold]
            pair = selectCodePair(modulated, self.config["shift_bits"])
            report = verifyCodes(gold, modulated, pair)
            if not report["ok"]:
                raise RuntimeError("Generated codes failed verification: {}".format(report))
            saveCodes(self._record(self.outputDir / "codes.json"), gold, modulated, pair, self.config["degree"])
        self._log("Selected code pair {} / {} (shift {} bits)".format(pair.left.name, pair.right.name, pair.shiftBits))
        return gold, modulated, pair

    def makePlan(self, pair):
        with self.timer.measure("plan"):
            plan = makeSessionPlan(self.seeds["plan"], pair.names, self.config["runs"],
                                   self.config["trials_per_run"], self.config["overt_runs"])
            savePlan(plan, self._record(self.outputDir / "plan.json"))
        self._log("Session plan: {}".format(", ".join(plan.conditions)))
        return plan

    def forwardModel(self):
        return defaultForwardModel(self.config["channels"], self.config["generation_length_s"],
                                   self.seeds["forward_model"], self.config["snr"], self.config["noise_model"],
                                   self.config["condition_gains"], self.config["lateralization"])

    def simulate(self, plan, pair):
        with self.timer.measure("simulate"):
            dataset = simulateDataset(plan, self.forwardModel(), pair, self.seeds["simulation"],
                                      nJobs=self.config["n_jobs"])
            manager = DatasetManager(self.outputDir / "dataset")
            manager.save(dataset)
            self._record(manager.path / manager.METADATA)
            self._record(manager.path / manager.TRIALS)
        self._log("Simulated {} trials ({} channels, {} samples)".format(len(dataset), dataset.nChannels,
                                                                         dataset.nSamples))
        return dataset

    def evaluate(self, dataset, lengthS: float = None):
        """
        Cross-validates every condition at the operating point and fits the per-condition models

        Returns:
            tuple: condition -> :class:`EvalResult` and condition -> pattern entry for the report
        """
        lengthS = self.config["response_length_s"] if lengthS is None else lengthS
        lengthSamples = lengthToSamples(lengthS, dataset.rateHz)
        with self.timer.measure("evaluate"):
            evaluations = evaluateConditions(dataset, lengthSamples, self.config["ridge"], self.config["folds"],
                                             self.config["permutations"], self.seeds["evaluation"],
                                             self.config["n_jobs"])
            writeJson(self._record(self.outputDir / "evaluation.json"),
                      {condition: result.toDict() for condition, result in evaluations.items()})
            patterns = {}
            for condition in evaluations:
                model, pattern = fitOperatingPoint(dataset.selectCondition(condition), lengthSamples,
                                                   self.config["ridge"])
                document = model.toDict()
                document["spatial_pattern"] = pattern.a.tolist()
                writeJson(self._record(self.outputDir / "model_{}.json".format(condition)), document)
                patterns[condition] = {"a": pattern.a, "responses": model.responses(), "rate_hz": dataset.rateHz}
        for condition, result in evaluations.items():
            self._log("[{}] accuracy {:.3f} (p = {:.4f}, folds {})".format(
                condition, result.meanAccuracy, result.pValue, ", ".join("{:.2f}".format(a) for a in result.foldAccuracies)))
        return evaluations, patterns

    def sweep(self, dataset):
        """
        Returns:
            dict: condition -> :class:`SweepResult`, each written to :code:`curve_<condition>.csv`
        """
        sweeps = {}
        with self.timer.measure("sweep"):
            for index, condition in enumerate(c for c in ("overt", "covert") if c in dataset.conditions):
                self._log("Sweeping response lengths ({})".format(condition))
                result = sweepResponseLength(dataset.selectCondition(condition), self.config["length_grid_s"],
                                             self.config["ridge"], self.config["folds"], self.config["permutations"],
                                             self.seeds["evaluation"] + index, self.config["n_jobs"],
                                             verbose=self.verbose and self.config["n_jobs"] == 1)
                result.writeCsv(self._record(self.outputDir / "curve_{}.csv".format(condition)))
                sweeps[condition] = result
        return sweeps

    def report(self, curves: dict, patterns: dict, evaluations: dict):
        """
        Args:
            curves (dict): condition -> list of :code:`(length_s, mean_accuracy)`
            patterns (dict): condition -> pattern entry
            evaluations (dict): condition -> evaluation dict
        """
        with self.timer.measure("report"):
            manager = ReportManager(self.outputDir / "report", self.config["response_length_s"])
            if curves:
                self._record(manager.plotCurves(curves))
            if patterns:
                self._record(manager.plotPatterns(patterns))
            self._record(manager.writeSummary(evaluations))

    def runExperiment(self, extraManifest: dict = None) -> dict:
        """
        Runs codes, plan, simulation, evaluation, sweep and report, then writes :code:`manifest.json`

        Args:
            extraManifest (dict, Optional): Additional manifest entries (package versions, system report)

        Returns:
            dict: the manifest
        """
        self.outputDir.mkdir(parents=True, exist_ok=True)
        _, _, pair = self.generateCodes()
        plan = self.makePlan(pair)
        dataset = self.simulate(plan, pair)
        evaluations, patterns = self.evaluate(dataset)
        sweeps = self.sweep(dataset)
        self.report({condition: sweep.curve() for condition, sweep in sweeps.items()}, patterns,
                    {condition: result.toDict() for condition, result in evaluations.items()})
        manifest = self.manifest(extraManifest)
        writeJson(self.outputDir / "manifest.json", manifest)
        if self.verbose:
            self.timer.printStatus()
        return manifest

    def manifest(self, extraManifest: dict = None) -> dict:
        manifest = {
            "config": self.config,
            "config_sha256": sha256Json(self.config),
            "seeds": self.seeds,
            "timings_s": self.timer.toDict(),
            "artifacts": {
                path.relative_to(self.outputDir).as_posix(): sha256File(path) for path in self.artifacts
            },
        }
        manifest.update(extraManifest or {})
        return manifest
