#!/usr/bin/env python3
import sys

if sys.version_info[0] < 3:
    raise Exception("Must be using Python 3")
import json
import os
import traceback
from pathlib import Path

sys.path.append(str(Path(__file__).parent.absolute()))
sys.path.append(str((Path(__file__).parent / "cvep_sdk" / "src").absolute()))

try:
    import numpy as np
    import scipy
    import sklearn
except Exception as ex:
    print("Third party libraries failed to import: {}".format(ex))
    print("Run \"python3 -m pip install -r requirements.txt\" and try again")
    raise SystemExit(1)

from log_system_information import make_sys_report
from cvep_helpers.arg_manager import parseArgs
from cvep_helpers.cli_utils import cliPrint, PrintColors, exitCodeFor, isFilePath, writeErrorReport
from cvep_helpers.config_manager import ConfigManager
from cvep_helpers.version_check import checkRequirementsVersion, getStackVersions
from cvep_sdk import codes as cvepCodes
from cvep_sdk.evaluation import crossValidate, lengthToSamples, sweepResponseLength
from cvep_sdk.managers import DatasetManager, PipelineManager, ReportManager
from cvep_sdk.preprocess import preprocessRecording
from cvep_sdk.reconvolution import buildStructureMatrix, deriveEvents, writeEventsCsv, writeStructureCsv
from cvep_sdk.simulator import Dataset, simulateDataset, simulateRawRecording
from cvep_sdk.stimulus import TRIAL_DURATION_S, loadPlan, makeSessionPlan, savePlan
from cvep_sdk.utils import readJson, writeJson

sentryEnabled = False
if os.environ.get("CVEP_SENTRY_DSN"):
    try:
        import sentry_sdk

        sentry_sdk.init(
            os.environ["CVEP_SENTRY_DSN"],
            traces_sample_rate=0.0,
            with_locals=False,
        )
        sentry_sdk.set_context("syslog", make_sys_report(anonymous=True, skipPackages=True))
        sentryEnabled = True
    except Exception as ex:
        print("Crash reporting disabled! {}".format(ex))


class CvepPipeline:
    """
    Command line front-end: each command maps onto one method, all of them share the validated run configuration
    """

    def __init__(self, conf: ConfigManager):
        self._conf = conf
        self._pm = PipelineManager(conf.runConfig, conf.outputDir, verbose=conf.verbose)

    def _print(self, msg, color=None):
        if not self._conf.verbose:
            return
        if color is None:
            print(msg)
        else:
            cliPrint(msg, color)

    def _outFile(self, defaultName):
        path = self._conf.outputPath
        return path if isFilePath(path) else path / defaultName

    def _pair(self):
        return cvepCodes.defaultCodePair(self._conf.runConfig["degree"], self._conf.runConfig["shift_bits"])

    def run(self):
        command = self._conf.command
        action = getattr(self._conf.args, "action", None)
        self._print("=== {} ===".format(" ".join(filter(None, (command, action)))), PrintColors.HEADER)
        handler = getattr(self, "_" + command + ("_" + action if action else ""))
        handler()

    def _codes_generate(self):
        config = self._conf.runConfig
        gold = cvepCodes.defaultGoldCodeSet(config["degree"])
        modulated = [cvepCodes.modulate(code) for code in gold]
        pair = cvepCodes.selectCodePair(modulated, config["shift_bits"])
        path = self._outFile("codes.json")
        cvepCodes.saveCodes(path, gold, modulated, pair, config["degree"])
        self._print("{} codes of {} bits, pair {} / {} -> {}".format(len(gold), len(modulated[0]), pair.left.name,
                                                                     pair.right.name, path), PrintColors.GREEN)

    def _codes_verify(self):
        document = cvepCodes.loadCodes(self._conf.args.path)
        report = cvepCodes.verifyCodes(document["gold"], document["modulated"], document["pair"])
        self._print(json.dumps(report, indent=2))
        if not report["ok"]:
            raise ValueError("Code document {} failed verification".format(self._conf.args.path))
        self._print("Codes verified", PrintColors.GREEN)

    def _stim_plan(self):
        pair = self._pair()
        plan = makeSessionPlan(self._pm.seeds["plan"], pair.names, self._conf.runConfig["runs"],
                               self._conf.runConfig["trials_per_run"], self._conf.runConfig["overt_runs"])
        path = self._outFile("plan.json")
        savePlan(plan, path)
        self._print("Plan with runs {} -> {}".format(", ".join(plan.conditions), path), PrintColors.GREEN)

    def _stim_events(self):
        args = self._conf.args
        if args.codesPath is not None:
            document = cvepCodes.loadCodes(args.codesPath)
            pair, candidates = document["pair"], document["modulated"]
        else:
            pair = self._pair()
            candidates = [cvepCodes.modulate(code) for code in cvepCodes.defaultGoldCodeSet(self._conf.runConfig["degree"])]
        named = {code.name: code for code in candidates}
        if pair is not None:
            named.update({"left": pair.left, "right": pair.right, pair.right.name: pair.right})
        if args.code not in named:
            raise ValueError("Unknown code '{}' (available: {})".format(args.code, ", ".join(sorted(named))))
        events = deriveEvents(named[args.code], TRIAL_DURATION_S)
        structure = buildStructureMatrix(events, args.lengthSamples)
        outDir = self._conf.outputDir
        writeEventsCsv(events, outDir / "events.csv")
        writeStructureCsv(structure, outDir / "structure.csv")
        self._print("Events ({} short, {} long) and {} x {} structure matrix -> {}".format(
            int(events.rows[1].sum()), int(events.rows[2].sum()), *structure.data.shape, outDir), PrintColors.GREEN)

    def _simulate(self):
        args = self._conf.args
        pair = self._pair()
        if args.plan is not None:
            plan = loadPlan(args.plan)
            if tuple(plan.codeNames) != pair.names:
                cliPrint("[WARNING] Plan codes {} differ from the configured pair {}".format(plan.codeNames, pair.names),
                         PrintColors.WARNING)
        else:
            plan = makeSessionPlan(self._pm.seeds["plan"], pair.names, self._conf.runConfig["runs"],
                                   self._conf.runConfig["trials_per_run"], self._conf.runConfig["overt_runs"])
        fm = self._pm.forwardModel()
        manager = DatasetManager(self._conf.outputPath)
        if args.raw:
            raw = simulateRawRecording(plan, fm, pair, self._pm.seeds["simulation"])
            manager.saveRaw(raw, pair, {"forward_model": fm.toDict(), "simulation_seed": self._pm.seeds["simulation"],
                                        "plan_seed": plan.rngSeed})
            self._print("Raw recording of {} trials ({} samples at {} Hz) -> {}".format(
                len(raw.onsets), raw.data.shape[1], raw.rateHz, manager.path), PrintColors.GREEN)
        else:
            dataset = simulateDataset(plan, fm, pair, self._pm.seeds["simulation"], nJobs=self._conf.runConfig["n_jobs"])
            manager.save(dataset)
            self._print("Dataset of {} trials -> {}".format(len(dataset), manager.path), PrintColors.GREEN)

    def _preprocess(self):
        raw, pair, provenance = DatasetManager(self._conf.args.data).loadRaw()
        epochs = preprocessRecording(raw)
        dataset = Dataset(epochs.astype(np.float32), np.asarray(raw.labels, dtype=int), raw.conditions, pair,
                          raw.channelNames, 120, dict(provenance, preprocessed_from=str(self._conf.args.data)))
        manager = DatasetManager(self._conf.outputPath)
        manager.save(dataset)
        self._print("Preprocessed {} epochs -> {}".format(len(dataset), manager.path), PrintColors.GREEN)

    def _selectedConditions(self, dataset):
        present = [c for c in self._conf.conditions if c in dataset.conditions]
        if not present:
            raise ValueError("Dataset holds no trials of condition(s) {}".format(", ".join(self._conf.conditions)))
        return present

    def _evaluate(self):
        config = self._conf.runConfig
        dataset = DatasetManager(self._conf.args.data).load()
        lengthSamples = lengthToSamples(self._conf.responseLengthS, dataset.rateHz)
        results = {}
        for index, condition in enumerate(self._selectedConditions(dataset)):
            result = crossValidate(dataset.selectCondition(condition), lengthSamples, config["ridge"], config["folds"],
                                   config["permutations"], [self._pm.seeds["evaluation"], index], config["n_jobs"])
            results[condition] = result.toDict()
            self._print("[{}] L = {:.2f} s: accuracy {:.3f}, p = {:.4f}".format(
                condition, result.lengthS, result.meanAccuracy, result.pValue), PrintColors.GREEN)
        if getattr(self._conf.args, "out", None) is not None:
            writeJson(self._outFile("evaluation.json"), results)

    def _sweep(self):
        config = self._conf.runConfig
        dataset = DatasetManager(self._conf.args.data).load()
        conditions = self._selectedConditions(dataset)
        outPath = self._conf.outputPath
        for index, condition in enumerate(conditions):
            result = sweepResponseLength(dataset.selectCondition(condition), self._conf.lengthGrid, config["ridge"],
                                         config["folds"], config["permutations"], self._pm.seeds["evaluation"] + index,
                                         config["n_jobs"], verbose=self._conf.verbose and config["n_jobs"] == 1)
            if isFilePath(outPath) and len(conditions) == 1:
                path = outPath
            elif isFilePath(outPath):
                path = outPath.with_name("{}_{}{}".format(outPath.stem, condition, outPath.suffix))
            else:
                path = outPath / "curve_{}.csv".format(condition)
            result.writeCsv(path)
            best = result.best()
            self._print("[{}] best length {:.2f} s ({:.3f}) -> {}".format(condition, best.lengthS, best.meanAccuracy,
                                                                          path), PrintColors.GREEN)

    def _report(self):
        dataDir = Path(self._conf.args.data) if self._conf.args.data is not None else self._conf.outputDir
        evaluationPath = dataDir / "evaluation.json"
        evaluations = readJson(evaluationPath) if evaluationPath.exists() else {}
        curves, patterns = {}, {}
        for condition in ("overt", "covert"):
            curvePath = dataDir / "curve_{}.csv".format(condition)
            if curvePath.exists():
                curves[condition] = ReportManager.curveFromCsv(curvePath)
            modelPath = dataDir / "model_{}.json".format(condition)
            if modelPath.exists():
                model = readJson(modelPath)
                patterns[condition] = {
                    "a": model.get("spatial_pattern", model["w"]),
                    "responses": np.asarray(model["r"]).reshape(3, model["length_samples"]),
                    "rate_hz": model["rate_hz"],
                }
        if not curves and not evaluations:
            raise ValueError("{} holds no curve_*.csv or evaluation.json to report".format(dataDir))
        manager = ReportManager(self._conf.outputDir / "report", self._conf.responseLengthS)
        written = [manager.writeSummary(evaluations)]
        if self._conf.args.svg:
            if curves:
                written.append(manager.plotCurves(curves))
            if patterns:
                written.append(manager.plotPatterns(patterns))
        self._print("Report: {}".format(", ".join(str(path) for path in written)), PrintColors.GREEN)

    def _run(self):
        missing = checkRequirementsVersion()
        if missing:
            cliPrint("[WARNING] Packages not installed: {}".format(", ".join(missing)), PrintColors.WARNING)
        manifest = self._pm.runExperiment({
            "versions": getStackVersions(),
            "system": make_sys_report(anonymous=True, skipPackages=True),
        })
        self._print("Run complete: {} artifacts, manifest -> {}".format(
            len(manifest["artifacts"]), self._pm.outputDir / "manifest.json"), PrintColors.GREEN)


def main(argv=None):
    args = parseArgs(argv)
    stage = " ".join(filter(None, (args.command, getattr(args, "action", None))))
    outputDir = None
    if getattr(args, "out", None) is not None:
        outputDir = args.out.parent if isFilePath(args.out) else args.out
    try:
        conf = ConfigManager(args)
        outputDir = conf.outputDir
        CvepPipeline(conf).run()
    except Exception as ex:
        code = exitCodeFor(ex)
        if code != 2:
            traceback.print_exc()
            if sentryEnabled:
                from sentry_sdk import capture_exception
                capture_exception(ex)
        cliPrint("[{}] {}: {}".format(stage, type(ex).__name__, ex), PrintColors.RED)
        writeErrorReport(outputDir, stage, ex)
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
