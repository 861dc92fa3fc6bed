from pathlib import Path

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from ..reconvolution import EVENT_NAMES
from ..utils import readCsv, writeCsv

_COLORS = {"overt": "tab:blue", "covert": "tab:orange"}
# fixed salt and outlined text keep the SVG bytes identical across runs
_SVG_STYLE = {"svg.hashsalt": "cvep-report", "svg.fonttype": "path"}


class ReportManager:
    """
    Manager class that renders the evaluation report: accuracy against modeled response length (:code:`curve.svg`),
    spatial patterns with transient responses (:code:`patterns.svg`) and a per-condition summary table
    (:code:`summary.csv`). SVG output is byte-stable for identical inputs
    """

    def __init__(self, outputDir: Path, operatingLengthS: float = 0.3):
        """
        Args:
            outputDir (pathlib.Path): Directory the report files are written to
            operatingLengthS (float): Response length highlighted in the curve
        """
        self.outputDir = Path(outputDir)
        self.operatingLengthS = operatingLengthS

    def _save(self, fig, name):
        self.outputDir.mkdir(parents=True, exist_ok=True)
        path = self.outputDir / name
        with plt.rc_context(_SVG_STYLE):
            fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        return path

    @staticmethod
    def curveFromCsv(path: Path):
        """
        Reads the mean accuracy per length from a curve file

        Returns:
            list: :code:`(length_s, mean_accuracy)` tuples sorted by length
        """
        header, rows = readCsv(path)
        lengthIdx, meanIdx = header.index("length_s"), header.index("mean_accuracy")
        curve = {}
        for row in rows:
            curve[float(row[lengthIdx])] = float(row[meanIdx])
        return sorted(curve.items())

    def plotCurves(self, curves: dict, name="curve.svg"):
        """
        Plots one accuracy curve per condition

        Args:
            curves (dict): condition -> list of :code:`(length_s, mean_accuracy)`

        Returns:
            pathlib.Path: written file
        """
        fig, ax = plt.subplots(figsize=(6, 4))
        for condition, curve in curves.items():
            lengths, accuracies = zip(*curve)
            ax.plot(lengths, accuracies, marker="o", label=condition, color=_COLORS.get(condition))
        ax.axhline(0.5, color="gray", linestyle=":", linewidth=1, label="chance")
        ax.axvline(self.operatingLengthS, color="gray", linestyle="--", linewidth=1)
        ax.set_xlabel("transient response length (s)")
        ax.set_ylabel("accuracy")
        ax.set_ylim(0.4, 1.02)
        ax.legend(loc="lower right")
        ax.grid(alpha=0.3)
        fig.tight_layout()
        return self._save(fig, name)

    def plotPatterns(self, patterns: dict, name="patterns.svg"):
        """
        Plots the spatial pattern and the transient responses of every condition

        Args:
            patterns (dict): condition -> dict with :code:`a` (C values), :code:`responses` (3 x L) and :code:`rate_hz`

        Returns:
            pathlib.Path: written file
        """
        fig, axes = plt.subplots(len(patterns), 2, figsize=(9, 3 * max(len(patterns), 1)), squeeze=False)
        for row, (condition, entry) in enumerate(patterns.items()):
            a = np.asarray(entry["a"])
            # scale-free comparison across conditions
            a = a / np.max(np.abs(a)) if np.max(np.abs(a)) > 0 else a
            x = np.linspace(-1, 1, len(a))
            axes[row, 0].bar(x, a, width=1.6 / max(len(a), 1), color=_COLORS.get(condition))
            axes[row, 0].set_title("{}: spatial pattern".format(condition))
            axes[row, 0].set_xlabel("left - right position")
            responses = np.asarray(entry["responses"])
            t = np.arange(responses.shape[1]) / float(entry["rate_hz"])
            for event, response in zip(EVENT_NAMES, responses):
                axes[row, 1].plot(t, response, label=event)
            axes[row, 1].set_title("{}: transient responses".format(condition))
            axes[row, 1].set_xlabel("time (s)")
            axes[row, 1].legend(fontsize="small")
        fig.tight_layout()
        return self._save(fig, name)

    def writeSummary(self, evaluations: dict, name="summary.csv"):
        """
        Args:
            evaluations (dict): condition -> evaluation dict as produced by :code:`EvalResult.toDict`
        """
        rows = [(condition, round(e["length_s"], 6), e["mean_accuracy"], e["p_value"], len(e["labels"]))
                for condition, e in evaluations.items()]
        path = self.outputDir / name
        writeCsv(path, ("condition", "length_s", "mean_accuracy", "p_value", "trials"), rows)
        return path
