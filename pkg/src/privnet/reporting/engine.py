import logging
import os
import warnings
from typing import Any, Dict, List

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ["experiment", "n", "L", "K", "param_name", "param_value", "replication", "hamming_error"]
ERROR_COLUMNS = ["replication", "param", "value", "error"]
CELL_COLUMNS = ["cell", "experiment", "scenario", "n", "L", "K", "param_name", "param_value"]
FLOAT_FORMAT = "%.10g"


class ReportingEngine:
    """Writes per-replication CSVs, cell summaries and a Markdown report for an experiment run."""

    def __init__(self, output_dir: str = "results"):
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)

    @staticmethod
    def results_frame(results: List[Dict[str, Any]]) -> pd.DataFrame:
        df = pd.DataFrame(results)
        if "scenario" not in df:
            df["scenario"] = None
        return df.sort_values(["cell", "replication"], kind="stable").reset_index(drop=True)

    @staticmethod
    def summary_frame(results: List[Dict[str, Any]]) -> pd.DataFrame:
        """Mean, standard error, count and failures of the Hamming error per cell."""
        df = ReportingEngine.results_frame(results)
        df["failed"] = df["status"] != "success"
        rows = []
        for _, group in df.groupby("cell", sort=True):
            first = group.iloc[0]
            errors = group.loc[~group["failed"], "hamming_error"].astype(float)
            count = int(errors.size)
            rows.append({
                **{col: first[col] for col in CELL_COLUMNS},
                "mean_error": float(errors.mean()) if count else np.nan,
                "se_error": float(errors.std(ddof=1) / np.sqrt(count)) if count > 1 else np.nan,
                "replications": count,
                "failures": int(group["failed"].sum()),
            })
        return pd.DataFrame(rows)

    @staticmethod
    def trend_frame(summary: pd.DataFrame) -> pd.DataFrame:
        """
        Spearman correlation of mean error with the swept parameter, per fixed setting of the other axes.

        Cells sweeping different parameters (the n and L scenarios of example2)
        are grouped separately, each against its own parameter.
        """
        if summary.empty:
            return pd.DataFrame()
        rows = []
        keyed = summary.assign(scenario=summary["scenario"].fillna(""))
        for param, sweep in keyed.groupby("param_name", sort=False):
            fixed = [col for col in ("scenario", "n", "L", "K") if col != param]
            for key, group in sweep.groupby(fixed, sort=False):
                group = group.dropna(subset=["mean_error"])
                rho = np.nan
                if len(group) >= 2:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        rho = float(spearmanr(group["param_value"], group["mean_error"])[0])
                rows.append({**dict(zip(fixed, key)), "param_name": param, "points": len(group), "spearman": rho})
        columns = ["scenario", "n", "L", "K", "param_name", "points", "spearman"]
        return pd.DataFrame(rows).reindex(columns=columns)

    def generate_report(self, results: List[Dict[str, Any]], experiment: str) -> Dict[str, str]:
        """
        Write every output file of an experiment run.

        Returns:
            Mapping from output kind to file path. File names carry no
            timestamps so identical runs produce identical files.
        """
        df = self.results_frame(results)
        summary = self.summary_frame(results)
        trends = self.trend_frame(summary)
        paths = {
            "results": os.path.join(self.output_dir, f"{experiment}.csv"),
            "errors": os.path.join(self.output_dir, f"{experiment}_errors.csv"),
            "summary": os.path.join(self.output_dir, f"{experiment}_summary.csv"),
            "report": os.path.join(self.output_dir, f"{experiment}_report.md"),
        }

        df[RESULT_COLUMNS].to_csv(paths["results"], index=False, float_format=FLOAT_FORMAT)
        compact = pd.DataFrame({
            "replication": df["replication"],
            "param": df["param_name"],
            "value": df["param_value"],
            "error": df["hamming_error"],
        })
        compact[ERROR_COLUMNS].to_csv(paths["errors"], index=False, float_format=FLOAT_FORMAT)
        summary.to_csv(paths["summary"], index=False, float_format=FLOAT_FORMAT)

        with open(paths["report"], "w") as f:
            f.write(self._markdown(experiment, df, summary, trends))

        logger.info(f"Structured data saved to {self.output_dir}")
        return paths

    @staticmethod
    def _markdown(experiment: str, df: pd.DataFrame, summary: pd.DataFrame, trends: pd.DataFrame) -> str:
        report = f"# Privatized Community Detection: {experiment}\n\n"
        ok = int((df["status"] == "success").sum())
        report += f"{len(summary)} cells, {len(df)} replications, {ok} succeeded.\n\n"

        report += "## Mean Hamming Error by Cell\n"
        table = summary.drop(columns=["experiment"])
        if table["scenario"].isna().all():
            table = table.drop(columns=["scenario"])
        report += table.to_markdown(index=False, floatfmt=".4f") + "\n\n"

        if not trends.empty:
            report += "## Trends\n"
            report += trends.to_markdown(index=False, floatfmt=".3f") + "\n\n"

        failed = df[df["status"] != "success"]
        if not failed.empty:
            report += "## Failed Replications\n"
            report += failed[["cell", "replication", "error_message"]].head(20).to_markdown(index=False)
            if len(failed) > 20:
                report += f"\n\n*(Showing 20 of {len(failed)} failures)*"
            report += "\n"
        return report
