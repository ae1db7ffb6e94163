"""
Runner — Orchestrates a full experiment run.
Coordinates the engines: plan → samples → estimators → intervals → result set.
"""

from pathlib import Path

import pandas as pd
import yaml

from engine import csvio
from engine.experiments import correction_table, histogram_table, run_plan


class ExperimentRunner:
    """Run a plan in one mode and write the result set to `output_dir`."""

    def __init__(self, plan, mode, output_dir, jobs=1, quiet=False):
        self.plan = plan
        self.mode = mode
        self.output_dir = Path(output_dir)
        self.jobs = max(1, int(jobs))
        self.quiet = quiet
        self.cells = []

    def _say(self, message):
        if not self.quiet:
            print(message)

    def run(self):
        """Execute the pipeline and return the written paths by name."""
        plan = self.plan
        self._say(f"\n{'═' * 50}")
        self._say(f"  Experiment — {self.mode} mode")
        self._say(f"  Cells: {len(plan.cells())} ({len(plan.alphas)} α × {len(plan.sizes)} m)")
        self._say(f"  Samples per cell: {plan.samples_per_cell}, replicas: {plan.replicas}")
        self._say(f"  Master seed: {plan.master_seed}, workers: {self.jobs}")
        self._say(f"  Output: {self.output_dir}")
        self._say(f"{'═' * 50}\n")

        self.output_dir.mkdir(parents=True, exist_ok=True)

        # ── Step 1: Estimate every cell ─────────────────────
        self._say("⚙️  Running estimators...")
        self.cells = run_plan(plan, self.mode, jobs=self.jobs)
        for cell in self.cells:
            status = "⚠️ " if cell.n_failed else "→"
            self._say(
                f"  {status} α={cell.alpha:g}, m={cell.m}: "
                f"AI {cell.ai_mean:.4f} ± {cell.ai_std:.4f}, "
                f"MLE {cell.mle_mean:.4f} ± {cell.mle_std:.4f}"
                + (f", {cell.n_failed} failed" if cell.n_failed else "")
            )
            if cell.single_sample:
                self._say("    ℹ️  single valid sample, stdev reported as 0")

        # ── Step 2: Write result tables ─────────────────────
        self._say("⚙️  Writing result set...")
        paths = self._write_tables()
        for path in paths.values():
            self._say(f"  → {path}")

        self._print_summary()
        return paths

    def _write_tables(self):
        out = self.output_dir
        tag = self.mode.replace("-", "_")
        paths = {
            "aggregate": csvio.write_frame(csvio.aggregate_frame(self.cells), out / f"{tag}_aggregate.csv"),
            "detail": csvio.write_frame(csvio.detail_frame(self.cells), out / f"{tag}_detail.csv"),
        }

        histograms = [histogram_table(c) for c in self.cells]
        paths["histograms"] = csvio.write_frame(
            pd.concat(histograms, ignore_index=True), out / f"{tag}_histograms.csv"
        )

        if self.mode == "fixed-point":
            paths["intervals"] = csvio.write_frame(
                csvio.cell_interval_frame(self.cells), out / f"{tag}_intervals.csv"
            )
            corrections = [correction_table(c) for c in self.cells]
            paths["corrections"] = csvio.write_frame(
                pd.concat(corrections, ignore_index=True), out / f"{tag}_corrections.csv"
            )
            for cell in self.cells:
                for record in cell.records:
                    if record.trace is None:
                        continue
                    name = f"alpha{cell.alpha:g}_m{cell.m}_s{record.sample_id}.csv"
                    paths[f"trace:{name}"] = csvio.write_frame(record.trace.to_frame(), out / "traces" / name)

        plan_path = out / f"{tag}_plan.yaml"
        with open(plan_path, "w") as f:
            yaml.dump(self.plan.to_manifest(), f, default_flow_style=False, sort_keys=False)
        paths["plan"] = plan_path
        return paths

    def _print_summary(self):
        cells = self.cells
        failed = sum(c.n_failed for c in cells)
        self._say("\n" + "─" * 50)
        self._say("📋 Experiment Summary")
        self._say("─" * 50)
        self._say(f"  Cells:    {len(cells)}")
        self._say(f"  Failed:   {failed} sample(s) excluded from aggregates")
        better = sum(abs(c.ai_mean - c.alpha) < abs(c.mle_mean - c.alpha) for c in cells)
        self._say(f"  AI bias below MLE bias in {better}/{len(cells)} cells")
        if self.mode == "fixed-point":
            rates = [c.coverage for c in cells if c.intervals]
            if rates:
                self._say(f"  Coverage: min {min(rates):.3f}, mean {sum(rates) / len(rates):.3f}")
        self._say("─" * 50)
