"""Summary tables from a completed run directory. Plot-ready TSV, no rendering."""

from __future__ import annotations

from pathlib import Path


def _copy_table(src: Path, dst: Path) -> None:
    dst.write_text(src.read_text())


def missing_stages(run_dir: Path) -> list[str]:
    """Artifacts a report needs, by owning stage."""
    run_dir = Path(run_dir)
    required = {
        "count": run_dir / "counts" / "occurrences.tsv",
        "cooc": run_dir / "counts" / "pairs.tsv",
        "lre": run_dir / "lre" / "metrics.tsv",
        "correlate": run_dir / "correlate" / "correlation.tsv",
    }
    return sorted(name for name, path in required.items() if not path.exists())


def stage_report(config, run_dir: Path) -> None:
    run_dir = Path(run_dir)
    out = run_dir / "report"
    out.mkdir(parents=True, exist_ok=True)

    _copy_table(run_dir / "lre" / "metrics.tsv", out / "metrics_table.tsv")
    _copy_table(run_dir / "correlate" / "correlation.tsv", out / "correlation_table.tsv")
    _copy_table(run_dir / "correlate" / "fig_scatter.tsv", out / "fig_scatter.tsv")
    if config.section("regression", "enabled"):
        summary = (run_dir / "regress" / "loro_summary.tsv").read_text()
        if config.section("transfer", "enabled"):
            transfer = (run_dir / "regress" / "transfer.tsv").read_text()
            summary = summary + "# transfer\n" + transfer
        (out / "regression_table.tsv").write_text(summary)
        _copy_table(run_dir / "regress" / "importance.tsv", out / "importance_table.tsv")


def report_standalone(run_dir) -> Path:
    """Rebuild report tables for an already-completed run directory."""
    run_dir = Path(run_dir)
    missing = missing_stages(run_dir)
    if missing:
        raise FileNotFoundError(
            f"run dir {run_dir} incomplete; missing stages: {', '.join(missing)}"
        )

    class _MinimalConfig:
        def __init__(self, run_dir):
            self._regress = (run_dir / "regress" / "loro_summary.tsv").exists()
            self._transfer = (run_dir / "regress" / "transfer.tsv").exists()

        def section(self, *keys):
            if keys == ("regression", "enabled"):
                return self._regress
            if keys == ("transfer", "enabled"):
                return self._transfer
            raise KeyError(keys)

    stage_report(_MinimalConfig(run_dir), run_dir)
    return run_dir / "report"
