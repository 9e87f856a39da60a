"""Project result statistics and the report rendering path.

Percentages use visible (post-merge) terms as the denominator and are
reported to one decimal.  A term counts as validated when at least one
validator marked it valid and none marked it invalid; as deleted in the
symmetric case.  Reports can be written as a TSV plus a rendered figure.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .model import Project


@dataclass
class StatsReport:
    total_imported: int
    merged_count: int
    visible_count: int
    validated_count: int
    deleted_count: int
    classified_count: int
    class_count: int
    concept_count: int
    validated_pct: float
    deleted_pct: float
    classified_pct: float
    merged_pct: float

    def to_dict(self) -> dict:
        return {
            "total_imported": self.total_imported,
            "merged_count": self.merged_count,
            "visible_count": self.visible_count,
            "validated_count": self.validated_count,
            "deleted_count": self.deleted_count,
            "classified_count": self.classified_count,
            "class_count": self.class_count,
            "concept_count": self.concept_count,
            "validated_pct": self.validated_pct,
            "deleted_pct": self.deleted_pct,
            "classified_pct": self.classified_pct,
            "merged_pct": self.merged_pct,
        }


def _pct(part: int, whole: int) -> float:
    return round(100.0 * part / whole, 1) if whole else 0.0


def compute_stats(project: Project) -> StatsReport:
    total = len(project.terms)
    merged = sum(1 for t in project.terms.values() if not t.visible)
    visible = total - merged
    validated = deleted = 0
    for tid, term in project.terms.items():
        if not term.visible:
            continue
        labels = {r.label for r in project.validations.get(tid, {}).values()}
        if "valid" in labels and "invalid" not in labels:
            validated += 1
        elif "invalid" in labels and "valid" not in labels:
            deleted += 1
    classified_ids = set()
    for cls_ in project.classes.values():
        classified_ids.update(
            tid for tid in cls_.members
            if tid in project.terms and project.terms[tid].visible
        )
    return StatsReport(
        total_imported=total,
        merged_count=merged,
        visible_count=visible,
        validated_count=validated,
        deleted_count=deleted,
        classified_count=len(classified_ids),
        class_count=len(project.classes),
        concept_count=len(project.concepts),
        validated_pct=_pct(validated, visible),
        deleted_pct=_pct(deleted, visible),
        classified_pct=_pct(len(classified_ids), visible),
        merged_pct=_pct(merged, total),
    )


def write_stats_tsv(report: StatsReport, path: str | Path) -> None:
    d = report.to_dict()
    lines = ["metric\tvalue"] + [f"{k}\t{v}" for k, v in d.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def render_stats_figure(report: StatsReport, path: str | Path) -> None:
    """Two-panel bar chart: absolute counts and percentages of visible."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_counts, ax_pct) = plt.subplots(1, 2, figsize=(10, 4))
    count_labels = ["imported", "merged", "visible", "validated", "deleted", "classified"]
    counts = [
        report.total_imported,
        report.merged_count,
        report.visible_count,
        report.validated_count,
        report.deleted_count,
        report.classified_count,
    ]
    ax_counts.bar(count_labels, counts, color="#4878a8")
    ax_counts.set_ylabel("terms")
    ax_counts.set_title("Term counts")
    ax_counts.tick_params(axis="x", rotation=45)

    pct_labels = ["validated", "deleted", "classified"]
    pcts = [report.validated_pct, report.deleted_pct, report.classified_pct]
    ax_pct.bar(pct_labels, pcts, color="#a85448")
    ax_pct.set_ylabel("% of visible terms")
    ax_pct.set_ylim(0, 100)
    ax_pct.set_title("Validation progress")
    for i, v in enumerate(pcts):
        ax_pct.text(i, v + 1, f"{v:.1f}", ha="center")

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
