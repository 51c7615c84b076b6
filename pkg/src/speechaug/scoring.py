"""Edit-distance alignment and error-rate scoring.

Alignment uses unit costs for substitution, deletion and insertion. Among
cost-equal alignments the backtrace prefers hit, then substitution, then
deletion, then insertion, which makes the operation sequence deterministic.
Word error rate is errors over reference length, as a percentage; the same
computation over morpheme tokens gives the morpheme-level rate.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field


class EmptyReference(ValueError):
    def __init__(self, index: int | None = None):
        where = "" if index is None else f" at pair {index}"
        super().__init__(f"reference is empty{where}")
        self.index = index


@dataclass(frozen=True)
class EditAlignment:
    hits: int
    substitutions: int
    deletions: int
    insertions: int
    ops: tuple[str, ...]

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def align(ref: Sequence[str], hyp: Sequence[str]) -> EditAlignment:
    """Minimum-edit alignment of hypothesis against reference."""
    n, m = len(ref), len(hyp)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            same = ref[i - 1] == hyp[j - 1]
            dist[i][j] = min(
                dist[i - 1][j - 1] + (0 if same else 1),
                dist[i - 1][j] + 1,
                dist[i][j - 1] + 1,
            )

    ops: list[str] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dist[i][j] == dist[i - 1][j - 1]:
            ops.append("hit")
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + 1:
            ops.append("sub")
            i, j = i - 1, j - 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            ops.append("del")
            i -= 1
        else:
            ops.append("ins")
            j -= 1
    ops.reverse()

    return EditAlignment(
        hits=sum(1 for o in ops if o == "hit"),
        substitutions=sum(1 for o in ops if o == "sub"),
        deletions=sum(1 for o in ops if o == "del"),
        insertions=sum(1 for o in ops if o == "ins"),
        ops=tuple(ops),
    )


def wer(ref: Sequence[str], hyp: Sequence[str]) -> float:
    """100 * (S + D + I) / len(ref)."""
    if len(ref) == 0:
        raise EmptyReference()
    return 100.0 * align(ref, hyp).errors / len(ref)


def ter(ref_text: str, hyp_text: str, segmenter) -> float:
    """Error rate over morpheme tokens instead of words.

    Both sides are tokenized, suffix-standardized and segmented with the
    given segmenter; the flattened morpheme sequences are then aligned like
    words.
    """
    ref = segmenter.morphemes(ref_text)
    hyp = segmenter.morphemes(hyp_text)
    if not ref:
        raise EmptyReference()
    return 100.0 * align(ref, hyp).errors / len(ref)


def corpus_score(pairs: Sequence[tuple[Sequence[str], Sequence[str]]]) -> float:
    """Pooled rate over many pairs: total errors over total reference length.

    Never the mean of per-sentence rates; short sentences must not dominate.
    """
    total_errors = 0
    total_ref = 0
    for index, (ref, hyp) in enumerate(pairs):
        if len(ref) == 0:
            raise EmptyReference(index)
        total_errors += align(ref, hyp).errors
        total_ref += len(ref)
    if total_ref == 0:
        raise EmptyReference()
    return 100.0 * total_errors / total_ref


@dataclass
class ReportRow:
    label: str
    training_data: str
    hours: str
    wer: float | None = None
    ter: float | None = None


@dataclass
class ScoreReport:
    """Experiment summary table, one row per system variant."""

    rows: list[ReportRow] = field(default_factory=list)
    title: str = ""

    def _cells(self, with_ter: bool) -> list[list[str]]:
        head = ["Experiment", "Training data", "Training hours", "WER %"]
        if with_ter:
            head.append("TER %")
        table = [head]
        for row in self.rows:
            cells = [
                row.label,
                row.training_data,
                row.hours,
                "pending" if row.wer is None else f"{row.wer:.2f}",
            ]
            if with_ter:
                cells.append("pending" if row.ter is None else f"{row.ter:.2f}")
            table.append(cells)
        return table

    def to_tsv(self) -> str:
        with_ter = any(r.ter is not None for r in self.rows)
        return "\n".join("\t".join(cells) for cells in self._cells(with_ter)) + "\n"

    def to_text(self) -> str:
        with_ter = any(r.ter is not None for r in self.rows)
        table = self._cells(with_ter)
        widths = [max(len(row[c]) for row in table) for c in range(len(table[0]))]
        lines = []
        if self.title:
            lines.append(self.title)
        for idx, row in enumerate(table):
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
            if idx == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"
