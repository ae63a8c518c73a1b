"""Gain-based feature importance for trained ensembles.

Each accepted split contributes its realized gain to the split feature's
total. Appended network columns ("attn_*") can be collapsed into a single
"attention_block" row so reports show original features alongside one
aggregate for the learned block.
"""

from __future__ import annotations

from dataclasses import dataclass

from .gbdt import Ensemble, TreeNode

ATTENTION_PREFIX = "attn_"
ATTENTION_BLOCK = "attention_block"


@dataclass
class ImportanceEntry:
    feature: str
    gain: float
    splits: int
    share: float


@dataclass
class ImportanceTable:
    entries: list[ImportanceEntry]
    attention_block_share: float


def _walk(node: TreeNode):
    if node.is_leaf:
        return
    yield node
    yield from _walk(node.left)
    yield from _walk(node.right)


def gain_importance(model: Ensemble) -> ImportanceTable:
    """Sum realized split gains per feature over every tree."""
    gains = {name: 0.0 for name in model.feature_names}
    splits = {name: 0 for name in model.feature_names}
    for root in model.trees:
        for node in _walk(root):
            name = model.feature_names[node.feature]
            gains[name] += node.gain
            splits[name] += 1
    total = sum(gains.values())
    entries = [
        ImportanceEntry(
            feature=name,
            gain=gains[name],
            splits=splits[name],
            share=gains[name] / total if total > 0 else 0.0,
        )
        for name in model.feature_names
    ]
    entries.sort(key=lambda e: (-e.gain, e.feature))
    attention_share = sum(e.share for e in entries if e.feature.startswith(ATTENTION_PREFIX))
    return ImportanceTable(entries=entries, attention_block_share=attention_share)


def collapse_attention_block(table: ImportanceTable) -> ImportanceTable:
    """Merge all attn_* rows into one attention_block row; totals unchanged."""
    attn = [e for e in table.entries if e.feature.startswith(ATTENTION_PREFIX)]
    if not attn:
        return table
    kept = [e for e in table.entries if not e.feature.startswith(ATTENTION_PREFIX)]
    merged = ImportanceEntry(
        feature=ATTENTION_BLOCK,
        gain=sum(e.gain for e in attn),
        splits=sum(e.splits for e in attn),
        share=sum(e.share for e in attn),
    )
    entries = kept + [merged]
    entries.sort(key=lambda e: (-e.gain, e.feature))
    return ImportanceTable(entries=entries, attention_block_share=merged.share)


def rank_report(table: ImportanceTable, top_n: int | None = None) -> tuple[str, str]:
    """(aligned text, CSV) rankings, descending gain with alphabetical ties."""
    ranked = sorted(table.entries, key=lambda e: (-e.gain, e.feature))
    if top_n is not None:
        ranked = ranked[:top_n]
    csv_lines = ["rank,feature,gain,share,splits"]
    for rank, e in enumerate(ranked, start=1):
        csv_lines.append(f"{rank},{e.feature},{e.gain:.6f},{e.share:.6f},{e.splits}")
    name_w = max([len("feature")] + [len(e.feature) for e in ranked])
    text_lines = [f"{'rank':>4}  {'feature'.ljust(name_w)}  {'gain':>12}  {'share':>8}  {'splits':>6}"]
    for rank, e in enumerate(ranked, start=1):
        text_lines.append(
            f"{rank:>4}  {e.feature.ljust(name_w)}  {e.gain:>12.6f}  {e.share:>8.4f}  {e.splits:>6}"
        )
    return "\n".join(text_lines), "\n".join(csv_lines)
