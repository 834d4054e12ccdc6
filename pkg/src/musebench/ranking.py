"""Per-model leaderboards with overall and per-skill rank annotations.

Scores arrive per image-text pair; this module folds them into one row
per generation model (mean overall score, mean element score per
category), ranks every column with competition ranking (ties share a
rank, the next rank is skipped) and renders the table as markdown, CSV
or JSON. Output is deterministic: fixed column order, rows sorted by
overall score, shortest-round-trip float serialization.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import ValidationFailure
from .vocab import ELEMENT_CATEGORIES, element_category


@dataclass(frozen=True)
class ModelAggregate:
    """One model's folded scores: mean overall, mean per skill."""

    model_name: str
    overall: float | None
    per_skill: Mapping[str, float] = field(default_factory=dict)
    n_pairs: int = 0


@dataclass(frozen=True)
class Cell:
    value: float
    rank: int


@dataclass(frozen=True)
class RankedTable:
    columns: tuple[str, ...]
    rows: tuple[tuple[str, Mapping[str, Cell]], ...]


def build_aggregates(pairs, scored, *, skip_discarded: bool = True) -> list[ModelAggregate]:
    """Fold per-pair scores into per-model aggregates.

    ``pairs`` supplies the pair -> model mapping; ``scored`` may hold
    aggregated human records (overall/element_truth) or prediction
    records (overall_score/element_scores), and both shapes are read by
    field name. Discarded pairs drop out entirely when skip_discarded
    is set. Pairs lacking a category contribute nothing to that skill
    mean, not zero.
    """
    model_of = {p.pair_id: p.model_name for p in pairs}
    overall_acc: dict[str, list[float]] = {}
    skill_acc: dict[str, dict[str, list[float]]] = {}
    counts: dict[str, int] = {}
    for rec in scored:
        model = model_of.get(rec.pair_id)
        if model is None:
            raise ValidationFailure(f"pair {rec.pair_id!r} has no model mapping")
        if skip_discarded and getattr(rec, "discarded", False):
            continue
        overall = getattr(rec, "overall", None)
        if overall is None:
            overall = getattr(rec, "overall_score", None)
        elements = getattr(rec, "element_truth", None)
        if elements is None:
            elements = getattr(rec, "element_scores", None)
        counts[model] = counts.get(model, 0) + 1
        if overall is not None:
            overall_acc.setdefault(model, []).append(float(overall))
        if elements:
            per_cat = skill_acc.setdefault(model, {})
            for key, value in elements.items():
                per_cat.setdefault(element_category(key), []).append(float(value))
    out = []
    for model in sorted(counts):
        vals = overall_acc.get(model)
        skills = {
            cat: sum(xs) / len(xs)
            for cat, xs in sorted(skill_acc.get(model, {}).items())
        }
        out.append(
            ModelAggregate(
                model_name=model,
                overall=sum(vals) / len(vals) if vals else None,
                per_skill=skills,
                n_pairs=counts[model],
            )
        )
    return out


def _competition_ranks(values: Sequence[float]) -> list[int]:
    # rank = 1 + number of strictly greater values; equal values share
    return [1 + sum(1 for u in values if u > v) for v in values]


def rank_models(aggregates: Sequence[ModelAggregate]) -> RankedTable:
    """Rank every column descending with competition ranking.

    Ties are exact-value ties; inputs meant to tie at display precision
    should be rounded before aggregation. Rows come back ordered by
    overall score (best first), then by model name.
    """
    if not aggregates:
        raise ValidationFailure("need at least one model to rank")
    names = [a.model_name for a in aggregates]
    if len(set(names)) != len(names):
        raise ValidationFailure("duplicate model names in aggregates")
    columns = ("overall",) + ELEMENT_CATEGORIES

    cells: dict[str, dict[str, Cell]] = {name: {} for name in names}
    for col in columns:
        present = []
        for agg in aggregates:
            v = agg.overall if col == "overall" else agg.per_skill.get(col)
            if v is not None:
                present.append((agg.model_name, float(v)))
        ranks = _competition_ranks([v for _, v in present])
        for (name, v), r in zip(present, ranks):
            cells[name][col] = Cell(value=v, rank=r)

    def sort_key(agg: ModelAggregate):
        has = agg.overall is not None
        return (0 if has else 1, -(agg.overall or 0.0), agg.model_name)

    ordered = sorted(aggregates, key=sort_key)
    rows = tuple((a.model_name, dict(cells[a.model_name])) for a in ordered)
    return RankedTable(columns=columns, rows=rows)


def _fmt_cell_md(cell: Cell | None) -> str:
    if cell is None:
        return "-"
    return f"{cell.value:.2f} ({cell.rank})"


def emit_report(table: RankedTable, format: str = "markdown") -> str:
    """Render the table; format is markdown, csv or json."""
    if format in ("markdown", "md"):
        header = "| model | " + " | ".join(table.columns) + " |"
        sep = "|" + "---|" * (len(table.columns) + 1)
        lines = [header, sep]
        for name, row in table.rows:
            cells = " | ".join(_fmt_cell_md(row.get(c)) for c in table.columns)
            lines.append(f"| {name} | {cells} |")
        return "\n".join(lines) + "\n"
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        head = ["model"]
        for col in table.columns:
            head += [col, f"{col}_rank"]
        writer.writerow(head)
        for name, row in table.rows:
            out_row = [name]
            for col in table.columns:
                cell = row.get(col)
                out_row += ["", ""] if cell is None else [repr(cell.value), str(cell.rank)]
            writer.writerow(out_row)
        return buf.getvalue()
    if format == "json":
        payload = {
            "columns": list(table.columns),
            "rows": [
                {
                    "model": name,
                    "cells": {
                        col: {"value": row[col].value, "rank": row[col].rank}
                        for col in table.columns
                        if col in row
                    },
                }
                for name, row in table.rows
            ],
        }
        return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"
    raise ValidationFailure(f"unknown report format {format!r}")


def parse_csv_report(text: str) -> RankedTable:
    """Inverse of emit_report(..., "csv"); exact float round-trip."""
    reader = csv.reader(io.StringIO(text))
    try:
        head = next(reader)
    except StopIteration:
        raise ValidationFailure("empty csv report") from None
    if not head or head[0] != "model" or (len(head) - 1) % 2:
        raise ValidationFailure("malformed csv report header")
    columns = tuple(head[i] for i in range(1, len(head), 2))
    rows = []
    for parts in reader:
        if not parts:
            continue
        name = parts[0]
        row: dict[str, Cell] = {}
        for i, col in enumerate(columns):
            raw_v, raw_r = parts[1 + 2 * i], parts[2 + 2 * i]
            if raw_v == "":
                continue
            row[col] = Cell(value=float(raw_v), rank=int(raw_r))
        rows.append((name, row))
    return RankedTable(columns=columns, rows=tuple(rows))
