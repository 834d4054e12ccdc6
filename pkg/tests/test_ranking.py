"""Model leaderboards: aggregation by field name, competition ranking
on a frozen score column, and report round-trips."""

import pytest

from musebench.errors import ValidationFailure
from musebench.ranking import (
    Cell,
    ModelAggregate,
    build_aggregates,
    emit_report,
    parse_csv_report,
    rank_models,
)
from musebench.records import AggregatedPair, ImagePair, PredictionRecord

# a realistic leaderboard column with three tie groups; competition
# ranking shares the rank inside a group and skips the next ones
FROZEN_OVERALL = [
    3.74, 3.63, 3.47, 3.33, 3.27, 3.20, 3.15, 3.08, 3.08, 2.99, 2.98,
    2.93, 2.93, 2.93, 2.88, 2.77, 2.77, 2.73, 2.66, 2.42, 2.25, 2.25,
]
FROZEN_RANKS = [1, 2, 3, 4, 5, 6, 7, 8, 8, 10, 11, 12, 12, 12, 15, 16, 16, 18, 19, 20, 21, 21]


class TestCompetitionRanking:
    def test_frozen_column(self):
        aggs = [
            ModelAggregate(model_name=f"m{i + 1:02d}", overall=v, n_pairs=1)
            for i, v in enumerate(FROZEN_OVERALL)
        ]
        table = rank_models(aggs)
        got = [(name, row["overall"].rank) for name, row in table.rows]
        assert [r for _, r in got] == FROZEN_RANKS
        # already sorted best-first, so names stay in input order
        assert [n for n, _ in got] == [f"m{i + 1:02d}" for i in range(22)]

    def test_rows_sorted_by_overall_then_name(self):
        aggs = [
            ModelAggregate("zeta", 2.0),
            ModelAggregate("alpha", 3.0),
            ModelAggregate("beta", 2.0),
        ]
        table = rank_models(aggs)
        assert [n for n, _ in table.rows] == ["alpha", "beta", "zeta"]
        assert table.rows[1][1]["overall"].rank == 2
        assert table.rows[2][1]["overall"].rank == 2

    def test_skill_columns_ranked_independently(self):
        aggs = [
            ModelAggregate("a", 3.0, {"color": 0.9, "counting": 0.2}),
            ModelAggregate("b", 2.0, {"color": 0.4, "counting": 0.8}),
        ]
        table = rank_models(aggs)
        rows = dict(table.rows)
        assert rows["a"]["color"].rank == 1
        assert rows["b"]["color"].rank == 2
        assert rows["a"]["counting"].rank == 2
        assert rows["b"]["counting"].rank == 1

    def test_missing_overall_sinks_to_bottom(self):
        aggs = [ModelAggregate("only-skills", None, {"color": 0.5}), ModelAggregate("scored", 1.0)]
        table = rank_models(aggs)
        assert [n for n, _ in table.rows] == ["scored", "only-skills"]
        assert "overall" not in dict(table.rows)["only-skills"]

    def test_duplicate_model_rejected(self):
        aggs = [ModelAggregate("m", 1.0), ModelAggregate("m", 2.0)]
        with pytest.raises(ValidationFailure, match="duplicate"):
            rank_models(aggs)

    def test_empty_rejected(self):
        with pytest.raises(ValidationFailure):
            rank_models([])


PAIRS = [
    ImagePair("pr-1", "p-1", "model-a", "u1"),
    ImagePair("pr-2", "p-2", "model-a", "u2"),
    ImagePair("pr-3", "p-1", "model-b", "u3"),
    ImagePair("pr-4", "p-2", "model-b", "u4"),
]


class TestBuildAggregates:
    def test_from_human_truth(self):
        scored = [
            AggregatedPair("pr-1", 4.0, {"fox (animal)": 1.0}, False, False),
            AggregatedPair("pr-2", 2.0, {"cup (object)": 0.5}, False, False),
            AggregatedPair("pr-3", 5.0, {}, False, False),
        ]
        aggs = build_aggregates(PAIRS, scored)
        by_name = {a.model_name: a for a in aggs}
        assert by_name["model-a"].overall == 3.0
        assert by_name["model-a"].n_pairs == 2
        assert by_name["model-a"].per_skill == {"animal": 1.0, "object": 0.5}
        assert by_name["model-b"].overall == 5.0

    def test_from_predictions(self):
        scored = [
            PredictionRecord("pr-1", "pn_vqa", 0.8, {"fox (animal)": 0.9}),
            PredictionRecord("pr-3", "pn_vqa", 0.4, {"fox (animal)": 0.3}),
        ]
        aggs = build_aggregates(PAIRS, scored)
        by_name = {a.model_name: a for a in aggs}
        assert by_name["model-a"].overall == 0.8
        assert by_name["model-b"].per_skill == {"animal": 0.3}

    def test_discarded_skipped_unless_kept(self):
        scored = [
            AggregatedPair("pr-1", 4.0, {}, False, True),
            AggregatedPair("pr-2", 2.0, {}, False, False),
        ]
        aggs = build_aggregates(PAIRS, scored)
        assert {a.model_name: a.overall for a in aggs} == {"model-a": 2.0}
        kept = build_aggregates(PAIRS, scored, skip_discarded=False)
        assert {a.model_name: a.overall for a in kept} == {"model-a": 3.0}

    def test_unknown_pair_rejected(self):
        scored = [AggregatedPair("pr-99", 4.0, {}, False, False)]
        with pytest.raises(ValidationFailure, match="model mapping"):
            build_aggregates(PAIRS, scored)

    def test_category_mean_ignores_absent_categories(self):
        scored = [
            PredictionRecord("pr-1", "s", 0.5, {"fox (animal)": 1.0}),
            PredictionRecord("pr-2", "s", 0.5, {"cup (object)": 0.0}),
        ]
        (agg,) = [a for a in build_aggregates(PAIRS, scored) if a.model_name == "model-a"]
        # one observation per category, no zero-filling across pairs
        assert agg.per_skill == {"animal": 1.0, "object": 0.0}


class TestReports:
    def table(self):
        aggs = [
            ModelAggregate("model-a", 3.14159, {"color": 0.25}),
            ModelAggregate("model-b", 2.5, {"color": 0.75, "shape": 0.5}),
        ]
        return rank_models(aggs)

    def test_markdown_shape(self):
        text = emit_report(self.table(), "markdown")
        lines = text.splitlines()
        assert lines[0].startswith("| model | overall |")
        assert lines[2].startswith("| model-a | 3.14 (1) |")
        assert " - " in lines[2]  # absent skill renders as a dash
        assert emit_report(self.table(), "md") == text

    def test_csv_round_trip_is_exact(self):
        table = self.table()
        back = parse_csv_report(emit_report(table, "csv"))
        assert back.columns == table.columns
        assert back.rows == table.rows

    def test_json_shape(self):
        import json

        payload = json.loads(emit_report(self.table(), "json"))
        assert payload["columns"][0] == "overall"
        row = payload["rows"][0]
        assert row["model"] == "model-a"
        assert row["cells"]["overall"] == {"value": 3.14159, "rank": 1}

    def test_unknown_format(self):
        with pytest.raises(ValidationFailure):
            emit_report(self.table(), "xml")

    def test_csv_parse_rejects_garbage(self):
        with pytest.raises(ValidationFailure):
            parse_csv_report("")
        with pytest.raises(ValidationFailure):
            parse_csv_report("who,knows\n")


class TestCellEquality:
    def test_cells_compare_by_value(self):
        assert Cell(1.0, 2) == Cell(1.0, 2)
        assert Cell(1.0, 2) != Cell(1.0, 3)
