import numpy as np
import pytest

from chewtex import ATTRIBUTES, first_n_sweep, lofto_splits, loso_splits, run_protocol
from chewtex.errors import ConfigError, ProtocolError
from chewtex.evaluate import (
    EvaluationReport,
    FoldResult,
    protocol_splits,
    report_from_dict,
    run_chew_protocol,
)
from chewtex.metrics import ConfusionCounts, weighted_accuracy
from chewtex.serialize import canonical_dumps, to_jsonable

from conftest import FAST_TRAIN


class TestSplits:
    def test_loso_partitions_subjects(self, small_corpus):
        splits = loso_splits(small_corpus)
        assert len(splits) == 3
        test_subjects = [key for _, _, key in splits]
        assert sorted(test_subjects) == small_corpus.subjects()
        all_test = [rid for _, test, _ in splits for rid in test]
        assert sorted(all_test) == small_corpus.recording_ids()
        for train, test, _ in splits:
            assert not set(train) & set(test)
            assert sorted(train + test) == small_corpus.recording_ids()

    def test_lofto_partitions_foods(self, small_corpus):
        splits = lofto_splits(small_corpus)
        assert len(splits) == 9
        assert sorted(key for _, _, key in splits) == small_corpus.food_types()
        all_test = [rid for _, test, _ in splits for rid in test]
        assert sorted(all_test) == small_corpus.recording_ids()

    def test_lofto_leaves_other_chewy_food(self, small_corpus):
        splits = {key: train for train, _, key in lofto_splits(small_corpus)}
        for left_out, other in (("toffee", "candy bar"), ("candy bar", "toffee")):
            foods = {
                small_corpus.recordings[rid].food_type for rid in splits[left_out]
            }
            assert left_out not in foods
            assert other in foods

    def test_too_few_subjects_rejected(self, small_corpus):
        one_subject = type(small_corpus)(
            recordings={
                rid: rec for rid, rec in small_corpus.recordings.items()
                if rec.subject_id == "s01"
            },
            chews=small_corpus.chews,
            bouts=small_corpus.bouts,
            label_table=small_corpus.label_table,
        )
        with pytest.raises(ProtocolError):
            loso_splits(one_subject)

    def test_unknown_protocol(self, small_corpus):
        with pytest.raises(ConfigError):
            protocol_splits(small_corpus, "bootstrap")


@pytest.fixture(scope="module")
def loso_reports(small_preprocessed):
    return run_chew_protocol(
        small_preprocessed, "loso", FAST_TRAIN, vote_ns=(None, 3)
    )


class TestRunProtocol:
    def test_chew_level_report_structure(self, loso_reports):
        report = loso_reports["chew"]
        assert report.protocol == "loso"
        assert len(report.folds) == 3
        for fold in report.folds:
            assert fold.error is None
            assert set(fold.confusions) == set(ATTRIBUTES)
            assert fold.n_test_units > 0
        agg = report.aggregate("crispy")
        assert agg["sum"]["weighted_accuracy"] is not None
        assert 0.0 <= agg["sum"]["weighted_accuracy"] <= 1.0

    def test_separable_synthetic_scores_high(self, loso_reports):
        for attribute in ATTRIBUTES:
            agg = loso_reports["vote-all"].aggregate(attribute)
            assert agg["sum"]["weighted_accuracy"] >= 0.8

    def test_aggregations_coincide_for_identical_folds(self):
        folds = [
            FoldResult(
                fold_key=f"f{i}",
                confusions={a: ConfusionCounts(8, 2, 8, 2) for a in ATTRIBUTES},
                n_test_units=20,
            )
            for i in range(4)
        ]
        report = EvaluationReport(protocol="loso", level="chew", folds=folds)
        for attribute in ATTRIBUTES:
            agg = report.aggregate(attribute)
            assert agg["avg"]["weighted_accuracy"] == pytest.approx(
                agg["sum"]["weighted_accuracy"], abs=1e-12
            )
            assert agg["avg"]["prior"] == pytest.approx(agg["sum"]["prior"], abs=1e-12)

    def test_undefined_fold_excluded_from_avg_merged_into_sum(self):
        defined = FoldResult(
            fold_key="a",
            confusions={a: ConfusionCounts(5, 1, 5, 1) for a in ATTRIBUTES},
            n_test_units=12,
        )
        undefined = FoldResult(
            fold_key="b",
            confusions={a: ConfusionCounts(0, 1, 11, 0) for a in ATTRIBUTES},
            n_test_units=12,
        )
        report = EvaluationReport(protocol="loso", level="chew", folds=[defined, undefined])
        agg = report.aggregate("crispy")
        assert agg["avg"]["folds_used"] == 1
        assert agg["avg"]["weighted_accuracy"] == pytest.approx(
            weighted_accuracy(ConfusionCounts(5, 1, 5, 1))
        )
        pooled = ConfusionCounts(5, 2, 16, 1)
        assert agg["sum"]["weighted_accuracy"] == pytest.approx(weighted_accuracy(pooled))

    def test_all_folds_undefined_marks_none(self):
        fold = FoldResult(
            fold_key="a",
            confusions={a: ConfusionCounts(0, 2, 10, 0) for a in ATTRIBUTES},
            n_test_units=12,
        )
        report = EvaluationReport(protocol="loso", level="chew", folds=[fold])
        agg = report.aggregate("crispy")
        assert agg["avg"]["weighted_accuracy"] is None
        assert agg["sum"]["weighted_accuracy"] is None
        assert "n/a" in report.text_table()

    def test_report_roundtrips_and_recomputes(self, loso_reports):
        report = loso_reports["chew"]
        data = to_jsonable(report.to_dict())
        rebuilt = report_from_dict(data)
        assert canonical_dumps(rebuilt.to_dict()) == canonical_dumps(report.to_dict())
        # stored aggregates equal recomputation from per-fold confusions
        for attribute in ATTRIBUTES:
            stored = data["aggregates"][attribute]["sum"]["weighted_accuracy"]
            pooled = ConfusionCounts(0, 0, 0, 0)
            for fold in data["folds"]:
                c = fold["confusions"][attribute]
                pooled = pooled + ConfusionCounts(**c)
            assert stored == pytest.approx(weighted_accuracy(pooled), abs=1e-12)

    def test_run_protocol_levels(self, small_preprocessed):
        report = run_protocol(
            small_preprocessed, "loso", "vote-first-n", FAST_TRAIN, first_n=2
        )
        assert report.level == "vote-first-n"
        assert report.first_n == 2
        with pytest.raises(ConfigError):
            run_protocol(small_preprocessed, "loso", "vote-first-n", FAST_TRAIN)
        with pytest.raises(ConfigError):
            run_protocol(small_preprocessed, "loso", "nope", FAST_TRAIN)

    def test_jobs_parallelism_is_equivalent(self, small_preprocessed, loso_reports):
        parallel = run_chew_protocol(
            small_preprocessed, "loso", FAST_TRAIN, vote_ns=(None, 3), jobs=2
        )
        for key in ("chew", "vote-all", "vote-first-3"):
            assert canonical_dumps(parallel[key].to_dict()) == canonical_dumps(
                loso_reports[key].to_dict()
            )

    def test_bout_protocol(self, small_preprocessed):
        cfg = type(FAST_TRAIN)(**{**FAST_TRAIN.__dict__, "k": 16})
        report = run_protocol(small_preprocessed, "loso", "bout-bow", cfg)
        assert report.level == "bout-bow"
        assert len(report.folds) == 3
        for fold in report.folds:
            assert fold.error is None
            assert fold.n_test_units == 9  # one bout per recording, 9 foods


class TestSweep:
    def test_sweep_shapes_and_saturation(self, small_preprocessed):
        sweep = first_n_sweep(small_preprocessed, "loso", FAST_TRAIN, n_max=12)
        assert sweep.n_values == tuple(range(1, 13))
        max_chews = max(
            len(b.chew_ids)
            for bouts in small_preprocessed.bouts.values()
            for b in bouts
        )
        assert max_chews <= 12
        # at n >= max chews per bout, per-fold confusions equal vote-all exactly
        saturated = sweep.reports[12]
        for fold_sat, fold_all in zip(saturated.folds, sweep.vote_all.folds):
            for attribute in ATTRIBUTES:
                assert fold_sat.confusions[attribute] == fold_all.confusions[attribute]

    def test_n1_is_first_chew_classification(self, small_preprocessed):
        sweep = first_n_sweep(small_preprocessed, "loso", FAST_TRAIN, n_max=1)
        report = sweep.reports[1]
        # every bout contributes exactly one (first-chew) decision
        n_bouts = sum(len(b) for b in small_preprocessed.bouts.values())
        assert sum(f.n_test_units for f in report.folds) == n_bouts

    def test_csv_format(self, small_preprocessed):
        sweep = first_n_sweep(small_preprocessed, "loso", FAST_TRAIN, n_max=2)
        lines = sweep.to_csv_text().strip().splitlines()
        assert lines[0] == "attribute,n,weighted_accuracy"
        assert len(lines) == 1 + 2 * len(ATTRIBUTES)
        for line in lines[1:]:
            attribute, n, wacc = line.split(",")
            assert attribute in ATTRIBUTES
            assert int(n) in (1, 2)
            float(wacc)


def test_text_table_layout(loso_reports):
    table = loso_reports["chew"].text_table()
    assert "LOSO results" in table
    assert "Prior" in table and "Weighted accuracy" in table and "w" in table
    for attribute in ATTRIBUTES:
        assert f"{attribute} (avg)" in table
        assert f"{attribute} (sum)" in table


def test_partial_fold_failure_recorded_not_fatal(small_preprocessed, monkeypatch):
    import chewtex.evaluate as ev

    real_train = ev.train_chew_level

    def flaky(corpus, train_ids, cfg):
        test_subjects = {corpus.recordings[rid].subject_id for rid in corpus.recordings}
        train_subjects = {corpus.recordings[rid].subject_id for rid in train_ids}
        if (test_subjects - train_subjects) == {"s02"}:
            raise RuntimeError("injected fold failure")
        return real_train(corpus, train_ids, cfg)

    monkeypatch.setattr(ev, "train_chew_level", flaky)
    reports = run_chew_protocol(small_preprocessed, "loso", FAST_TRAIN, vote_ns=(None,))
    report = reports["chew"]
    by_key = {fold.fold_key: fold for fold in report.folds}
    assert by_key["s02"].error is not None
    assert "injected fold failure" in by_key["s02"].error
    assert by_key["s01"].error is None and by_key["s03"].error is None
    assert any("s02" in w for w in report.warnings)
    assert "PARTIAL" in report.text_table()
    # aggregates still computable from the completed folds
    assert report.aggregate("crispy")["sum"]["weighted_accuracy"] is not None
