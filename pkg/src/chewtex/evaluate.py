"""Evaluation harness: LOSO/LOFTO protocols, aggregation, and reports.

Each protocol fold trains on the non-left-out partition (hyperparameter
search and, for bout level, the codebook included) and predicts the held-out
units.  Reports store per-fold confusion counts so every aggregate number is
recomputable, and offer two aggregations: (avg) is the mean of per-fold
weighted accuracies over folds where the metric is defined, (sum) applies
the metric to the element-wise summed counts.
"""

import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .corpus import ATTRIBUTES, Corpus
from .errors import ConfigError, ProtocolError
from .metrics import ConfusionCounts, positive_prior, prior_weight, weighted_accuracy
from .pipeline import (
    BOUT_LEVEL,
    CHEW_LEVEL,
    TrainConfig,
    model_to_dict,
    predict_bout,
    predict_chews,
    train_bout_level,
    train_chew_level,
    vote_bout,
)
from .serialize import canonical_dumps

REPORT_SCHEMA = "chewtex-report/1"

CHEW_UNIT_LEVEL = "chew"
VOTE_ALL_LEVEL = "vote-all"
VOTE_FIRST_N_LEVEL = "vote-first-n"
BOUT_BOW_LEVEL = "bout-bow"

LEVELS = (CHEW_UNIT_LEVEL, VOTE_ALL_LEVEL, VOTE_FIRST_N_LEVEL, BOUT_BOW_LEVEL)


def loso_splits(corpus: Corpus) -> list:
    """One fold per subject: (train recording ids, test recording ids, subject)."""
    subjects = corpus.subjects()
    if len(subjects) < 2:
        raise ProtocolError(f"leave-one-subject-out needs >= 2 subjects, got {len(subjects)}")
    splits = []
    for subject in subjects:
        test = [rid for rid, rec in sorted(corpus.recordings.items()) if rec.subject_id == subject]
        train = [rid for rid in corpus.recording_ids() if rid not in set(test)]
        splits.append((train, test, subject))
    return splits


def lofto_splits(corpus: Corpus) -> list:
    """One fold per food type, excluding that food across all subjects."""
    foods = corpus.food_types()
    if len(foods) < 2:
        raise ProtocolError(f"leave-one-food-type-out needs >= 2 food types, got {len(foods)}")
    splits = []
    for food in foods:
        test = [rid for rid, rec in sorted(corpus.recordings.items()) if rec.food_type == food]
        train = [rid for rid in corpus.recording_ids() if rid not in set(test)]
        splits.append((train, test, food))
    return splits


def protocol_splits(corpus: Corpus, protocol: str) -> list:
    protocol = protocol.lower()
    if protocol == "loso":
        return loso_splits(corpus)
    if protocol == "lofto":
        return lofto_splits(corpus)
    raise ConfigError(f"unknown protocol {protocol!r} (expected 'loso' or 'lofto')")


@dataclass
class FoldResult:
    fold_key: str
    confusions: dict = field(default_factory=dict)  # attribute -> ConfusionCounts
    degenerate: tuple = ()
    n_test_units: int = 0
    error: str | None = None

    def metric(self, attribute: str) -> float | None:
        try:
            return weighted_accuracy(self.confusions[attribute])
        except (KeyError, ValueError):
            return None

    def prior(self, attribute: str) -> float | None:
        try:
            return positive_prior(self.confusions[attribute])
        except (KeyError, ValueError):
            return None

    def weight(self, attribute: str) -> float | None:
        try:
            return prior_weight(self.confusions[attribute])
        except (KeyError, ValueError, ZeroDivisionError):
            return None


@dataclass
class EvaluationReport:
    protocol: str
    level: str
    folds: list
    config: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    first_n: int | None = None

    def completed_folds(self) -> list:
        return [f for f in self.folds if f.error is None]

    def pooled(self, attribute: str) -> ConfusionCounts:
        total = ConfusionCounts(0, 0, 0, 0)
        for fold in self.completed_folds():
            if attribute in fold.confusions:
                total = total + fold.confusions[attribute]
        return total

    def aggregate(self, attribute: str) -> dict:
        """Both aggregations for one attribute; undefined metrics become None."""
        folds = self.completed_folds()
        defined = [f for f in folds if f.metric(attribute) is not None]
        avg = {
            "prior": _mean_or_none([f.prior(attribute) for f in defined]),
            "weighted_accuracy": _mean_or_none([f.metric(attribute) for f in defined]),
            "w": _mean_or_none([f.weight(attribute) for f in defined]),
            "folds_used": len(defined),
        }
        pooled = self.pooled(attribute)
        try:
            sum_wacc = weighted_accuracy(pooled)
        except ValueError:
            sum_wacc = None
        try:
            sum_prior = positive_prior(pooled)
        except ValueError:
            sum_prior = None
        try:
            sum_w = prior_weight(pooled)
        except (ValueError, ZeroDivisionError):
            sum_w = None
        agg_sum = {
            "prior": sum_prior,
            "weighted_accuracy": sum_wacc,
            "w": sum_w,
            "confusion": pooled.as_dict(),
        }
        return {"avg": avg, "sum": agg_sum}

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "protocol": self.protocol,
            "level": self.level,
            "first_n": self.first_n,
            "config": self.config,
            "warnings": list(self.warnings),
            "folds": [
                {
                    "fold_key": f.fold_key,
                    "n_test_units": f.n_test_units,
                    "degenerate_attributes": list(f.degenerate),
                    "error": f.error,
                    "confusions": {a: c.as_dict() for a, c in f.confusions.items()},
                }
                for f in self.folds
            ],
            "aggregates": {a: self.aggregate(a) for a in ATTRIBUTES},
        }

    def text_table(self) -> str:
        heading = {
            CHEW_UNIT_LEVEL: "Chew level",
            VOTE_ALL_LEVEL: "Majority voting per bout",
            VOTE_FIRST_N_LEVEL: f"Majority voting per bout (first {self.first_n} chews)",
            BOUT_BOW_LEVEL: "Bout level (bag of words)",
        }[self.level]
        lines = [
            f"{self.protocol.upper()} results: {heading}",
            f"{'':16s}{'Prior':>8s}  {'Weighted accuracy':>18s}  {'w':>8s}",
        ]
        for attribute in ATTRIBUTES:
            agg = self.aggregate(attribute)
            for kind in ("avg", "sum"):
                row = agg[kind]
                lines.append(
                    f"{attribute + ' (' + kind + ')':16s}"
                    f"{_fmt(row['prior']):>8s}  {_fmt(row['weighted_accuracy']):>18s}  "
                    f"{_fmt(row['w']):>8s}"
                )
        if any(f.error for f in self.folds):
            failed = [f.fold_key for f in self.folds if f.error]
            lines.append(f"PARTIAL: folds failed: {', '.join(failed)}")
        return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def _mean_or_none(values) -> float | None:
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def report_from_dict(data: dict) -> EvaluationReport:
    if data.get("schema") != REPORT_SCHEMA:
        raise ConfigError(f"unsupported report schema {data.get('schema')!r}")
    folds = []
    for entry in data["folds"]:
        folds.append(
            FoldResult(
                fold_key=entry["fold_key"],
                confusions={
                    a: ConfusionCounts(**c) for a, c in entry["confusions"].items()
                },
                degenerate=tuple(entry.get("degenerate_attributes", ())),
                n_test_units=entry.get("n_test_units", 0),
                error=entry.get("error"),
            )
        )
    return EvaluationReport(
        protocol=data["protocol"],
        level=data["level"],
        folds=folds,
        config=data.get("config", {}),
        warnings=list(data.get("warnings", ())),
        first_n=data.get("first_n"),
    )


# ---------------------------------------------------------------------------
# Fold engine


def _confusion_from_pairs(pairs) -> ConfusionCounts:
    tp = sum(1 for truth, pred in pairs if truth and pred)
    fp = sum(1 for truth, pred in pairs if not truth and pred)
    tn = sum(1 for truth, pred in pairs if not truth and not pred)
    fn = sum(1 for truth, pred in pairs if truth and not pred)
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def _run_chew_fold(corpus, train_ids, test_ids, fold_key, cfg, vote_ns, keep_model):
    """Train once, then produce fold results for the chew level and every
    requested voting variant (None means vote-all)."""
    model = train_chew_level(corpus, train_ids, cfg)
    degenerate = tuple(model.degenerate_attributes())
    chew_pairs = {a: [] for a in ATTRIBUTES}
    vote_pairs = {n: {a: [] for a in ATTRIBUTES} for n in vote_ns}
    n_chews = 0
    n_bouts = 0
    for rid in sorted(test_ids):
        rec = corpus.recordings[rid]
        truth = corpus.labels_for(rid)
        for bout in corpus.bouts.get(rid, ()):
            bout_chews = [c for c in corpus.chews[rid] if c.bout_id == bout.bout_id]
            predictions = predict_chews(model, rec, bout_chews)
            n_chews += len(predictions)
            n_bouts += 1
            for p in predictions:
                for a in ATTRIBUTES:
                    chew_pairs[a].append((truth[a], p.labels[a]))
            for n in vote_ns:
                voted = vote_bout(predictions, n)
                for a in ATTRIBUTES:
                    vote_pairs[n][a].append((truth[a], voted.labels[a]))
    chew_fold = FoldResult(
        fold_key=fold_key,
        confusions={a: _confusion_from_pairs(chew_pairs[a]) for a in ATTRIBUTES},
        degenerate=degenerate,
        n_test_units=n_chews,
    )
    vote_folds = {
        n: FoldResult(
            fold_key=fold_key,
            confusions={a: _confusion_from_pairs(vote_pairs[n][a]) for a in ATTRIBUTES},
            degenerate=degenerate,
            n_test_units=n_bouts,
        )
        for n in vote_ns
    }
    return chew_fold, vote_folds, _model_json(model) if keep_model else None


def _model_json(model) -> str:
    return canonical_dumps(model_to_dict(model))


def _run_bout_fold(corpus, train_ids, test_ids, fold_key, cfg, keep_model):
    model = train_bout_level(corpus, train_ids, cfg)
    degenerate = tuple(model.degenerate_attributes())
    pairs = {a: [] for a in ATTRIBUTES}
    n_bouts = 0
    for rid in sorted(test_ids):
        rec = corpus.recordings[rid]
        truth = corpus.labels_for(rid)
        for bout in corpus.bouts.get(rid, ()):
            prediction = predict_bout(model, rec, bout)
            n_bouts += 1
            for a in ATTRIBUTES:
                pairs[a].append((truth[a], prediction.labels[a]))
    return (
        FoldResult(
            fold_key=fold_key,
            confusions={a: _confusion_from_pairs(pairs[a]) for a in ATTRIBUTES},
            degenerate=degenerate,
            n_test_units=n_bouts,
        ),
        _model_json(model) if keep_model else None,
    )


_WORKER_STATE: dict = {}


def _fold_worker_init(corpus, cfg, mode, vote_ns, keep_model):
    _WORKER_STATE.update(
        corpus=corpus, cfg=cfg, mode=mode, vote_ns=vote_ns, keep_model=keep_model
    )


def _fold_worker(args):
    train_ids, test_ids, fold_key = args
    corpus = _WORKER_STATE["corpus"]
    cfg = _WORKER_STATE["cfg"]
    try:
        if _WORKER_STATE["mode"] == CHEW_LEVEL:
            return _run_chew_fold(
                corpus, train_ids, test_ids, fold_key, cfg,
                _WORKER_STATE["vote_ns"], _WORKER_STATE["keep_model"],
            )
        return _run_bout_fold(
            corpus, train_ids, test_ids, fold_key, cfg, _WORKER_STATE["keep_model"]
        )
    except Exception:  # fold failures become per-fold report entries
        return fold_key, traceback.format_exc(limit=4)


def _map_folds(corpus, splits, cfg, mode, vote_ns, jobs, keep_model=False):
    tasks = [(train, test, key) for train, test, key in splits]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(
            max_workers=jobs,
            initializer=_fold_worker_init,
            initargs=(corpus, cfg, mode, vote_ns, keep_model),
        ) as pool:
            return list(pool.map(_fold_worker, tasks))
    _fold_worker_init(corpus, cfg, mode, vote_ns, keep_model)
    return [_fold_worker(task) for task in tasks]


def _write_fold_model(models_dir, fold_key, model_json) -> None:
    from pathlib import Path

    directory = Path(models_dir)
    directory.mkdir(parents=True, exist_ok=True)
    safe = fold_key.replace(" ", "_")
    (directory / f"{safe}.json").write_text(model_json, encoding="utf-8")


def run_chew_protocol(corpus, protocol, cfg: TrainConfig = TrainConfig(),
                      vote_ns=(None,), jobs: int = 1, save_models_dir=None) -> dict:
    """One training pass per fold serving the chew level plus voting variants.

    Returns {level_key: EvaluationReport} with level keys 'chew', 'vote-all',
    and 'vote-first-{n}' for each requested n.  With save_models_dir set,
    each fold's trained model is written there as canonical JSON.
    """
    splits = protocol_splits(corpus, protocol)
    results = _map_folds(
        corpus, splits, cfg, CHEW_LEVEL, tuple(vote_ns), jobs,
        keep_model=save_models_dir is not None,
    )
    chew_folds, warnings = [], []
    vote_folds = {n: [] for n in vote_ns}
    for (train, test, key), outcome in zip(splits, results):
        if isinstance(outcome[0], str):
            fold_key, error = outcome
            warnings.append(f"fold {fold_key} failed: {error.splitlines()[-1]}")
            chew_folds.append(FoldResult(fold_key=fold_key, error=error))
            for n in vote_ns:
                vote_folds[n].append(FoldResult(fold_key=fold_key, error=error))
            continue
        chew_fold, per_n, model_json = outcome
        if model_json is not None:
            _write_fold_model(save_models_dir, chew_fold.fold_key, model_json)
        chew_folds.append(chew_fold)
        for n in vote_ns:
            vote_folds[n].append(per_n[n])
    snapshot = cfg.snapshot()
    reports = {
        CHEW_UNIT_LEVEL: EvaluationReport(
            protocol=protocol, level=CHEW_UNIT_LEVEL, folds=chew_folds,
            config=snapshot, warnings=list(warnings),
        )
    }
    for n in vote_ns:
        level = VOTE_ALL_LEVEL if n is None else VOTE_FIRST_N_LEVEL
        key = VOTE_ALL_LEVEL if n is None else f"vote-first-{n}"
        reports[key] = EvaluationReport(
            protocol=protocol, level=level, folds=vote_folds[n],
            config=snapshot, warnings=list(warnings), first_n=n,
        )
    return reports


def run_bout_protocol(corpus, protocol, cfg: TrainConfig = TrainConfig(),
                      jobs: int = 1, save_models_dir=None) -> EvaluationReport:
    splits = protocol_splits(corpus, protocol)
    results = _map_folds(
        corpus, splits, cfg, BOUT_LEVEL, (), jobs,
        keep_model=save_models_dir is not None,
    )
    folds, warnings = [], []
    for (train, test, key), outcome in zip(splits, results):
        if isinstance(outcome[0], str):
            fold_key, error = outcome
            warnings.append(f"fold {fold_key} failed: {error.splitlines()[-1]}")
            folds.append(FoldResult(fold_key=fold_key, error=error))
        else:
            fold, model_json = outcome
            if model_json is not None:
                _write_fold_model(save_models_dir, fold.fold_key, model_json)
            folds.append(fold)
    return EvaluationReport(
        protocol=protocol, level=BOUT_BOW_LEVEL, folds=folds,
        config=cfg.snapshot(), warnings=warnings,
    )


def run_protocol(corpus, protocol: str, level: str, cfg: TrainConfig = TrainConfig(),
                 first_n: int | None = None, jobs: int = 1) -> EvaluationReport:
    """Train and evaluate one protocol at one level."""
    if level == BOUT_BOW_LEVEL:
        return run_bout_protocol(corpus, protocol, cfg, jobs=jobs)
    if level == CHEW_UNIT_LEVEL:
        return run_chew_protocol(corpus, protocol, cfg, vote_ns=(), jobs=jobs)[CHEW_UNIT_LEVEL]
    if level == VOTE_ALL_LEVEL:
        return run_chew_protocol(corpus, protocol, cfg, vote_ns=(None,), jobs=jobs)[VOTE_ALL_LEVEL]
    if level == VOTE_FIRST_N_LEVEL:
        if first_n is None or first_n < 1:
            raise ConfigError("level 'vote-first-n' requires first_n >= 1")
        reports = run_chew_protocol(corpus, protocol, cfg, vote_ns=(first_n,), jobs=jobs)
        return reports[f"vote-first-{first_n}"]
    raise ConfigError(f"unknown level {level!r} (expected one of {LEVELS})")


@dataclass
class SweepResult:
    protocol: str
    n_values: tuple
    reports: dict  # n -> EvaluationReport
    vote_all: EvaluationReport

    def curve(self, attribute: str) -> list:
        return [
            self.reports[n].aggregate(attribute)["sum"]["weighted_accuracy"]
            for n in self.n_values
        ]

    def to_csv_text(self) -> str:
        lines = ["attribute,n,weighted_accuracy"]
        for attribute in ATTRIBUTES:
            for n, wacc in zip(self.n_values, self.curve(attribute)):
                lines.append(f"{attribute},{n},{'' if wacc is None else repr(wacc)}")
        return "\n".join(lines) + "\n"


def first_n_sweep(corpus, protocol: str, cfg: TrainConfig = TrainConfig(),
                  n_max: int = 20, jobs: int = 1) -> SweepResult:
    """Voting curves for n = 1..n_max; models are trained once per fold."""
    if n_max < 1:
        raise ConfigError(f"n_max must be >= 1, got {n_max}")
    ns = tuple(range(1, n_max + 1))
    reports = run_chew_protocol(corpus, protocol, cfg, vote_ns=(None,) + ns, jobs=jobs)
    return SweepResult(
        protocol=protocol,
        n_values=ns,
        reports={n: reports[f"vote-first-{n}"] for n in ns},
        vote_all=reports[VOTE_ALL_LEVEL],
    )
