"""The two end-to-end recognition algorithms.

Chew level: per-chew features -> standardizer -> one binary RBF SVM per
attribute, each tuned by GP hyperparameter search over stratified CV on the
training chews; bout decisions by majority voting (optionally over only the
first n chews).

Bout level: overlapping 0.5 s windows -> features -> k-means codebook ->
normalized bag-of-words histogram per bout -> standardizer -> the same SVM
stack.

Everything fitted (standardizers, codebook, hyperparameters, SVMs) is a
function of the training partition only, and training is deterministic for
a fixed seed.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .corpus import ATTRIBUTES, AudioRecording, BoutAnnotation, Corpus
from .errors import ConfigError, SchemaError, ValidationError
from .features import (
    DEFAULT_BAND_EDGES_HZ,
    DEFAULT_ORDER_P,
    DEFAULT_STEP_S,
    DEFAULT_WINDOW_S,
    BandPlan,
    extract_matrix,
    window_bout,
)
from .learn import (
    Codebook,
    CvSvmScorer,
    HpoConfig,
    Standardizer,
    SvmModel,
    apply_standardizer,
    bayes_opt,
    bow_encode,
    fit_standardizer,
    kmeans_fit,
    svm_train,
)
from .serialize import read_json, write_json

MODEL_SCHEMA = "chewtex-model/1"

CHEW_LEVEL = "chew"
BOUT_LEVEL = "bout"


@dataclass(frozen=True)
class TrainConfig:
    band_edges_hz: tuple = DEFAULT_BAND_EDGES_HZ
    order_p: int = DEFAULT_ORDER_P
    k: int = 64
    hpo: HpoConfig = field(default_factory=HpoConfig)
    seed: int = 0
    svm_tol: float = 1e-3
    svm_max_iter: int = 100_000
    win_s: float = DEFAULT_WINDOW_S
    step_s: float = DEFAULT_STEP_S

    def snapshot(self) -> dict:
        return {
            "band_edges_hz": list(self.band_edges_hz),
            "order_p": self.order_p,
            "k": self.k,
            "hpo": {
                "log2_c_range": list(self.hpo.log2_c_range),
                "log2_gamma_range": list(self.hpo.log2_gamma_range),
                "budget": self.hpo.budget,
                "n_init": self.hpo.n_init,
                "posterior_std_threshold": self.hpo.posterior_std_threshold,
                "folds": self.hpo.folds,
            },
            "seed": self.seed,
            "svm_tol": self.svm_tol,
            "svm_max_iter": self.svm_max_iter,
            "win_s": self.win_s,
            "step_s": self.step_s,
        }


@dataclass(frozen=True)
class MajorityModel:
    """Stand-in classifier for an attribute whose training set had one class."""

    label: int  # +1 or -1

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X))
        return np.full(X.shape[0], float(self.label))


@dataclass
class AttributeModel:
    mode: str  # CHEW_LEVEL or BOUT_LEVEL
    sample_rate: int
    band_plan: BandPlan
    order_p: int
    standardizer: Standardizer
    svms: dict
    codebook: Codebook | None = None
    window_standardizer: Standardizer | None = None
    win_s: float = DEFAULT_WINDOW_S
    step_s: float = DEFAULT_STEP_S
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in (CHEW_LEVEL, BOUT_LEVEL):
            raise ConfigError(f"unknown model mode {self.mode!r}")
        if set(self.svms) != set(ATTRIBUTES):
            raise ConfigError(f"model must carry exactly the SVMs for {ATTRIBUTES}")
        if (self.codebook is not None) != (self.mode == BOUT_LEVEL):
            raise ConfigError("codebook present iff the model is bout-level")

    def degenerate_attributes(self) -> list:
        return [a for a in ATTRIBUTES if isinstance(self.svms[a], MajorityModel)]


@dataclass(frozen=True)
class ChewPrediction:
    chew_id: int
    bout_id: int
    labels: dict
    decisions: dict


@dataclass(frozen=True)
class BoutPrediction:
    bout_id: int
    labels: dict
    scores: dict
    provenance: str


def _attribute_seed(seed: int, purpose: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, purpose, index]).generate_state(1)[0])


def _chew_segments(corpus: Corpus, recording_ids) -> tuple:
    """Stacked chew segments, labels per attribute, and the working rate."""
    rates = {corpus.recordings[rid].sample_rate for rid in recording_ids}
    if len(rates) != 1:
        raise ValidationError(f"training recordings have mixed sample rates: {sorted(rates)}")
    fs = rates.pop()
    segments, labels = [], {a: [] for a in ATTRIBUTES}
    for rid in sorted(recording_ids):
        rec = corpus.recordings[rid]
        food_labels = corpus.labels_for(rid)
        for chew in corpus.chews.get(rid, ()):
            segments.append(_slice(rec, chew.start_s, chew.stop_s))
            for a in ATTRIBUTES:
                labels[a].append(1 if food_labels[a] else -1)
    return segments, {a: np.asarray(v) for a, v in labels.items()}, fs


def _slice(rec: AudioRecording, start_s: float, stop_s: float) -> np.ndarray:
    start = int(round(start_s * rec.sample_rate))
    stop = int(round(stop_s * rec.sample_rate))
    if start < 0 or stop > len(rec.samples) or stop <= start:
        raise ValidationError(
            f"segment {start_s:.3f}-{stop_s:.3f}s lies outside recording "
            f"{rec.recording_id!r} ({rec.duration_s:.3f}s)"
        )
    return rec.samples[start:stop]


def _train_attribute_svms(Z, labels_by_attr, cfg: TrainConfig) -> dict:
    """Per-attribute HPO + final SVM.

    Attributes whose training labels hold a single class, and any attribute
    when the training features are all identical (a k=1 codebook collapses
    every bout to the same histogram), get a flagged majority-class model.
    """
    svms = {}
    features_constant = bool(np.all(np.abs(Z - Z[0]) < 1e-12))
    for index, attribute in enumerate(ATTRIBUTES):
        y = labels_by_attr[attribute]
        classes = np.unique(y)
        if len(classes) < 2 or features_constant:
            majority = int(classes[0]) if len(classes) < 2 else (
                1 if np.sum(y > 0) > np.sum(y < 0) else -1
            )
            svms[attribute] = MajorityModel(label=majority)
            continue
        hpo_cfg = replace(cfg.hpo, seed=_attribute_seed(cfg.seed, 10, index))
        scorer = CvSvmScorer(
            Z, y,
            folds=cfg.hpo.folds,
            seed=_attribute_seed(cfg.seed, 20, index),
            tol=cfg.svm_tol,
            max_iter=cfg.svm_max_iter,
        )
        best_c, best_gamma = bayes_opt(scorer.score, hpo_cfg)
        svms[attribute] = svm_train(
            Z, y, C=best_c, gamma=best_gamma,
            tol=cfg.svm_tol, max_iter=cfg.svm_max_iter,
        )
    return svms


def train_chew_level(corpus: Corpus, training_recording_ids, cfg: TrainConfig = TrainConfig()) -> AttributeModel:
    """Fit the chew-level model on the given training recordings."""
    training_recording_ids = list(training_recording_ids)
    if not training_recording_ids:
        raise ConfigError("training set is empty")
    segments, labels, fs = _chew_segments(corpus, training_recording_ids)
    if not segments:
        raise ConfigError("training recordings contain no annotated chews")
    plan = BandPlan(cfg.band_edges_hz).for_rate(fs)
    F = extract_matrix(segments, fs, plan, cfg.order_p)
    standardizer = fit_standardizer(F)
    Z = apply_standardizer(standardizer, F)
    svms = _train_attribute_svms(Z, labels, cfg)
    return AttributeModel(
        mode=CHEW_LEVEL,
        sample_rate=fs,
        band_plan=plan,
        order_p=cfg.order_p,
        standardizer=standardizer,
        svms=svms,
        win_s=cfg.win_s,
        step_s=cfg.step_s,
        config=cfg.snapshot(),
    )


def _check_compatible(model: AttributeModel, recording: AudioRecording, mode: str) -> None:
    if model.mode != mode:
        raise ConfigError(f"model mode is {model.mode!r}, expected {mode!r}")
    if recording.sample_rate != model.sample_rate:
        raise ConfigError(
            f"recording rate {recording.sample_rate} Hz differs from the model's "
            f"{model.sample_rate} Hz; preprocess with the same settings"
        )


def predict_chews(model: AttributeModel, recording: AudioRecording, chews) -> list:
    """One prediction per chew, all three attributes."""
    _check_compatible(model, recording, CHEW_LEVEL)
    ordered = sorted(chews, key=lambda c: c.start_s)
    if not ordered:
        return []
    segments = [_slice(recording, c.start_s, c.stop_s) for c in ordered]
    F = extract_matrix(segments, recording.sample_rate, model.band_plan, model.order_p)
    Z = apply_standardizer(model.standardizer, F)
    decisions = {a: model.svms[a].decision_function(Z) for a in ATTRIBUTES}
    out = []
    for i, chew in enumerate(ordered):
        out.append(
            ChewPrediction(
                chew_id=chew.chew_id,
                bout_id=chew.bout_id,
                labels={a: bool(decisions[a][i] >= 0.0) for a in ATTRIBUTES},
                decisions={a: float(decisions[a][i]) for a in ATTRIBUTES},
            )
        )
    return out


def vote_bout(predictions, n: int | None = None) -> BoutPrediction:
    """Majority vote over a bout's chew predictions.

    With n given, only the first min(n, count) chews (by start time) are
    counted.  An exact tie falls back to the sign of the summed decision
    values over the considered chews (a zero sum counts as positive).
    """
    predictions = list(predictions)
    if not predictions:
        raise ValueError("cannot vote on an empty prediction list")
    if n is not None and n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    bout_ids = {p.bout_id for p in predictions}
    if len(bout_ids) != 1:
        raise ValueError(f"predictions span multiple bouts: {sorted(bout_ids)}")
    considered = predictions if n is None else predictions[: min(n, len(predictions))]
    labels, scores = {}, {}
    for a in ATTRIBUTES:
        positives = sum(1 for p in considered if p.labels[a])
        negatives = len(considered) - positives
        if positives != negatives:
            labels[a] = positives > negatives
        else:
            labels[a] = sum(p.decisions[a] for p in considered) >= 0.0
        scores[a] = positives / len(considered)
    return BoutPrediction(
        bout_id=bout_ids.pop(),
        labels=labels,
        scores=scores,
        provenance="vote-all" if n is None else f"vote-first-{n}",
    )


def train_bout_level(corpus: Corpus, training_recording_ids, cfg: TrainConfig = TrainConfig()) -> AttributeModel:
    """Fit the bout-level bag-of-words model on the given training recordings."""
    training_recording_ids = list(training_recording_ids)
    if not training_recording_ids:
        raise ConfigError("training set is empty")
    rates = {corpus.recordings[rid].sample_rate for rid in training_recording_ids}
    if len(rates) != 1:
        raise ValidationError(f"training recordings have mixed sample rates: {sorted(rates)}")
    fs = rates.pop()
    plan = BandPlan(cfg.band_edges_hz).for_rate(fs)

    per_bout_features, labels = [], {a: [] for a in ATTRIBUTES}
    for rid in sorted(training_recording_ids):
        rec = corpus.recordings[rid]
        food_labels = corpus.labels_for(rid)
        for bout in corpus.bouts.get(rid, ()):
            windows = window_bout(
                _slice(rec, bout.start_s, bout.stop_s), fs, cfg.win_s, cfg.step_s
            )
            per_bout_features.append(extract_matrix(windows, fs, plan, cfg.order_p))
            for a in ATTRIBUTES:
                labels[a].append(1 if food_labels[a] else -1)
    if not per_bout_features:
        raise ConfigError("training recordings contain no annotated bouts")
    stacked = np.vstack(per_bout_features)
    if stacked.shape[0] < cfg.k:
        raise ConfigError(
            f"only {stacked.shape[0]} window vectors for k={cfg.k}; use a smaller k"
        )
    window_standardizer = fit_standardizer(stacked)
    codebook = kmeans_fit(
        apply_standardizer(window_standardizer, stacked),
        cfg.k,
        seed=_attribute_seed(cfg.seed, 30, 0),
    )
    histograms = np.vstack(
        [
            bow_encode(codebook, apply_standardizer(window_standardizer, W))
            for W in per_bout_features
        ]
    )
    standardizer = fit_standardizer(histograms)
    Z = apply_standardizer(standardizer, histograms)
    svms = _train_attribute_svms(Z, {a: np.asarray(v) for a, v in labels.items()}, cfg)
    return AttributeModel(
        mode=BOUT_LEVEL,
        sample_rate=fs,
        band_plan=plan,
        order_p=cfg.order_p,
        standardizer=standardizer,
        svms=svms,
        codebook=codebook,
        window_standardizer=window_standardizer,
        win_s=cfg.win_s,
        step_s=cfg.step_s,
        config=cfg.snapshot(),
    )


def predict_bout(model: AttributeModel, recording: AudioRecording, bout: BoutAnnotation) -> BoutPrediction:
    """Encode one bout against the frozen codebook and classify it."""
    _check_compatible(model, recording, BOUT_LEVEL)
    windows = window_bout(
        _slice(recording, bout.start_s, bout.stop_s),
        recording.sample_rate, model.win_s, model.step_s,
    )
    W = extract_matrix(windows, recording.sample_rate, model.band_plan, model.order_p)
    histogram = bow_encode(model.codebook, apply_standardizer(model.window_standardizer, W))
    Z = apply_standardizer(model.standardizer, histogram.reshape(1, -1))
    labels, scores = {}, {}
    for a in ATTRIBUTES:
        decision = float(model.svms[a].decision_function(Z)[0])
        labels[a] = decision >= 0.0
        scores[a] = decision
    return BoutPrediction(
        bout_id=bout.bout_id, labels=labels, scores=scores, provenance="bout-bow"
    )


# ---------------------------------------------------------------------------
# Model serialization


def _standardizer_to_dict(s: Standardizer | None):
    if s is None:
        return None
    return {"means": s.means, "stds": s.stds}


def _standardizer_from_dict(d) -> Standardizer | None:
    if d is None:
        return None
    return Standardizer(
        means=np.asarray(d["means"], dtype=np.float64),
        stds=np.asarray(d["stds"], dtype=np.float64),
    )


def _svm_to_dict(model) -> dict:
    if isinstance(model, MajorityModel):
        return {"type": "majority", "label": model.label}
    return {
        "type": "svm",
        "support_vectors": model.support_vectors,
        "dual_coeffs": model.dual_coeffs,
        "bias": model.bias,
        "gamma": model.gamma,
        "C": model.C,
        "class_weights": {"pos": model.class_weights[1], "neg": model.class_weights[-1]},
        "kkt_violation": model.kkt_violation,
        "n_iter": model.n_iter,
    }


def _svm_from_dict(d):
    if d["type"] == "majority":
        return MajorityModel(label=int(d["label"]))
    return SvmModel(
        support_vectors=np.asarray(d["support_vectors"], dtype=np.float64),
        dual_coeffs=np.asarray(d["dual_coeffs"], dtype=np.float64),
        bias=float(d["bias"]),
        gamma=float(d["gamma"]),
        C=float(d["C"]),
        class_weights={1: float(d["class_weights"]["pos"]), -1: float(d["class_weights"]["neg"])},
        kkt_violation=float(d["kkt_violation"]),
        n_iter=int(d["n_iter"]),
    )


def model_to_dict(model: AttributeModel) -> dict:
    return {
        "schema": MODEL_SCHEMA,
        "mode": model.mode,
        "sample_rate": model.sample_rate,
        "band_edges_hz": list(model.band_plan.edges_hz),
        "order_p": model.order_p,
        "win_s": model.win_s,
        "step_s": model.step_s,
        "standardizer": _standardizer_to_dict(model.standardizer),
        "window_standardizer": _standardizer_to_dict(model.window_standardizer),
        "codebook": None
        if model.codebook is None
        else {"centroids": model.codebook.centroids, "inertia": model.codebook.inertia},
        "svms": {a: _svm_to_dict(model.svms[a]) for a in ATTRIBUTES},
        "config": model.config,
    }


def model_from_dict(data: dict) -> AttributeModel:
    if data.get("schema") != MODEL_SCHEMA:
        raise SchemaError(
            f"incompatible model schema {data.get('schema')!r}, expected {MODEL_SCHEMA!r}"
        )
    codebook = data.get("codebook")
    return AttributeModel(
        mode=data["mode"],
        sample_rate=int(data["sample_rate"]),
        band_plan=BandPlan(tuple(data["band_edges_hz"])),
        order_p=int(data["order_p"]),
        standardizer=_standardizer_from_dict(data["standardizer"]),
        svms={a: _svm_from_dict(data["svms"][a]) for a in ATTRIBUTES},
        codebook=None
        if codebook is None
        else Codebook(
            centroids=np.asarray(codebook["centroids"], dtype=np.float64),
            inertia=float(codebook["inertia"]),
        ),
        window_standardizer=_standardizer_from_dict(data.get("window_standardizer")),
        win_s=float(data["win_s"]),
        step_s=float(data["step_s"]),
        config=data.get("config", {}),
    )


def save_model(path, model: AttributeModel) -> None:
    write_json(path, model_to_dict(model))


def load_model(path) -> AttributeModel:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"no such model file: {path}")
    return model_from_dict(read_json(path))
