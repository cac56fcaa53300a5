"""Corpus data model and on-disk formats.

A corpus is a set of single-channel audio recordings (one per subject and
food type), chew/bout annotations referencing them, and a table mapping each
food type to its three binary texture attributes.  All objects are immutable
after construction.
"""

import csv
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import (
    DataError,
    FormatError,
    UnsupportedCodecError,
    ValidationError,
)
from .serialize import read_json, write_json

ATTRIBUTES = ("crispy", "wet", "chewy")

MANIFEST_SCHEMA = "chewtex-corpus/1"


@dataclass(frozen=True)
class AttributeLabels:
    crispy: bool
    wet: bool
    chewy: bool

    def __getitem__(self, attribute: str) -> bool:
        if attribute not in ATTRIBUTES:
            raise KeyError(attribute)
        return getattr(self, attribute)


def builtin_label_table() -> dict:
    """The nine evaluated food types and their attribute assignments."""
    rows = {
        "apple": (True, True, False),
        "banana": (False, True, False),
        "bread": (False, False, False),
        "candy bar": (False, False, True),
        "cookie": (True, False, False),
        "lettuce": (True, True, False),
        "potato chips": (True, False, False),
        "strawberry": (False, True, False),
        "toffee": (False, False, True),
    }
    return {food: AttributeLabels(*flags) for food, flags in rows.items()}


@dataclass(frozen=True)
class AudioRecording:
    recording_id: str
    subject_id: str
    food_type: str
    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValidationError(f"sample_rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValidationError("samples must be a 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise ValidationError(f"recording {self.recording_id!r} contains non-finite samples")
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True, order=True)
class ChewAnnotation:
    recording_id: str
    bout_id: int
    chew_id: int
    start_s: float
    stop_s: float

    def __post_init__(self):
        if self.start_s < 0:
            raise ValidationError(f"chew {self.chew_id}: start_s must be >= 0")
        if self.stop_s <= self.start_s:
            raise ValidationError(
                f"chew {self.chew_id}: stop_s ({self.stop_s}) must exceed start_s ({self.start_s})"
            )

    @property
    def duration_s(self) -> float:
        return self.stop_s - self.start_s


@dataclass(frozen=True)
class BoutAnnotation:
    recording_id: str
    bout_id: int
    chew_ids: tuple
    start_s: float
    stop_s: float

    def __post_init__(self):
        if len(self.chew_ids) < 1:
            raise ValidationError(f"bout {self.bout_id} contains no chews")

    @property
    def duration_s(self) -> float:
        return self.stop_s - self.start_s


def _validate_bout_group(chews) -> None:
    """Chews of one bout must be non-overlapping and time-ordered by chew_id."""
    ordered = sorted(chews, key=lambda c: c.start_s)
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start_s < prev.stop_s:
            raise ValidationError(
                f"bout {cur.bout_id} of {cur.recording_id!r}: chews "
                f"{prev.chew_id} and {cur.chew_id} overlap"
            )
        if cur.chew_id <= prev.chew_id:
            raise ValidationError(
                f"bout {cur.bout_id} of {cur.recording_id!r}: chew ids not "
                f"time-ordered ({prev.chew_id} before {cur.chew_id})"
            )


def validate_chews(chews) -> list:
    """Validate a flat chew set and return it sorted by (recording, bout, start)."""
    groups: dict = {}
    for chew in chews:
        groups.setdefault((chew.recording_id, chew.bout_id), []).append(chew)
    for group in groups.values():
        _validate_bout_group(group)
    return sorted(chews, key=lambda c: (c.recording_id, c.bout_id, c.start_s))


def derive_bouts(chews) -> list:
    """One bout per distinct (recording, bout_id), spanning its chews."""
    ordered = validate_chews(chews)
    groups: dict = {}
    for chew in ordered:
        groups.setdefault((chew.recording_id, chew.bout_id), []).append(chew)
    bouts = []
    for (rid, bid), group in sorted(groups.items()):
        bouts.append(
            BoutAnnotation(
                recording_id=rid,
                bout_id=bid,
                chew_ids=tuple(c.chew_id for c in group),
                start_s=group[0].start_s,
                stop_s=group[-1].stop_s,
            )
        )
    return bouts


@dataclass(frozen=True)
class Corpus:
    recordings: dict
    chews: dict
    bouts: dict = field(default_factory=dict)
    label_table: dict = field(default_factory=dict)

    @classmethod
    def build(cls, recordings, chews, label_table) -> "Corpus":
        """Assemble and validate a corpus from its parts.

        `recordings` is an iterable of AudioRecording, `chews` a flat iterable
        of ChewAnnotation.  Bouts are derived, never supplied.
        """
        rec_map = {rec.recording_id: rec for rec in recordings}
        ordered = validate_chews(list(chews))
        chew_map: dict = {}
        for chew in ordered:
            if chew.recording_id not in rec_map:
                raise ValidationError(
                    f"chew {chew.chew_id} references unknown recording {chew.recording_id!r}"
                )
            rec = rec_map[chew.recording_id]
            if chew.stop_s > rec.duration_s + 1e-9:
                raise ValidationError(
                    f"chew {chew.chew_id} of {chew.recording_id!r} ends at "
                    f"{chew.stop_s:.3f}s, beyond the recording ({rec.duration_s:.3f}s)"
                )
            chew_map.setdefault(chew.recording_id, []).append(chew)
        for rec in rec_map.values():
            if rec.food_type not in label_table:
                raise ValidationError(f"food type {rec.food_type!r} missing from label table")
        bout_map = {}
        for rid, group in chew_map.items():
            bout_map[rid] = tuple(derive_bouts(group))
        return cls(
            recordings=rec_map,
            chews={rid: tuple(group) for rid, group in chew_map.items()},
            bouts=bout_map,
            label_table=dict(label_table),
        )

    def subjects(self) -> list:
        return sorted({rec.subject_id for rec in self.recordings.values()})

    def food_types(self) -> list:
        return sorted({rec.food_type for rec in self.recordings.values()})

    def recording_ids(self) -> list:
        return sorted(self.recordings)

    def labels_for(self, recording_id: str) -> AttributeLabels:
        return self.label_table[self.recordings[recording_id].food_type]


# ---------------------------------------------------------------------------
# WAV input/output


def load_wav(path, recording_id=None, subject_id="", food_type="") -> AudioRecording:
    """Read a mono or stereo WAV file (16-bit PCM or 32-bit float).

    Samples are normalized to [-1, 1]; stereo channels are averaged to mono.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except UnsupportedCodecError:
        raise
    except Exception as exc:
        raise FormatError(f"malformed WAV file {path}: {exc}") from exc
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedCodecError(
            f"{path}: unsupported sample encoding {data.dtype} "
            "(expected 16-bit PCM or 32-bit float)"
        )
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    elif samples.ndim != 1:
        raise UnsupportedCodecError(f"{path}: expected 1 or 2 channels")
    return AudioRecording(
        recording_id=recording_id if recording_id is not None else path.stem,
        subject_id=subject_id,
        food_type=food_type,
        sample_rate=int(rate),
        samples=samples,
    )


def save_wav(path, recording: AudioRecording, encoding: str = "pcm16") -> None:
    """Write a recording as mono WAV, 16-bit PCM or 32-bit float."""
    samples = recording.samples
    if encoding == "pcm16":
        data = np.clip(np.round(samples * 32767.0), -32768, 32767).astype(np.int16)
    elif encoding == "float32":
        data = samples.astype(np.float32)
    else:
        raise UnsupportedCodecError(f"unsupported WAV encoding {encoding!r}")
    wavfile.write(Path(path), recording.sample_rate, data)


# ---------------------------------------------------------------------------
# Annotation and label-table CSV

ANNOTATION_HEADER = ["recording_id", "bout_id", "chew_id", "start_s", "stop_s"]
LABEL_HEADER = ["food_type", "crispy", "wet", "chewy"]


def load_annotations(path) -> list:
    """Read a chew-annotation CSV, validate it, and return sorted chews."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    chews = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ANNOTATION_HEADER:
            raise FormatError(
                f"{path}: expected header {','.join(ANNOTATION_HEADER)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise FormatError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            try:
                chews.append(
                    ChewAnnotation(
                        recording_id=row[0],
                        bout_id=int(row[1]),
                        chew_id=int(row[2]),
                        start_s=float(row[3]),
                        stop_s=float(row[4]),
                    )
                )
            except ValidationError:
                raise
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return validate_chews(chews)


def save_annotations(path, chews) -> None:
    ordered = validate_chews(list(chews))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ANNOTATION_HEADER)
        for chew in ordered:
            writer.writerow(
                [chew.recording_id, chew.bout_id, chew.chew_id,
                 repr(chew.start_s), repr(chew.stop_s)]
            )


def load_label_table(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    table = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LABEL_HEADER:
            raise FormatError(f"{path}: expected header {','.join(LABEL_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4 or any(flag not in ("0", "1") for flag in row[1:]):
                raise FormatError(f"{path}:{lineno}: expected food_type plus three 0/1 flags")
            table[row[0]] = AttributeLabels(*(flag == "1" for flag in row[1:]))
    return table


def save_label_table(path, table) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABEL_HEADER)
        for food in sorted(table):
            labels = table[food]
            writer.writerow(
                [food, int(labels.crispy), int(labels.wet), int(labels.chewy)]
            )


# ---------------------------------------------------------------------------
# Corpus directory layout: manifest.json + annotations.csv + labels.csv + audio/


def write_corpus(corpus: Corpus, out_dir, seed=None, encoding: str = "pcm16") -> None:
    """Write a corpus directory: WAVs, annotation CSV, label CSV, manifest."""
    out = Path(out_dir)
    audio_dir = out / "audio"
    audio_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for rid in corpus.recording_ids():
        rec = corpus.recordings[rid]
        fname = f"{rid.replace(' ', '_')}.wav"
        save_wav(audio_dir / fname, rec, encoding=encoding)
        entries.append(
            {
                "recording_id": rid,
                "file": f"audio/{fname}",
                "subject_id": rec.subject_id,
                "food_type": rec.food_type,
                "sample_rate": rec.sample_rate,
            }
        )
    all_chews = [chew for rid in corpus.recording_ids() for chew in corpus.chews.get(rid, ())]
    save_annotations(out / "annotations.csv", all_chews)
    save_label_table(out / "labels.csv", corpus.label_table)
    manifest = {"schema": MANIFEST_SCHEMA, "recordings": entries}
    if seed is not None:
        manifest["seed"] = int(seed)
    write_json(out / "manifest.json", manifest)


def load_corpus(data_dir) -> Corpus:
    """Load a corpus directory written by `write_corpus`."""
    root = Path(data_dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"no corpus manifest at {manifest_path}")
    manifest = read_json(manifest_path)
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise FormatError(
            f"{manifest_path}: unsupported manifest schema {manifest.get('schema')!r}"
        )
    recordings = []
    for entry in manifest["recordings"]:
        recordings.append(
            load_wav(
                root / entry["file"],
                recording_id=entry["recording_id"],
                subject_id=entry["subject_id"],
                food_type=entry["food_type"],
            )
        )
    chews = load_annotations(root / "annotations.csv")
    labels = load_label_table(root / "labels.csv")
    return Corpus.build(recordings, chews, labels)


def replace_recording_samples(corpus: Corpus, recording_id: str, samples) -> Corpus:
    """Return a corpus with one recording's samples swapped (for leakage tests)."""
    rec = corpus.recordings[recording_id]
    new_rec = replace(rec, samples=np.asarray(samples, dtype=np.float64))
    recordings = dict(corpus.recordings)
    recordings[recording_id] = new_rec
    return Corpus(
        recordings=recordings,
        chews=corpus.chews,
        bouts=corpus.bouts,
        label_table=corpus.label_table,
    )
