import struct
import wave

import numpy as np
import pytest

from chewtex import (
    ATTRIBUTES,
    AudioRecording,
    ChewAnnotation,
    Corpus,
    builtin_label_table,
    derive_bouts,
    load_annotations,
    load_wav,
)
from chewtex.corpus import save_annotations, save_wav
from chewtex.errors import (
    DataError,
    FormatError,
    UnsupportedCodecError,
    ValidationError,
)


class TestLoadWav:
    def test_silence_identity(self, tmp_path):
        rec = AudioRecording("r", "s", "apple", 48000, np.zeros(48000))
        path = tmp_path / "silence.wav"
        save_wav(path, rec)
        loaded = load_wav(path)
        assert loaded.sample_rate == 48000
        assert len(loaded.samples) == 48000
        assert loaded.duration_s == pytest.approx(1.0)
        assert np.all(loaded.samples == 0.0)

    def test_pcm16_scaling_against_manual_byte_decoding(self, tmp_path):
        # full-scale square wave written byte-by-byte; expect +-(32767/32768)
        path = tmp_path / "square.wav"
        values = [32767, -32767, 32767, -32767, 32767, -32767, 32767, -32767]
        payload = struct.pack("<8h", *values)
        with wave.open(str(path), "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(2)
            fh.setframerate(8000)
            fh.writeframes(payload)
        loaded = load_wav(path)
        oracle = np.array(struct.unpack("<8h", payload), dtype=np.float64) / 32768.0
        assert np.array_equal(loaded.samples, oracle)
        assert np.all(np.abs(loaded.samples) == pytest.approx(32767 / 32768))

    def test_stereo_averaged_to_mono(self, tmp_path):
        from scipy.io import wavfile

        path = tmp_path / "stereo.wav"
        data = np.column_stack([np.full(100, 0.5), np.full(100, -0.5)]).astype(np.float32)
        wavfile.write(path, 8000, data)
        loaded = load_wav(path)
        assert loaded.samples.shape == (100,)
        assert np.all(loaded.samples == 0.0)

    def test_float32_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        rec = AudioRecording("r", "s", "apple", 8000, rng.uniform(-1, 1, 256))
        path = tmp_path / "f32.wav"
        save_wav(path, rec, encoding="float32")
        loaded = load_wav(path)
        assert np.allclose(loaded.samples, rec.samples, atol=1e-7)

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "bad.wav"
        path.write_bytes(b"RIFFxxxxWAVEfmt garbage")
        with pytest.raises(FormatError):
            load_wav(path)

    def test_unsupported_encoding(self, tmp_path):
        from scipy.io import wavfile

        path = tmp_path / "i32.wav"
        wavfile.write(path, 8000, np.zeros(16, dtype=np.int32))
        with pytest.raises(UnsupportedCodecError):
            load_wav(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_wav(tmp_path / "nope.wav")


class TestAnnotations:
    def _write(self, tmp_path, rows):
        path = tmp_path / "ann.csv"
        lines = ["recording_id,bout_id,chew_id,start_s,stop_s"] + rows
        path.write_text("\n".join(lines) + "\n")
        return path

    def test_two_rows_one_bout(self, tmp_path):
        path = self._write(tmp_path, ["r1,1,1,0.0,0.5", "r1,1,2,0.6,1.1"])
        chews = load_annotations(path)
        assert len(chews) == 2
        bouts = derive_bouts(chews)
        assert len(bouts) == 1
        assert bouts[0].start_s == 0.0
        assert bouts[0].stop_s == 1.1

    def test_rows_out_of_order_are_sorted(self, tmp_path):
        path = self._write(
            tmp_path, ["r1,2,4,3.0,3.5", "r1,1,2,0.6,1.1", "r1,1,1,0.0,0.5"]
        )
        chews = load_annotations(path)
        assert [c.chew_id for c in chews] == [1, 2, 4]

    def test_degenerate_segment_rejected(self, tmp_path):
        path = self._write(tmp_path, ["r1,1,1,0.5,0.5"])
        with pytest.raises(ValidationError):
            load_annotations(path)

    def test_overlapping_chews_rejected(self, tmp_path):
        path = self._write(tmp_path, ["r1,1,1,0.0,0.6", "r1,1,2,0.5,1.0"])
        with pytest.raises(ValidationError):
            load_annotations(path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "ann.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(FormatError):
            load_annotations(path)

    def test_roundtrip(self, tmp_path):
        chews = [
            ChewAnnotation("r1", 1, 1, 0.0, 0.5),
            ChewAnnotation("r1", 1, 2, 0.6, 1.1),
            ChewAnnotation("r2", 1, 1, 0.25, 0.75),
        ]
        path = tmp_path / "out.csv"
        save_annotations(path, chews)
        assert load_annotations(path) == sorted(chews)


class TestDeriveBouts:
    def test_single_chew_bout(self):
        bouts = derive_bouts([ChewAnnotation("r", 3, 1, 1.0, 1.4)])
        assert len(bouts) == 1
        assert bouts[0].bout_id == 3
        assert (bouts[0].start_s, bouts[0].stop_s) == (1.0, 1.4)

    def test_permutation_invariant(self):
        chews = [
            ChewAnnotation("r", 1, 1, 0.0, 0.5),
            ChewAnnotation("r", 1, 2, 0.7, 1.2),
            ChewAnnotation("r", 2, 3, 2.0, 2.4),
        ]
        assert derive_bouts(chews) == derive_bouts(chews[::-1])

    def test_corpus_scale_grouping(self):
        # 4,989 chews spread over 238 bouts -> 238 bout annotations
        chews = []
        chew_id = 0
        for bout_id in range(1, 239):
            count = 4989 // 238 + (1 if bout_id <= 4989 % 238 else 0)
            start = bout_id * 100.0
            for _ in range(count):
                chew_id += 1
                chews.append(
                    ChewAnnotation("r", bout_id, chew_id, start, start + 0.5)
                )
                start += 0.7
        assert len(chews) == 4989
        bouts = derive_bouts(chews)
        assert len(bouts) == 238
        for bout in bouts:
            chew_durations = 0.5 * len(bout.chew_ids)
            assert chew_durations <= bout.duration_s + 1e-9


class TestLabelTable:
    def test_exact_rows(self):
        table = builtin_label_table()
        assert len(table) == 9
        assert (table["apple"].crispy, table["apple"].wet, table["apple"].chewy) == (
            True, True, False,
        )
        assert (table["toffee"].crispy, table["toffee"].wet, table["toffee"].chewy) == (
            False, False, True,
        )
        assert (table["bread"].crispy, table["bread"].wet, table["bread"].chewy) == (
            False, False, False,
        )

    def test_positive_class_counts(self):
        table = builtin_label_table()
        counts = {a: sum(table[f][a] for f in table) for a in ATTRIBUTES}
        assert counts == {"crispy": 4, "wet": 4, "chewy": 2}


class TestCorpusBuild:
    def test_references_validated(self):
        rec = AudioRecording("r1", "s1", "apple", 8000, np.zeros(8000))
        with pytest.raises(ValidationError):
            Corpus.build(
                [rec],
                [ChewAnnotation("missing", 1, 1, 0.0, 0.5)],
                builtin_label_table(),
            )
        with pytest.raises(ValidationError):
            Corpus.build(
                [rec],
                [ChewAnnotation("r1", 1, 1, 0.0, 2.0)],  # beyond duration
                builtin_label_table(),
            )
        with pytest.raises(ValidationError):
            Corpus.build([rec], [], {})  # food type unlabeled

    def test_build_derives_bouts(self):
        rec = AudioRecording("r1", "s1", "apple", 8000, np.zeros(16000))
        corpus = Corpus.build(
            [rec],
            [
                ChewAnnotation("r1", 1, 1, 0.0, 0.5),
                ChewAnnotation("r1", 1, 2, 0.7, 1.2),
            ],
            builtin_label_table(),
        )
        assert len(corpus.bouts["r1"]) == 1
        assert corpus.subjects() == ["s1"]
        assert corpus.labels_for("r1").crispy is True
