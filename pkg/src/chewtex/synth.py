"""Synthetic chewing-audio corpus for desk-scale end-to-end verification.

Each of the nine built-in food types is rendered for every subject as one
recording of annotated chewing bouts.  Attribute-specific acoustic
components make the three texture attributes separable:

* crispy  -> dense trains of short high-frequency resonant clicks,
* wet     -> damped low/mid-frequency "squelch" bursts,
* chewy   -> a sustained amplitude-modulated low-frequency drone.

Every chew additionally carries a neutral mid-band noise burst, and the
whole recording sits on a white noise floor at a configurable SNR.  The
generator is fully deterministic for a fixed seed.
"""

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .corpus import AttributeLabels, AudioRecording, ChewAnnotation, Corpus, builtin_label_table
from .errors import ConfigError


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 9
    bouts_per_recording: int = 1
    chews_per_bout_mean: float = 21.0
    chews_per_bout_std: float = 5.0
    chew_duration_mean_s: float = 0.56
    chew_duration_std_s: float = 0.15
    gap_mean_s: float = 0.153
    gap_std_s: float = 0.05
    sample_rate: int = 48000
    snr_db: float = 25.0

    def __post_init__(self):
        if self.n_subjects < 2:
            raise ConfigError(f"need at least 2 subjects, got {self.n_subjects}")
        if self.bouts_per_recording < 1:
            raise ConfigError("need at least one bout per recording")
        if self.chews_per_bout_mean < 3 or self.chews_per_bout_std < 0:
            raise ConfigError("invalid chews-per-bout distribution")
        if self.chew_duration_mean_s <= 0 or self.chew_duration_std_s < 0:
            raise ConfigError("invalid chew-duration distribution")
        if self.gap_mean_s <= 0 or self.gap_std_s < 0:
            raise ConfigError("invalid inter-chew-gap distribution")
        if self.sample_rate < 8000:
            raise ConfigError("generation rate must be at least 8 kHz")


# Fixed per-recording timing.
LEAD_S = 0.5
BOUT_GAP_S = 1.0

# Amplitudes of the acoustic components, before the subject gain.
BASE_AMP = 0.06
CLICK_AMP = 0.42
WET_AMP = 0.5
DRONE_AMP = 0.32
# fraction of wet/chewy chews rendered with a damped component; keeps those
# attributes slightly imperfect at the chew level, as crispiness is the most
# salient attribute
WEAK_INSTANCE_PROB = 0.12


def _fade_envelope(n: int, fs: float, fade_s: float = 0.01) -> np.ndarray:
    fade = min(int(round(fade_s * fs)), n // 4)
    env = np.ones(n)
    if fade > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(fade) / fade)
        env[:fade] = ramp
        env[-fade:] = ramp[::-1]
    return env


def _damped_tone(fs: float, freq: float, tau_s: float, length_s: float, phase: float) -> np.ndarray:
    t = np.arange(int(round(length_s * fs))) / fs
    return np.exp(-t / tau_s) * np.sin(2 * np.pi * freq * t + phase)


def _add_at(buffer: np.ndarray, pos: int, chunk: np.ndarray) -> None:
    end = min(pos + len(chunk), len(buffer))
    if end > pos >= 0:
        buffer[pos:end] += chunk[: end - pos]


def _bandpass_noise(rng, n: int, fs: float, lo: float, hi: float) -> np.ndarray:
    sos = signal.butter(2, [lo, hi], btype="bandpass", fs=fs, output="sos")
    return signal.sosfilt(sos, rng.standard_normal(n))


def render_chew(rng, fs, duration_s, labels: AttributeLabels, food_tune, subject_tune,
                subject_gain, rate_factor) -> np.ndarray:
    """Render one chew: neutral base plus the components of its attributes."""
    n = int(round(duration_s * fs))
    chew = np.zeros(n)

    base = _bandpass_noise(rng, n, fs, 350.0, 900.0)
    rms = np.sqrt(np.mean(base**2))
    if rms > 0:
        chew += base * (BASE_AMP / rms) * rng.lognormal(0.0, 0.1)

    if labels.crispy:
        n_clicks = rng.poisson(55.0 * duration_s * rate_factor)
        for _ in range(n_clicks):
            # bounded jitter keeps every click resonance inside 2-4 kHz for
            # all food/subject detunes, so the crispy signature transfers to
            # unseen foods
            jitter = 1.0 + 0.05 * np.clip(rng.standard_normal(), -2.0, 2.0)
            freq = 2800.0 * food_tune * subject_tune * jitter
            click = _damped_tone(fs, freq, 0.0022, 0.012, rng.uniform(0, 2 * np.pi))
            amp = CLICK_AMP * rng.lognormal(0.0, 0.15)
            _add_at(chew, rng.integers(0, n), amp * click)

    if labels.wet:
        scale = 0.35 if rng.uniform() < WEAK_INSTANCE_PROB else 1.0
        n_bursts = 1 + rng.poisson(4.2 * duration_s / 0.56)
        for _ in range(n_bursts):
            freq = 230.0 * food_tune * subject_tune * (1.0 + 0.12 * rng.standard_normal())
            burst = _damped_tone(fs, freq, 0.022, 0.09, rng.uniform(0, 2 * np.pi))
            amp = WET_AMP * scale * rng.lognormal(0.0, 0.2)
            _add_at(chew, rng.integers(0, n), amp * burst)

    if labels.chewy:
        scale = 0.3 if rng.uniform() < WEAK_INSTANCE_PROB else 1.0
        t = np.arange(n) / fs
        f0 = 78.0 * food_tune * subject_tune
        am = 1.0 + 0.5 * np.sin(2 * np.pi * rng.uniform(4.0, 7.0) * t + rng.uniform(0, 2 * np.pi))
        drone = np.sin(2 * np.pi * f0 * t + rng.uniform(0, 2 * np.pi)) * am
        chew += DRONE_AMP * scale * rng.lognormal(0.0, 0.2) * drone

    return chew * _fade_envelope(n, fs) * subject_gain


def synth_corpus(seed: int, n_subjects: int | None = None,
                 config: SynthConfig = SynthConfig()) -> Corpus:
    """Generate a deterministic in-memory corpus covering all nine food types."""
    if n_subjects is not None:
        config = SynthConfig(**{**config.__dict__, "n_subjects": n_subjects})
    fs = config.sample_rate
    label_table = builtin_label_table()
    foods = sorted(label_table)

    food_rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xF00D]))
    food_tunes = {
        food: 1.0 + 0.04 * float(np.clip(food_rng.standard_normal(), -2.0, 2.0))
        for food in foods
    }

    recordings = []
    chews = []
    for subject_index in range(config.n_subjects):
        subject_id = f"s{subject_index + 1:02d}"
        subj_rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1, subject_index]))
        subject_gain = 10.0 ** (subj_rng.uniform(-3.0, 3.0) / 20.0)
        subject_tune = subj_rng.uniform(0.95, 1.05)
        rate_factor = subj_rng.uniform(0.9, 1.1)
        for food_index, food in enumerate(foods):
            rng = np.random.default_rng(
                np.random.SeedSequence([int(seed), 2, subject_index, food_index])
            )
            rid = f"{subject_id}_{food.replace(' ', '_')}"
            labels = label_table[food]

            plan = []  # (bout_id, chew_id, start_s, duration_s)
            cursor = LEAD_S
            chew_counter = 0
            for bout_index in range(config.bouts_per_recording):
                n_chews = int(round(np.clip(
                    rng.normal(config.chews_per_bout_mean, config.chews_per_bout_std),
                    3, config.chews_per_bout_mean + 3 * config.chews_per_bout_std + 1,
                )))
                for chew_index in range(n_chews):
                    # symmetric clipping keeps the mean duration unbiased
                    duration = float(np.clip(
                        rng.normal(config.chew_duration_mean_s, config.chew_duration_std_s),
                        config.chew_duration_mean_s - 0.36,
                        config.chew_duration_mean_s + 0.36,
                    ))
                    chew_counter += 1
                    plan.append((bout_index + 1, chew_counter, cursor, duration))
                    cursor += duration
                    if chew_index < n_chews - 1:
                        cursor += float(np.clip(
                            rng.normal(config.gap_mean_s, config.gap_std_s), 0.02, 0.5,
                        ))
                cursor += BOUT_GAP_S
            total_s = cursor - BOUT_GAP_S + LEAD_S

            samples = np.zeros(int(round(total_s * fs)))
            chew_rms_acc = []
            for bout_id, chew_id, start_s, duration in plan:
                rendered = render_chew(
                    rng, fs, duration, labels, food_tunes[food], subject_tune,
                    subject_gain, rate_factor,
                )
                _add_at(samples, int(round(start_s * fs)), rendered)
                chew_rms_acc.append(np.mean(rendered**2))
                chews.append(ChewAnnotation(
                    recording_id=rid,
                    bout_id=bout_id,
                    chew_id=chew_id,
                    start_s=round(start_s, 6),
                    stop_s=round(start_s + duration, 6),
                ))
            signal_rms = float(np.sqrt(np.mean(chew_rms_acc)))
            noise_std = signal_rms * 10.0 ** (-config.snr_db / 20.0)
            samples += noise_std * rng.standard_normal(len(samples))
            peak = np.max(np.abs(samples))
            if peak > 0.97:
                samples *= 0.97 / peak
            recordings.append(AudioRecording(
                recording_id=rid,
                subject_id=subject_id,
                food_type=food,
                sample_rate=fs,
                samples=samples,
            ))
    return Corpus.build(recordings, chews, label_table)
