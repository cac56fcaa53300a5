"""End-to-end miniature experiment: synthesize, train, evaluate.

Generates a small 4-subject corpus, runs leave-one-subject-out evaluation
of the chew-level algorithm with per-bout majority voting, and prints the
report table.  A fraction of the full experiment, same moving parts.
"""

import time

from chewtex import SynthConfig, TrainConfig, preprocess_corpus, synth_corpus
from chewtex.evaluate import run_chew_protocol
from chewtex.learn import HpoConfig

start = time.time()
corpus = synth_corpus(
    seed=7,
    config=SynthConfig(
        n_subjects=4, chews_per_bout_mean=8.0, chews_per_bout_std=2.0,
        sample_rate=8000,
    ),
)
n_chews = sum(len(c) for c in corpus.chews.values())
print(f"synthesized {len(corpus.recordings)} recordings, {n_chews} chews "
      f"({time.time() - start:.1f}s)")

corpus = preprocess_corpus(corpus)
print(f"preprocessed to 8 kHz + 20 Hz high-pass ({time.time() - start:.1f}s)")

cfg = TrainConfig(hpo=HpoConfig(budget=12, n_init=6), seed=0)
reports = run_chew_protocol(corpus, "loso", cfg, vote_ns=(None, 3))
print(f"trained and evaluated {len(reports['chew'].folds)} LOSO folds "
      f"({time.time() - start:.1f}s)\n")

for key in ("chew", "vote-all", "vote-first-3"):
    print(reports[key].text_table())
