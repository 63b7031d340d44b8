"""
The whole comparison on a synthetic corpus
==========================================

Ten target speakers and ten background speakers are synthesised, then each
window goes through the identical MFCC, UBM, adaptation and scoring chain.
Takes a few seconds. Results are written under ./desk_run.
"""

from pathlib import Path

from derivwin.experiment import ExperimentConfig, SynthCorpusSpec, run_experiment, synth_corpus

root = Path("desk_run")
synth_corpus(SynthCorpusSpec(10, 4, 5.0, 8000, seed=0, background_speakers=10), root / "corpus")

# default config: Hamming orders 0, 1, 2 and a 6-taper sine multitaper
cfg = ExperimentConfig(str(root / "corpus"), str(root / "work"))
print(run_experiment(cfg))

# the same run with zt-norm on the scores
print(run_experiment(ExperimentConfig(str(root / "corpus"), str(root / "work_zt"), score_norm="zt")))
