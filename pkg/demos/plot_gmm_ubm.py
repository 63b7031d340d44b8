"""
A tiny GMM-UBM verifier
=======================

Train a background model, adapt it to one speaker by moving the means, and
score a matching and a non-matching segment.
"""

import numpy as np

from derivwin import ScoringConfig, map_adapt, score_utterance, train_ubm

rng = np.random.default_rng(2)
dim = 4

# background: many "speakers", each a shifted Gaussian blob
background = np.vstack([rng.standard_normal((300, dim)) + rng.normal(0, 2, dim) for _ in range(20)])
ubm, history = train_ubm(background, 16, iterations=8, seed=0)
print("average log-likelihood per EM iteration:")
print(np.round(history, 3))

# one speaker, one enrollment and two test segments
centre = rng.normal(0, 2, dim)
enroll = rng.standard_normal((200, dim)) + centre
same = rng.standard_normal((150, dim)) + centre
other = rng.standard_normal((150, dim)) + rng.normal(0, 2, dim)

speaker = map_adapt(ubm, enroll)
moved = np.abs(speaker.means - ubm.means).max(axis=1)
print("mixtures moved by adaptation:", int((moved > 1e-3).sum()), "of", ubm.num_mixtures)

for c in (1, 5, 16):
    cfg = ScoringConfig(c)
    print(
        f"top-{c:<2d} same speaker {score_utterance(speaker, ubm, same, cfg):+.3f}"
        f"   other speaker {score_utterance(speaker, ubm, other, cfg):+.3f}"
    )
