"""
The derivative window family
============================

Multiplying a Hamming window by n or n**2 pushes its energy toward the end
of the frame. Here we look at the samples and at the usual window figures.
"""

import numpy as np

from derivwin import Base, Normalize, WindowSpec, make_window, window_metrics

# three orders of the same 160-sample (20 ms at 8 kHz) Hamming window
windows = [make_window(WindowSpec(Base.HAMMING, order, 160, Normalize.UNIT_PEAK)) for order in (0, 1, 2)]

# where each window peaks, and how much of its energy sits in the last half
for w in windows:
    s = w.samples
    late = (s[80:] ** 2).sum() / (s**2).sum()
    print(f"{w.spec.label:<16} peak at n={np.argmax(s):3d}   energy in second half {100 * late:5.1f} %")

# leakage, peak sidelobe and -3 dB mainlobe width
print()
print(f"{'window':<16} {'leakage':>10} {'sidelobe':>12} {'width':>10}")
for w in windows:
    print(f"{w.spec.label:<16} {window_metrics(w).as_row()}")

# a crude text plot of the three shapes
print()
for w in windows:
    bars = "".join(" .:-=+*#%@"[int(9 * v)] for v in w.samples[::4])
    print(f"{w.spec.label:<16} |{bars}|")
