import numpy as np
import pytest

from derivwin.experiment import SynthCorpusSpec, synth_corpus
from derivwin.features import read_wav

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Tiny corpus: 3 target and 3 background speakers, 3 utterances of 1.5 s."""
    out = tmp_path_factory.mktemp("small_corpus")
    spec = SynthCorpusSpec(3, 3, 1.5, 8000, seed=7, background_speakers=3)
    manifest = synth_corpus(spec, out)
    return out, manifest


@pytest.fixture(scope="session")
def speech_frames(small_corpus):
    """Voiced-looking 160-sample frames cut from the synthetic corpus."""
    out, manifest = small_corpus
    samples, _ = read_wav(out / manifest["utterances"][0]["path"])
    frames = np.lib.stride_tricks.sliding_window_view(samples, 160)[::400]
    energy = (frames**2).sum(axis=1)
    return frames[energy > 0.1 * energy.max()]
