import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from derivwin.errors import LengthMismatch, SingleClassOnly
from derivwin.evalmetrics import (
    DcfParams,
    Trial,
    TrialSet,
    det_curve,
    eer,
    export_det,
    min_dcf,
    read_det,
    read_scores,
    read_trials,
    write_scores,
    write_trials,
)


def brute_rates(labels, scores, threshold):
    tgt = [s for s, lab in zip(scores, labels) if lab]
    imp = [s for s, lab in zip(scores, labels) if not lab]
    fa = sum(s >= threshold for s in imp) / len(imp)
    miss = sum(s < threshold for s in tgt) / len(tgt)
    return fa, miss


def brute_points(labels, scores):
    thresholds = [-np.inf] + sorted(set(scores)) + [np.inf]
    return [brute_rates(labels, scores, t) for t in thresholds]


def brute_eer(labels, scores):
    """Smallest diagonal crossing over all segments joining two operating points.

    The diagonal meets the convex hull of the points first on one of these
    segments, so this equals the convex-hull EER.
    """
    pts = np.array(brute_points(labels, scores))
    d = pts[:, 1] - pts[:, 0]
    best = np.inf
    above, below = np.flatnonzero(d >= 0), np.flatnonzero(d <= 0)
    for i in above:
        j = below
        denom = d[i] - d[j]
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(denom != 0, d[i] / denom, 0.0)
        cross = pts[i, 0] + t * (pts[j, 0] - pts[i, 0])
        best = min(best, cross.min())
    return 100 * best


def brute_min_dcf(labels, scores, params):
    costs = []
    for fa, miss in brute_points(labels, scores):
        costs.append(params.c_miss * params.p_target * miss + params.c_fa * (1 - params.p_target) * fa)
    return min(costs)


FOUR = (np.array([True, True, False, False]), np.array([2.0, 3.0, 1.0, 2.5]))


def test_det_perfect_separation():
    labels = np.array([True] * 3 + [False] * 4)
    curve = det_curve(TrialSet.from_labels(labels), np.where(labels, 1.0, 0.0))
    assert (0.0, 0.0) in set(zip(curve.false_alarm, curve.miss))


def test_det_all_scores_identical():
    labels = np.array([True, False, True, False])
    curve = det_curve(TrialSet.from_labels(labels), np.zeros(4))
    assert set(zip(curve.false_alarm, curve.miss)) == {(1.0, 0.0), (0.0, 1.0)}
    assert eer(curve) == 50.0


def test_det_four_trial_example():
    curve = det_curve(TrialSet.from_labels(FOUR[0]), FOUR[1])
    i = np.searchsorted(curve.thresholds, 2.5, side="right")  # next threshold above 2.5
    assert (curve.false_alarm[i], curve.miss[i]) == (0.0, 0.5)
    assert curve.points() == [
        (-np.inf, 1.0, 0.0),
        (1.0, 1.0, 0.0),
        (2.0, 0.5, 0.0),
        (2.5, 0.5, 0.5),
        (3.0, 0.0, 0.5),
        (np.inf, 0.0, 1.0),
    ]


def test_eer_four_trial_example():
    curve = det_curve(TrialSet.from_labels(FOUR[0]), FOUR[1])
    assert brute_eer(*FOUR) == pytest.approx(25.0)
    assert eer(curve) == pytest.approx(25.0)


def test_min_dcf_four_trial_example():
    params = DcfParams()
    expected = brute_min_dcf(*FOUR, params)
    assert expected == pytest.approx(0.05)
    assert min_dcf(TrialSet.from_labels(FOUR[0]), FOUR[1], params) == pytest.approx(expected, abs=1e-15)


def test_eer_perfect_and_bounds():
    labels = np.array([True, True, False, False])
    scores = np.array([5.0, 6.0, 1.0, 2.0])
    trials = TrialSet.from_labels(labels)
    assert eer(det_curve(trials, scores)) == 0.0
    assert min_dcf(trials, scores) == 0.0


def test_eer_identical_distributions():
    rng = np.random.default_rng(11)
    labels = rng.uniform(size=20_000) < 0.5
    scores = rng.standard_normal(20_000)
    assert eer(det_curve(TrialSet.from_labels(labels), scores)) == pytest.approx(50.0, abs=2.0)


def test_min_dcf_degenerate_bound(rng):
    labels = rng.uniform(size=300) < 0.3
    labels[:2] = [True, False]
    scores = rng.standard_normal(300)
    params = DcfParams()
    curve = det_curve(TrialSet.from_labels(labels), scores)
    accept_all = params.c_fa * (1 - params.p_target) * curve.false_alarm[0]
    assert accept_all == pytest.approx(0.99)
    assert min_dcf(TrialSet.from_labels(labels), scores, params) <= min(0.99, 0.1)


@pytest.mark.parametrize("seed", range(20))
def test_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 200))
    labels = rng.uniform(size=n) < rng.uniform(0.1, 0.9)
    labels[:2] = [True, False]
    scores = np.round(rng.standard_normal(n) + labels * rng.uniform(0, 2), 1)  # ties on purpose
    trials = TrialSet.from_labels(labels)
    params = DcfParams(rng.uniform(1, 10), rng.uniform(1, 10), rng.uniform(0.01, 0.5))
    assert eer(det_curve(trials, scores)) == pytest.approx(brute_eer(labels, scores), abs=1e-9)
    assert min_dcf(trials, scores, params) == brute_min_dcf(labels, scores, params)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["exp", "cube", "affine", "atan"]))
def test_monotone_transform_invariance(seed, kind):
    rng = np.random.default_rng(seed)
    labels = rng.uniform(size=60) < 0.4
    labels[:2] = [True, False]
    scores = np.round(rng.standard_normal(60) + labels, 2)
    f = {"exp": np.exp, "cube": lambda s: s**3, "affine": lambda s: 3 * s - 7, "atan": np.arctan}[kind]
    trials = TrialSet.from_labels(labels)
    a, b = det_curve(trials, scores), det_curve(trials, f(scores))
    assert set(zip(a.false_alarm, a.miss)) == set(zip(b.false_alarm, b.miss))
    assert eer(a) == eer(b)
    assert min_dcf(trials, scores) == min_dcf(trials, f(scores))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_det_monotone_and_dcf_bound(seed):
    rng = np.random.default_rng(seed)
    labels = rng.uniform(size=40) < 0.5
    labels[:2] = [True, False]
    scores = rng.standard_normal(40)
    curve = det_curve(TrialSet.from_labels(labels), scores)
    assert np.all(np.diff(curve.false_alarm) <= 0) and np.all(np.diff(curve.miss) >= 0)
    assert np.all((curve.false_alarm >= 0) & (curve.false_alarm <= 1))
    params = DcfParams()
    assert min_dcf(TrialSet.from_labels(labels), scores, params) <= min(
        params.c_miss * params.p_target, params.c_fa * (1 - params.p_target)
    )


def test_errors():
    with pytest.raises(SingleClassOnly):
        det_curve(TrialSet.from_labels([True, True]), [1.0, 2.0])
    with pytest.raises(LengthMismatch):
        det_curve(TrialSet.from_labels([True, False]), [1.0])


def test_export_det(tmp_path):
    curve = det_curve(TrialSet.from_labels([True, False]), [0.0, 0.0])
    path = tmp_path / "det.csv"
    export_det(curve, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "threshold,far,frr,probit_far,probit_frr"
    rows = [list(map(float, line.split(","))) for line in lines[1:]]
    # threshold +inf: FA = 0 clamps to -5, miss = 1 clamps to +5
    assert rows[-1][3:] == [-5.0, 5.0]
    back = read_det(path)
    np.testing.assert_array_equal(back.false_alarm, curve.false_alarm)
    np.testing.assert_array_equal(back.miss, curve.miss)
    np.testing.assert_array_equal(back.thresholds, curve.thresholds)


def test_export_det_half_rates(tmp_path):
    labels = [True, True, False, False]
    curve = det_curve(TrialSet.from_labels(labels), [0.0, 2.0, 1.0, 3.0])
    export_det(curve, tmp_path / "d.csv")
    back = (tmp_path / "d.csv").read_text().splitlines()[1:]
    half = [r for r in back if r.split(",")[1:3] == ["0.5", "0.5"]]
    assert half and all(r.split(",")[3:] == ["0.0", "0.0"] for r in half)


def test_trial_and_score_files(tmp_path):
    trials = TrialSet([Trial("spk1", "utt1", True), Trial("spk1", "utt2", False)])
    write_trials(trials, tmp_path / "t.tsv")
    assert read_trials(tmp_path / "t.tsv") == trials
    assert (tmp_path / "t.tsv").read_text() == "spk1\tutt1\ttarget\nspk1\tutt2\timpostor\n"
    write_scores([0.1, -2.5], tmp_path / "s.txt")
    np.testing.assert_array_equal(read_scores(tmp_path / "s.txt"), [0.1, -2.5])
