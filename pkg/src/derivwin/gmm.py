"""Diagonal-covariance GMM-UBM: LBG initialisation, EM, MAP mean adaptation, top-C scoring."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DegenerateCohort,
    DimensionMismatch,
    EmptyData,
    EmptyFeatures,
    FormatError,
    InsufficientData,
    NotPowerOfTwo,
    ValidationError,
)

__all__ = [
    "GmmModel",
    "AdaptationConfig",
    "ScoringConfig",
    "default_var_floor",
    "vq_init",
    "em_train",
    "train_ubm",
    "sufficient_stats",
    "adaptation_coefficients",
    "map_adapt",
    "component_log_likelihoods",
    "score_utterance",
    "zt_norm",
    "write_model",
    "read_model",
]

MODEL_MAGIC = b"GUM1"
_CHUNK = 4096


@dataclass(frozen=True)
class GmmModel:
    weights: np.ndarray = field(repr=False)
    means: np.ndarray = field(repr=False)
    variances: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        mu = np.array(self.means, dtype=np.float64, ndmin=2)
        var = np.array(self.variances, dtype=np.float64, ndmin=2)
        if w.ndim != 1 or w.size == 0:
            raise ValidationError("weights must be a non-empty vector")
        if mu.shape != (w.size, mu.shape[1]) or var.shape != mu.shape:
            raise DimensionMismatch(f"inconsistent shapes {w.shape}, {mu.shape}, {var.shape}")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-10:
            raise ValidationError("weights must be non-negative and sum to 1")
        if np.any(var <= 0) or not np.all(np.isfinite(var)) or not np.all(np.isfinite(mu)):
            raise ValidationError("variances must be positive and parameters finite")
        for a in (w, mu, var):
            a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "variances", var)

    @property
    def num_mixtures(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def __eq__(self, other):
        if not isinstance(other, GmmModel):
            return NotImplemented
        return (
            np.array_equal(self.weights, other.weights)
            and np.array_equal(self.means, other.means)
            and np.array_equal(self.variances, other.variances)
        )

    __hash__ = None


@dataclass(frozen=True)
class AdaptationConfig:
    relevance_factor: float = 14.0
    adapt_means_only: bool = True

    def __post_init__(self):
        if not self.relevance_factor > 0:
            raise ValidationError("relevance_factor must be positive")
        if not self.adapt_means_only:
            raise ValidationError("only mean adaptation is implemented")


@dataclass(frozen=True)
class ScoringConfig:
    top_c: int = 5

    def __post_init__(self):
        if self.top_c < 1:
            raise ValidationError("top_c must be positive")


def _as_frames(features, dim: int | None = None) -> np.ndarray:
    x = np.asarray(getattr(features, "frames", features), dtype=np.float64)
    if x.ndim == 1 and x.size == 0:
        x = x.reshape(0, dim or 0)
    if x.ndim != 2:
        raise DimensionMismatch("features must be a 2-D array of frames")
    if dim is not None and x.shape[1] != dim:
        raise DimensionMismatch(f"feature dimension {x.shape[1]} does not match model dimension {dim}")
    return x


def default_var_floor(features) -> np.ndarray:
    """1e-3 times the global per-dimension variance of the data."""
    x = _as_frames(features)
    floor = 1e-3 * x.var(axis=0)
    return np.where(floor > 0, floor, 1e-10)


def component_log_likelihoods(model: GmmModel, x: np.ndarray) -> np.ndarray:
    """``log w_m + log N(x_t; mu_m, diag(var_m))`` for every frame and mixture, shape (T, M)."""
    precision = 1.0 / model.variances
    const = np.log(model.weights) - 0.5 * (
        model.dim * np.log(2 * np.pi)
        + np.sum(np.log(model.variances), axis=1)
        + np.sum(model.means**2 * precision, axis=1)
    )
    return const + x @ (model.means * precision).T - 0.5 * (x**2) @ precision.T


def _chunks(n: int):
    for start in range(0, n, _CHUNK):
        yield slice(start, min(n, start + _CHUNK))


def sufficient_stats(model: GmmModel, x: np.ndarray):
    """Zeroth/first/second-order statistics and the total log-likelihood.

    Accumulated over fixed-size chunks in order, so results do not depend on
    how the caller batches frames.
    """
    m, d = model.num_mixtures, model.dim
    n = np.zeros(m)
    f = np.zeros((m, d))
    s = np.zeros((m, d))
    total = 0.0
    with np.errstate(divide="ignore"):
        for sl in _chunks(len(x)):
            xc = x[sl]
            ll = component_log_likelihoods(model, xc)
            frame_ll = logsumexp(ll, axis=1)
            post = np.exp(ll - frame_ll[:, None])
            total += frame_ll.sum()
            n += post.sum(axis=0)
            f += post.T @ xc
            s += post.T @ (xc**2)
    return n, f, s, total


def _kmeans_assign(x, centroids):
    # squared distances via the expansion; argmin is what matters here
    d2 = (x**2).sum(1)[:, None] - 2 * x @ centroids.T + (centroids**2).sum(1)[None, :]
    labels = np.argmin(d2, axis=1)
    return labels, np.maximum(d2[np.arange(len(x)), labels], 0).sum()


def _lloyd(x, centroids, rng, max_iter=20, tol=1e-4):
    prev = None
    for _ in range(max_iter):
        labels, distortion = _kmeans_assign(x, centroids)
        counts = np.bincount(labels, minlength=len(centroids))
        for k in np.flatnonzero(counts == 0):
            # re-seed an empty cell with a random frame from the most populated one
            donor = np.flatnonzero(labels == np.argmax(counts))
            pick = donor[rng.integers(donor.size)]
            centroids[k] = x[pick]
            labels[pick] = k
            counts = np.bincount(labels, minlength=len(centroids))
        for k in range(len(centroids)):
            centroids[k] = x[labels == k].mean(axis=0)
        if prev is not None and prev > 0 and abs(prev - distortion) / prev < tol:
            break
        prev = distortion
    labels, _ = _kmeans_assign(x, centroids)
    return centroids, labels


def vq_init(features, num_mixtures: int, seed: int = 0, epsilon: float = 0.2, var_floor=None) -> GmmModel:
    """Binary-split (LBG) codebook turned into a diagonal GMM.

    Every round splits each centroid into ``c +- epsilon * sqrt(var)`` using
    the per-cell variance, then runs Lloyd iterations until the relative
    change in distortion falls below 1e-4 (at most 20 iterations).
    """
    x = _as_frames(features)
    if num_mixtures < 1 or num_mixtures & (num_mixtures - 1):
        raise NotPowerOfTwo(f"number of mixtures must be a power of two, got {num_mixtures}")
    if len(x) < num_mixtures:
        raise InsufficientData(f"{len(x)} frames cannot support {num_mixtures} mixtures")
    floor = default_var_floor(x) if var_floor is None else np.broadcast_to(var_floor, x.shape[1])
    rng = np.random.default_rng(seed)

    centroids = x.mean(axis=0, keepdims=True)
    labels = np.zeros(len(x), dtype=int)
    while len(centroids) < num_mixtures:
        spread = np.array([x[labels == k].std(axis=0) for k in range(len(centroids))])
        centroids = np.concatenate([centroids + epsilon * spread, centroids - epsilon * spread])
        centroids, labels = _lloyd(x, centroids, rng)

    counts = np.bincount(labels, minlength=num_mixtures).astype(np.float64)
    variances = np.array(
        [x[labels == k].var(axis=0) if counts[k] else floor for k in range(num_mixtures)]
    )
    return GmmModel(counts / counts.sum(), centroids, np.maximum(variances, floor))


def em_train(init: GmmModel, features, iterations: int = 10, var_floor=None):
    """Maximum-likelihood EM for a diagonal GMM.

    Returns ``(model, history)`` where ``history[i]`` is the average
    per-frame log-likelihood of the model after ``i`` iterations
    (``history[0]`` belongs to ``init``).
    """
    x = _as_frames(features, init.dim)
    if len(x) == 0:
        raise EmptyData("no training frames")
    floor = default_var_floor(x) if var_floor is None else np.broadcast_to(var_floor, init.dim)
    model = init
    history = []
    for _ in range(iterations):
        n, f, s, total = sufficient_stats(model, x)
        history.append(total / len(x))
        occupied = n > 1e-10
        safe = np.where(occupied, n, 1.0)[:, None]
        means = np.where(occupied[:, None], f / safe, model.means)
        variances = np.where(occupied[:, None], s / safe - means**2, model.variances)
        weights = n / n.sum()
        model = GmmModel(weights, means, np.maximum(variances, floor))
    history.append(sufficient_stats(model, x)[3] / len(x))
    return model, history


def train_ubm(features, num_mixtures: int, iterations: int = 10, seed: int = 0):
    """LBG initialisation followed by EM, with the default variance floor."""
    x = _as_frames(features)
    floor = default_var_floor(x)
    init = vq_init(x, num_mixtures, seed=seed, var_floor=floor)
    return em_train(init, x, iterations, var_floor=floor)


def adaptation_coefficients(counts, relevance_factor: float) -> np.ndarray:
    """``alpha_m = n_m / (n_m + r)``."""
    counts = np.asarray(counts, dtype=np.float64)
    return counts / (counts + relevance_factor)


def map_adapt(ubm: GmmModel, features, cfg: AdaptationConfig | None = None) -> GmmModel:
    """Mean-only MAP adaptation of the UBM toward ``features``."""
    cfg = cfg or AdaptationConfig()
    x = _as_frames(features, ubm.dim)
    if len(x) == 0:
        return GmmModel(ubm.weights, ubm.means, ubm.variances)
    n, f, _, _ = sufficient_stats(ubm, x)
    alpha = adaptation_coefficients(n, cfg.relevance_factor)[:, None]
    occupied = n > 0
    data_means = np.where(occupied[:, None], f / np.where(occupied, n, 1.0)[:, None], ubm.means)
    means = alpha * data_means + (1 - alpha) * ubm.means
    return GmmModel(ubm.weights, means, ubm.variances)


def score_utterance(target: GmmModel, ubm: GmmModel, features, cfg: ScoringConfig | None = None) -> float:
    """Average per-frame log-likelihood ratio over the top-C UBM mixtures of each frame."""
    cfg = cfg or ScoringConfig()
    if (target.num_mixtures, target.dim) != (ubm.num_mixtures, ubm.dim):
        raise DimensionMismatch("target and UBM must have the same mixtures and dimension")
    if cfg.top_c > ubm.num_mixtures:
        raise ValidationError(f"top_c={cfg.top_c} exceeds {ubm.num_mixtures} mixtures")
    x = _as_frames(features, ubm.dim)
    if len(x) == 0:
        raise EmptyFeatures("no frames to score")
    total = 0.0
    with np.errstate(divide="ignore"):
        for sl in _chunks(len(x)):
            ubm_ll = component_log_likelihoods(ubm, x[sl])
            tgt_ll = component_log_likelihoods(target, x[sl])
            if cfg.top_c < ubm.num_mixtures:
                top = np.argpartition(-ubm_ll, cfg.top_c - 1, axis=1)[:, : cfg.top_c]
                ubm_ll = np.take_along_axis(ubm_ll, top, axis=1)
                tgt_ll = np.take_along_axis(tgt_ll, top, axis=1)
            total += np.sum(logsumexp(tgt_ll, axis=1) - logsumexp(ubm_ll, axis=1))
    return float(total / len(x))


def _cohort_stats(scores, what):
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size < 2:
        raise DegenerateCohort(f"{what} cohort needs at least 2 scores")
    std = scores.std()
    if not std > 0:
        raise DegenerateCohort(f"{what} cohort has zero variance")
    return scores.mean(), std


def zt_norm(raw: float, z_cohort_scores, t_cohort_scores, t_cohort_znorm=None) -> float:
    """Z-normalise ``raw`` with the target model's impostor scores, then T-normalise.

    ``t_cohort_scores`` are the cohort models' scores on the test segment.
    Each is z-normalised with its own model's ``(mean, std)`` from
    ``t_cohort_znorm`` when given, otherwise with the target's z statistics.
    """
    z_mean, z_std = _cohort_stats(z_cohort_scores, "z")
    t = np.asarray(t_cohort_scores, dtype=np.float64)
    if t_cohort_znorm is None:
        t_prime = (t - z_mean) / z_std
    else:
        stats = np.asarray(t_cohort_znorm, dtype=np.float64).reshape(-1, 2)
        if len(stats) != t.size:
            raise DimensionMismatch("one (mean, std) pair is needed per t-cohort score")
        if np.any(stats[:, 1] <= 0):
            raise DegenerateCohort("t-cohort model with zero z-norm deviation")
        t_prime = (t - stats[:, 0]) / stats[:, 1]
    t_mean, t_std = _cohort_stats(t_prime, "t")
    return float(((raw - z_mean) / z_std - t_mean) / t_std)


_MODEL_HEADER = struct.Struct("<4sII")


def write_model(m: GmmModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_MODEL_HEADER.pack(MODEL_MAGIC, m.num_mixtures, m.dim))
        for arr in (m.weights, m.means, m.variances):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_model(path) -> GmmModel:
    raw = Path(path).read_bytes()
    if len(raw) < _MODEL_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, m, d = _MODEL_HEADER.unpack_from(raw)
    if magic != MODEL_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if m == 0 or d == 0:
        raise FormatError(f"{path}: empty model (M={m}, D={d})")
    expected = _MODEL_HEADER.size + 8 * (m + 2 * m * d)
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f8", offset=_MODEL_HEADER.size)
    try:
        return GmmModel(values[:m], values[m : m + m * d].reshape(m, d), values[m + m * d :].reshape(m, d))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
