"""Synthetic speaker corpus and the end-to-end window comparison experiment.

The corpus stands in for telephone speech at desk scale: every speaker is
a source-filter voice with its own pitch, vocal-tract scaling and formant
offsets, and every utterance is a random sequence of vowel-like and
fricative-like segments passed through a random channel with additive noise.
"""

from __future__ import annotations

import configparser
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import signal

from .errors import ConfigError
from .evalmetrics import DcfParams, Trial, TrialSet, det_curve, eer, export_det, min_dcf, write_scores, write_trials
from .features import (
    FeatureMatrix,
    MfccConfig,
    config_digest,
    extract,
    read_features,
    read_wav,
    write_features,
    write_wav,
)
from .gmm import AdaptationConfig, ScoringConfig, map_adapt, read_model, score_utterance, train_ubm, write_model, zt_norm
from .windows import Base, WindowSpec

__all__ = [
    "SynthCorpusSpec",
    "ExperimentConfig",
    "synth_corpus",
    "load_manifest",
    "run_experiment",
    "load_experiment_config",
]

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

# Rough adult vowel formants (Hz) used as templates before speaker scaling.
_VOWELS = np.array(
    [
        [730, 1090, 2440, 3400],
        [270, 2290, 3010, 3700],
        [530, 1840, 2480, 3500],
        [570, 840, 2410, 3400],
        [300, 870, 2240, 3300],
        [660, 1720, 2410, 3450],
    ],
    dtype=np.float64,
)


@dataclass(frozen=True)
class SynthCorpusSpec:
    num_speakers: int = 10
    utterances_per_speaker: int = 4
    utterance_seconds: float = 5.0
    sample_rate: int = 8000
    seed: int = 0
    background_speakers: int = 0

    def __post_init__(self):
        if min(self.num_speakers, self.utterances_per_speaker, self.sample_rate) < 1 or self.utterance_seconds <= 0:
            raise ConfigError("corpus sizes, duration and sample rate must be positive")
        if self.background_speakers < 0:
            raise ConfigError("background_speakers must be >= 0")
        if self.num_speakers > 0 and self.utterances_per_speaker < 2:
            raise ConfigError("target speakers need one enrollment and at least one test utterance")


def _speaker_params(rng: np.random.Generator, sample_rate: int) -> dict:
    vtl = rng.uniform(0.82, 1.18)
    offsets = rng.uniform(-0.08, 0.08, size=_VOWELS.shape)
    formants = _VOWELS * vtl * (1 + offsets)
    formants = np.minimum(formants, 0.45 * sample_rate)
    return {
        "f0": float(rng.uniform(85, 260)),
        "pitch_range": float(rng.uniform(0.05, 0.2)),
        "vtl": float(vtl),
        "formants": formants.round(3).tolist(),
        "bandwidths": (rng.uniform(50, 140, size=4) * np.array([1, 1.2, 1.6, 2.0])).round(3).tolist(),
        "tilt": float(rng.uniform(0.85, 0.98)),
        "breathiness": float(rng.uniform(0.02, 0.15)),
    }


def _resonator_sos(freqs, bws, fs):
    sos = []
    for f, bw in zip(freqs, bws):
        r = np.exp(-np.pi * bw / fs)
        theta = 2 * np.pi * f / fs
        sos.append([1 - r, 0, 0, 1, -2 * r * np.cos(theta), r * r])
    return np.array(sos)


def _synth_utterance(params: dict, spec: SynthCorpusSpec, rng: np.random.Generator) -> np.ndarray:
    fs = spec.sample_rate
    total = int(round(spec.utterance_seconds * fs))
    out = np.zeros(total)
    formants = np.asarray(params["formants"])
    bws = np.asarray(params["bandwidths"])
    pos = 0
    while pos < total:
        seg_len = min(int(rng.uniform(0.08, 0.3) * fs), total - pos)
        kind = rng.uniform()
        if kind < 0.12:
            pos += seg_len  # pause
            continue
        if kind < 0.3:
            # fricative-like: high-passed noise shaped by the top formants
            src = rng.standard_normal(seg_len) * 0.3
            sos = _resonator_sos(formants[rng.integers(len(formants)), 2:], bws[2:] * 2, fs)
        else:
            f0 = params["f0"] * (1 + params["pitch_range"] * rng.uniform(-1, 1))
            period = fs / f0
            jitter = 1 + 0.01 * rng.standard_normal(int(seg_len / period) + 2)
            pulses = np.cumsum(period * jitter)
            src = np.zeros(seg_len)
            idx = pulses[pulses < seg_len].astype(int)
            src[idx] = 1.0
            src = signal.lfilter([1.0], [1.0, -2 * params["tilt"], params["tilt"] ** 2], src)
            src += params["breathiness"] * rng.standard_normal(seg_len) * np.std(src)
            vowel = formants[rng.integers(len(formants))] * (1 + 0.03 * rng.standard_normal(4))
            sos = _resonator_sos(np.minimum(vowel, 0.45 * fs), bws, fs)
        seg = signal.sosfilt(sos, src)
        fade = min(int(0.01 * fs), seg_len // 2)
        if fade:
            ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(fade) / fade)
            seg[:fade] *= ramp
            seg[seg_len - fade :] *= ramp[::-1]
        out[pos : pos + seg_len] = seg / (np.std(seg) + 1e-12) * rng.uniform(0.5, 1.0)
        pos += seg_len

    # channel: random first-order tilt plus white noise at 15-30 dB SNR
    channel = rng.uniform(-0.4, 0.4)
    out = signal.lfilter([1.0, channel], [1.0], out)
    snr_db = rng.uniform(15, 30)
    noise = rng.standard_normal(total) * np.std(out) * 10 ** (-snr_db / 20)
    out = out + noise
    return 0.25 * out / (np.max(np.abs(out)) + 1e-12)


def synth_corpus(spec: SynthCorpusSpec, out_dir) -> dict:
    """Generate WAV files plus ``manifest.json`` under ``out_dir``.

    Target speakers contribute one enrollment utterance and the remaining
    utterances as tests; background speakers (if any) are used only for the
    UBM and cohorts.
    """
    out_dir = Path(out_dir)
    (out_dir / "wav").mkdir(parents=True, exist_ok=True)
    root = np.random.SeedSequence(spec.seed)
    speaker_seeds = root.spawn(spec.num_speakers + spec.background_speakers)

    speakers, utterances = [], []
    for i, ss in enumerate(speaker_seeds):
        background = i >= spec.num_speakers
        spk_id = f"bg{i - spec.num_speakers:03d}" if background else f"spk{i:03d}"
        param_rng, utt_seed = (np.random.default_rng(s) for s in ss.spawn(2))
        params = _speaker_params(param_rng, spec.sample_rate)
        speakers.append({"id": spk_id, "role": "background" if background else "target", **params})
        for j in range(spec.utterances_per_speaker):
            utt_id = f"{spk_id}_u{j:02d}"
            rel = f"wav/{utt_id}.wav"
            write_wav(out_dir / rel, _synth_utterance(params, spec, utt_seed), spec.sample_rate)
            split = "background" if background else ("enroll" if j == 0 else "test")
            utterances.append({"id": utt_id, "speaker": spk_id, "path": rel, "split": split})

    manifest = {"spec": asdict(spec), "speakers": speakers, "utterances": utterances}
    (out_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


def load_manifest(corpus_dir) -> dict:
    path = Path(corpus_dir) / MANIFEST_NAME
    if not path.exists():
        raise ConfigError(f"no corpus manifest at {path}")
    return json.loads(path.read_text())


def _default_windows():
    return (
        WindowSpec(Base.HAMMING, 0, 160),
        WindowSpec(Base.HAMMING, 1, 160),
        WindowSpec(Base.HAMMING, 2, 160),
        WindowSpec(Base.MULTITAPER, 0, 160, tapers=6),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    corpus_dir: str
    work_dir: str
    windows: tuple = field(default_factory=_default_windows)
    mfcc: MfccConfig = field(default_factory=MfccConfig)
    mixtures: int = 64
    em_iterations: int = 10
    relevance: float = 14.0
    top_c: int = 5
    dcf: DcfParams = field(default_factory=DcfParams)
    score_norm: str = "none"
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(self.windows))
        if not self.windows:
            raise ConfigError("at least one window is required")
        for w in self.windows:
            if w.length != self.mfcc.frame_samples:
                raise ConfigError(f"window {w.label} has length {w.length}, frames have {self.mfcc.frame_samples}")
        if self.score_norm not in ("none", "zt"):
            raise ConfigError(f"unknown score normalisation {self.score_norm!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def frontend_digest(self) -> str:
        base = asdict(self.mfcc)
        base.pop("window")
        return config_digest(base)

    def backend_digest(self) -> str:
        return config_digest(
            {
                "mixtures": self.mixtures,
                "em_iterations": self.em_iterations,
                "adapt": asdict(AdaptationConfig(self.relevance)),
                "scoring": asdict(ScoringConfig(self.top_c)),
                "score_norm": self.score_norm,
                "dcf": asdict(self.dcf),
                "seed": self.seed,
            }
        )


def _features_for(cfg: ExperimentConfig, mfcc: MfccConfig, corpus: Path, utts, feat_dir: Path):
    feat_dir.mkdir(parents=True, exist_ok=True)

    def one(utt):
        path = feat_dir / f"{utt['id']}.mfc"
        if path.exists():
            return utt["id"], read_features(path)
        samples, rate = read_wav(corpus / utt["path"])
        if rate != mfcc.sample_rate:
            raise ConfigError(f"{utt['path']} is sampled at {rate} Hz, config expects {mfcc.sample_rate}")
        fm = extract(samples, mfcc)
        write_features(fm, path)
        # always continue from the stored float32 values so reruns are identical
        return utt["id"], read_features(path)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            return dict(pool.map(one, utts))
    return dict(one(u) for u in utts)


def _pooled(feats, ids):
    return np.vstack([feats[i].frames for i in ids])


def _run_window(cfg: ExperimentConfig, window: WindowSpec, manifest: dict, work: Path) -> dict:
    mfcc = cfg.mfcc.with_window(window)
    wdigest = config_digest(window)
    # cache keys cover the whole front end, so changing any MFCC option invalidates them
    fdigest = config_digest(mfcc)
    corpus = Path(cfg.corpus_dir)
    utts = manifest["utterances"]
    feats = _features_for(cfg, mfcc, corpus, utts, work / "features" / fdigest)

    background = [u["id"] for u in utts if u["split"] == "background"]
    enroll = [u for u in utts if u["split"] == "enroll"]
    tests = [u for u in utts if u["split"] == "test"]
    if not background:
        raise ConfigError("corpus has no background utterances for UBM training")
    if not enroll or not tests:
        raise ConfigError("corpus needs enrollment and test utterances")

    model_dir = work / "models" / f"{fdigest}-{cfg.backend_digest()}"
    model_dir.mkdir(parents=True, exist_ok=True)
    ubm_path = model_dir / "ubm.gum"
    if ubm_path.exists():
        ubm = read_model(ubm_path)
    else:
        ubm, history = train_ubm(_pooled(feats, background), cfg.mixtures, cfg.em_iterations, cfg.seed)
        log.info("%s: UBM avg log-likelihood %.4f -> %.4f", window.label, history[0], history[-1])
        write_model(ubm, ubm_path)

    adapt_cfg = AdaptationConfig(cfg.relevance)
    score_cfg = ScoringConfig(cfg.top_c)
    enroll_by_spk = {}
    for u in enroll:
        enroll_by_spk.setdefault(u["speaker"], []).append(u["id"])
    targets = {spk: map_adapt(ubm, _pooled(feats, ids), adapt_cfg) for spk, ids in sorted(enroll_by_spk.items())}

    entries, scores = [], []
    for spk, model in targets.items():
        for u in tests:
            entries.append(Trial(spk, u["id"], u["speaker"] == spk))
            scores.append(score_utterance(model, ubm, feats[u["id"]], score_cfg))

    if cfg.score_norm == "zt":
        scores = _apply_zt(scores, entries, targets, ubm, feats, utts, background, adapt_cfg, score_cfg)

    trials = TrialSet(entries)
    curve = det_curve(trials, scores)
    score_dir = work / "scores" / f"{fdigest}-{cfg.backend_digest()}"
    score_dir.mkdir(parents=True, exist_ok=True)
    write_trials(trials, score_dir / "trials.tsv")
    write_scores(scores, score_dir / "scores.txt")
    report_dir = work / "reports"
    report_dir.mkdir(parents=True, exist_ok=True)
    det_path = report_dir / f"det_{wdigest}.csv"
    export_det(curve, det_path)
    dcf = min_dcf(trials, scores, cfg.dcf)
    return {
        "window": window.label,
        "window_digest": wdigest,
        "eer": eer(curve),
        "min_dcf": dcf,
        "det_csv": det_path.name,
        "trials": len(trials),
        "targets": int(trials.labels.sum()),
    }


def _apply_zt(scores, entries, targets, ubm, feats, utts, background, adapt_cfg, score_cfg):
    bg_by_spk = {}
    for u in utts:
        if u["split"] == "background":
            bg_by_spk.setdefault(u["speaker"], []).append(u["id"])
    if len(bg_by_spk) < 3:
        raise ConfigError("zt-norm needs at least three background speakers")
    # one cohort model per background speaker from its first utterance
    cohort = {spk: map_adapt(ubm, feats[ids[0]], adapt_cfg) for spk, ids in sorted(bg_by_spk.items())}
    z_segments = [ids[-1] for _, ids in sorted(bg_by_spk.items())]

    def z_scores(model, exclude=None):
        return np.array(
            [score_utterance(model, ubm, feats[s], score_cfg) for s in z_segments if s not in (exclude or ())]
        )

    z_stats = {spk: z_scores(m) for spk, m in targets.items()}
    t_znorm = []
    for spk, m in cohort.items():
        zs = z_scores(m, exclude=set(bg_by_spk[spk]))
        t_znorm.append((zs.mean(), zs.std()))
    t_cache = {}
    out = []
    for trial, raw in zip(entries, scores):
        if trial.test_id not in t_cache:
            t_cache[trial.test_id] = [score_utterance(m, ubm, feats[trial.test_id], score_cfg) for m in cohort.values()]
        out.append(zt_norm(raw, z_stats[trial.model_id], t_cache[trial.test_id], t_znorm))
    return out


def run_experiment(cfg: ExperimentConfig) -> str:
    """Run every window through the identical pipeline and return the report text.

    The report is also written to ``<work_dir>/reports/report.txt`` together
    with one DET CSV per window.
    """
    manifest = load_manifest(cfg.corpus_dir)
    work = Path(cfg.work_dir)
    rows = [_run_window(cfg, w, manifest, work) for w in cfg.windows]

    lines = [
        "Speaker verification with different analysis windows (GMM-UBM)",
        f"corpus: {len(manifest['speakers'])} speakers, {len(manifest['utterances'])} utterances, "
        f"seed {manifest['spec']['seed']}",
        f"trials: {rows[0]['trials']} ({rows[0]['targets']} target)",
        f"front-end digest: {cfg.frontend_digest()}",
        f"back-end digest:  {cfg.backend_digest()}",
        f"mixtures {cfg.mixtures}, EM iterations {cfg.em_iterations}, relevance {cfg.relevance:g}, "
        f"top-{cfg.top_c}, score norm {cfg.score_norm}",
        f"DCF: c_miss {cfg.dcf.c_miss:g}, c_fa {cfg.dcf.c_fa:g}, p_target {cfg.dcf.p_target:g}",
        "",
        f"{'Window':<34} {'EER (%)':>9} {'minDCF x 100':>13}  {'window digest':<16}  DET file",
        "-" * 100,
    ]
    for r in rows:
        lines.append(
            f"{r['window']:<34} {r['eer']:>9.4f} {100 * r['min_dcf']:>13.4f}  {r['window_digest']:<16}  {r['det_csv']}"
        )
    report = "\n".join(lines) + "\n"
    (work / "reports").mkdir(parents=True, exist_ok=True)
    (work / "reports" / "report.txt").write_text(report)
    (work / "reports" / "report.json").write_text(json.dumps(rows, indent=1, sort_keys=True) + "\n")
    return report


def _parse_windows(orders: str, multitaper: str, length: int, base: str = "hamming"):
    windows = [WindowSpec(Base(base), int(o), length) for o in orders.split(",") if o.strip()]
    for k in multitaper.split(","):
        if k.strip() and int(k) > 0:
            windows.append(WindowSpec(Base.MULTITAPER, 0, length, tapers=int(k)))
    return windows


_MFCC_TYPES = {
    "sample_rate": int,
    "frame_len": float,
    "frame_shift": float,
    "num_filters": int,
    "num_ceps": int,
    "preemphasis": float,
    "deltas": lambda v: str(v).lower() in ("1", "true", "yes", "on"),
    "delta_context": int,
    "fft_size": int,
    "energy_floor": float,
    "vad_percentile": lambda v: None if str(v).lower() in ("", "none", "off") else float(v),
}


def mfcc_from_mapping(values: dict, window: WindowSpec | None = None) -> MfccConfig:
    kwargs = {}
    for key, val in values.items():
        if key not in _MFCC_TYPES:
            raise ConfigError(f"unknown mfcc option {key!r}")
        try:
            kwargs[key] = _MFCC_TYPES[key](val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {val!r}") from exc
    base = MfccConfig(**kwargs)
    if window is not None:
        return base.with_window(window.replace(length=base.frame_samples))
    return base


def load_experiment_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from an INI-style file plus overrides.

    ``overrides`` maps ``section.key`` to a string value and wins over the
    file.  Sections: ``[paths]`` (corpus, work), ``[experiment]`` (orders,
    multitaper, mixtures, em_iterations, relevance, top_c, score_norm, seed,
    workers), ``[mfcc]`` (any MfccConfig field) and ``[dcf]`` (c_miss, c_fa,
    p_target).
    """
    parser = configparser.ConfigParser()
    if path is not None:
        if not Path(path).exists():
            raise ConfigError(f"config file {path} does not exist")
        parser.read(path)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, key = dotted.partition(".")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, str(value))

    def get(section, key, default):
        return parser.get(section, key, fallback=default)

    try:
        mfcc = mfcc_from_mapping(dict(parser.items("mfcc")) if parser.has_section("mfcc") else {})
        windows = _parse_windows(
            get("experiment", "orders", "0,1,2"), get("experiment", "multitaper", "6"), mfcc.frame_samples
        )
        dcf = DcfParams(
            float(get("dcf", "c_miss", 10)), float(get("dcf", "c_fa", 1)), float(get("dcf", "p_target", 0.01))
        )
        corpus = get("paths", "corpus", None)
        work = get("paths", "work", None)
        if corpus is None or work is None:
            raise ConfigError("both paths.corpus and paths.work are required")
        return ExperimentConfig(
            corpus_dir=corpus,
            work_dir=work,
            windows=windows,
            mfcc=mfcc,
            mixtures=int(get("experiment", "mixtures", 64)),
            em_iterations=int(get("experiment", "em_iterations", 10)),
            relevance=float(get("experiment", "relevance", 14.0)),
            top_c=int(get("experiment", "top_c", 5)),
            dcf=dcf,
            score_norm=get("experiment", "score_norm", "none"),
            seed=int(get("experiment", "seed", 0)),
            workers=int(get("experiment", "workers", 1)),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def replace_windows(cfg: ExperimentConfig, windows) -> ExperimentConfig:
    return replace(cfg, windows=tuple(windows))
