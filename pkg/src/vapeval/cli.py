"""Command-line pipeline: extract, permute, normalize, manipulate, evaluate,
oracle-sim, plot, and report subcommands.

Configuration is an INI file with typed defaults; any key can be overridden
with ``--set section.key=value``. Every CSV/JSON artifact embeds a digest of
the effective configuration, and repeated runs over identical inputs produce
byte-identical artifacts (stable iteration order, repr floats, no
timestamps). Exit codes: 0 success, 1 input error, 2 validation error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import aggregation, audio, corpus, metrics, predictor, prosody
from .codec import CodecConfig
from .errors import InputError, ValidationError

DEFAULTS = {
    "paths": {
        "corpus": "",
        "audio_dir": "",
        "alignment_dir": "",
        "trace_dir": "",
        "output_dir": "out",
    },
    "codec": {
        "frame_rate": "50.0",
        "bin_durations": "0.2, 0.4, 0.6, 0.8",
        "horizon": "2.0",
    },
    "aggregation": {"weighting": "duration"},
    "metrics": {
        "rule": "mean",
        "threshold": "0.5",
        "early_window": "0.6",
        "tail": "0.4",
    },
    "audio": {"sample_rate": "16000", "pause": "0.4", "tail": "0.4"},
    "prosody": {"gain_db": "3.0", "stretch_factor": "1.5", "pitch_target": ""},
    "corpus": {"min_words_per_sentence": "5", "min_chars": "50", "max_chars": "250"},
    "run": {"workers": "1"},
}


class RunConfig:
    """Effective settings: defaults, then config file, then --set overrides."""

    def __init__(self, parser: configparser.ConfigParser):
        self._parser = parser

    def get(self, section: str, key: str) -> str:
        return self._parser.get(section, key)

    def getfloat(self, section: str, key: str) -> float:
        try:
            return self._parser.getfloat(section, key)
        except ValueError as exc:
            raise ValidationError(f"{section}.{key} must be a number: {exc}") from exc

    def getint(self, section: str, key: str) -> int:
        try:
            return self._parser.getint(section, key)
        except ValueError as exc:
            raise ValidationError(f"{section}.{key} must be an integer: {exc}") from exc

    def lines(self) -> list[str]:
        out = []
        for section in sorted(self._parser.sections()):
            for key in sorted(self._parser[section]):
                out.append(f"{section}.{key}={self._parser[section][key]}")
        return out

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.lines()).encode()).hexdigest()

    def as_dict(self) -> dict[str, str]:
        return dict(line.split("=", 1) for line in self.lines())

    def codec_config(self) -> CodecConfig:
        durations = tuple(
            float(part)
            for part in self.get("codec", "bin_durations").split(",")
            if part.strip()
        )
        return CodecConfig(
            bin_durations=durations,
            horizon=self.getfloat("codec", "horizon"),
            frame_rate=self.getfloat("codec", "frame_rate"),
        )

    def filter_config(self) -> corpus.FilterConfig:
        return corpus.FilterConfig(
            min_words_per_sentence=self.getint("corpus", "min_words_per_sentence"),
            min_chars=self.getint("corpus", "min_chars"),
            max_chars=self.getint("corpus", "max_chars"),
        )

    def manipulation_params(self) -> prosody.ManipulationParams:
        raw_target = self.get("prosody", "pitch_target").strip()
        return prosody.ManipulationParams(
            gain_db=self.getfloat("prosody", "gain_db"),
            stretch_factor=self.getfloat("prosody", "stretch_factor"),
            pitch_target=float(raw_target) if raw_target else None,
        )

    def path(self, key: str, override: str | None = None) -> Path:
        raw = override or self.get("paths", key)
        if not raw:
            raise InputError(
                f"paths.{key} is not set; pass it in the config or on the command line"
            )
        return Path(raw)

    def existing_dir(self, key: str, override: str | None = None) -> Path:
        p = self.path(key, override)
        if not p.is_dir():
            raise InputError(f"paths.{key}: directory {p} does not exist")
        return p

    def output_dir(self, override: str | None = None) -> Path:
        p = self.path("output_dir", override)
        p.mkdir(parents=True, exist_ok=True)
        return p


def load_run_config(path: str | None, overrides: list[str]) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_dict(DEFAULTS)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise InputError(f"bad config {path}: {exc}") from exc
        for section in parser.sections():
            if section not in DEFAULTS:
                raise ValidationError(f"{path}: unknown config section [{section}]")
            for key in parser[section]:
                if key not in DEFAULTS[section]:
                    raise ValidationError(f"{path}: unknown key {section}.{key}")
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ValidationError(f"--set expects section.key=value, got {item!r}")
        target, value = item.split("=", 1)
        section, key = target.split(".", 1)
        if section not in DEFAULTS or key not in DEFAULTS[section]:
            raise ValidationError(f"--set names unknown key {section}.{key}")
        parser[section][key] = value
    return RunConfig(parser)


def _digest_comment(cfg: RunConfig) -> str:
    return f"# config_digest={cfg.digest()}\n"


def _write_csv(path: Path, header: list[str], rows: list[list], cfg: RunConfig) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(_digest_comment(cfg) + buf.getvalue())


def _meta(cfg: RunConfig) -> dict:
    return {"config_digest": cfg.digest(), "config": cfg.as_dict()}


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


# --- sample discovery -----------------------------------------------------

def discover_samples(alignment_dir: Path) -> list[dict]:
    """Alignment files laid out as <system>/<condition>/<id>.json.

    Files above that depth fall back to system "default" and condition
    "original" so single-file layouts still evaluate.
    """
    found = []
    for path in sorted(alignment_dir.rglob("*.json"), key=lambda p: str(p)):
        rel = path.relative_to(alignment_dir)
        parts = rel.parts
        if len(parts) >= 3:
            system, condition = parts[0], parts[1]
        elif len(parts) == 2:
            system, condition = parts[0], "original"
        else:
            system, condition = "default", "original"
        found.append(
            {
                "rel": rel,
                "alignment": path,
                "system": system,
                "condition": condition,
                "sample_id": rel.stem,
            }
        )
    return found


class FrameRateMismatch(ValidationError):
    """Trace frame rate contradicts codec.frame_rate; the run configuration is wrong."""


def _load_prob_trace(
    trace_path: Path, cfg: RunConfig, codec_cfg: CodecConfig
) -> aggregation.ProbTrace:
    if trace_path.suffix == ".vapt":
        dist = predictor.load_trace(trace_path)
        _check_frame_rate(trace_path, dist.frame_rate, codec_cfg)
        return aggregation.trace_from_distributions(
            dist.probs,
            codec_cfg,
            weighting=cfg.get("aggregation", "weighting"),
            frame_rate=dist.frame_rate,
        )
    ptrace = predictor.load_ptrace(trace_path)
    _check_frame_rate(trace_path, ptrace.frame_rate, codec_cfg)
    return ptrace


def _check_frame_rate(trace_path: Path, found: float, codec_cfg: CodecConfig) -> None:
    if abs(found - codec_cfg.frame_rate) > 1e-6:
        raise FrameRateMismatch(
            f"{trace_path}: trace frame_rate {found} does not match "
            f"configured codec.frame_rate {codec_cfg.frame_rate}"
        )


def _load_external(path: Path) -> dict[tuple[str, str], dict[str, float]]:
    """Externally produced metric columns (system,condition,metric,value)."""
    table: dict[tuple[str, str], dict[str, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows or [c.strip() for c in rows[0]] != ["system", "condition", "metric", "value"]:
        raise ValidationError(
            f"{path}: expected header system,condition,metric,value"
        )
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise ValidationError(f"{path}: row {i} needs 4 columns")
        system, condition, metric, value = row
        try:
            table.setdefault((system, condition), {})[metric] = float(value)
        except ValueError as exc:
            raise ValidationError(f"{path}: row {i} value {value!r} not numeric") from exc
    return table


# --- subcommands ------------------------------------------------------------

def cmd_extract(args, cfg: RunConfig) -> int:
    corpus_path = cfg.path("corpus", args.corpus)
    if not corpus_path.is_file():
        raise InputError(f"corpus file {corpus_path} does not exist")
    out = cfg.output_dir(args.out)
    dialogs = corpus.load_dialogs(corpus_path)
    rejects: list = []
    pairs = corpus.extract_pairs(dialogs, cfg.filter_config(), rejects=rejects)
    if not pairs:
        raise InputError("no qualifying pairs in the corpus")

    header = [
        "sample_id", "dialog_id", "turn_index", "sentence_index",
        "statement", "question", *corpus.CONDITIONS,
    ]
    rows = [
        [
            p.sample_id, p.dialog_id, p.turn_index, p.sentence_index,
            p.statement, p.question,
            *(corpus.permute(p, c) for c in corpus.CONDITIONS),
        ]
        for p in pairs
    ]
    _write_csv(out / "pairs.csv", header, rows, cfg)
    _write_json(
        out / "pairs.json",
        {
            "meta": _meta(cfg),
            "pairs": [
                {
                    "sample_id": p.sample_id,
                    "dialog_id": p.dialog_id,
                    "turn_index": p.turn_index,
                    "sentence_index": p.sentence_index,
                    "statement": p.statement,
                    "question": p.question,
                    "prompts": {c: corpus.permute(p, c) for c in corpus.CONDITIONS},
                }
                for p in pairs
            ],
        },
    )
    _write_csv(
        out / "rejected.csv",
        ["sample_id", "reason", "statement", "question"],
        [[c.sample_id, reason, c.statement, c.question] for c, reason in rejects],
        cfg,
    )
    print(f"extracted {len(pairs)} pairs ({len(rejects)} rejected) -> {out}")
    return 0


def cmd_permute(args, cfg: RunConfig) -> int:
    manifest = Path(args.pairs)
    if not manifest.is_file():
        raise InputError(f"pairs manifest {manifest} does not exist")
    out = cfg.output_dir(args.out)
    try:
        doc = json.loads(manifest.read_text())
        entries = doc["pairs"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"{manifest} is not a pairs manifest: {exc}") from exc
    conditions = corpus.CONDITIONS if args.condition == "all" else (args.condition,)
    rows = []
    for entry in entries:
        pair = corpus.SentencePair(
            statement=entry["statement"],
            question=entry["question"],
            dialog_id=entry["dialog_id"],
            turn_index=entry["turn_index"],
            sentence_index=entry.get("sentence_index", 0),
        )
        for condition in conditions:
            rows.append([pair.sample_id, condition, corpus.permute(pair, condition)])
    _write_csv(out / "prompts.csv", ["sample_id", "condition", "text"], rows, cfg)
    print(f"wrote {len(rows)} prompts -> {out / 'prompts.csv'}")
    return 0


def _audio_batch(args, cfg: RunConfig, transform, manifest_header):
    """Shared walk for normalize/manipulate: alignment+wav in, wav+alignment out."""
    alignment_dir = cfg.existing_dir("alignment_dir", args.alignment_dir)
    audio_dir = cfg.existing_dir("audio_dir", args.audio_dir)
    out = cfg.output_dir(args.out)
    sample_rate = cfg.getint("audio", "sample_rate")
    samples = discover_samples(alignment_dir)
    if not samples:
        raise InputError(f"no alignment files under {alignment_dir}")
    rows, exceptions = [], []
    for sample in samples:
        rel = sample["rel"]
        wav_path = audio_dir / rel.with_suffix(".wav")
        if not wav_path.is_file():
            exceptions.append(f"{rel}: missing audio {wav_path}")
            continue
        try:
            buf = audio.load_wav(wav_path, sample_rate)
            al = audio.parse_alignment(sample["alignment"])
            new_buf, new_al, row = transform(buf, al)
        except (InputError, ValidationError, ValueError) as exc:
            exceptions.append(f"{rel}: {exc}")
            continue
        dest_wav = out / rel.with_suffix(".wav")
        dest_wav.parent.mkdir(parents=True, exist_ok=True)
        audio.save_wav(dest_wav, new_buf)
        audio.write_alignment(out / rel, new_al)
        rows.append([str(rel.with_suffix("")), *row])
    (out / "exceptions.txt").write_text(
        "".join(line + "\n" for line in exceptions)
    )
    if not rows:
        raise InputError(
            f"no sample processed; see {out / 'exceptions.txt'}"
        )
    _write_csv(out / "manifest.csv", manifest_header, rows, cfg)
    print(f"processed {len(rows)} samples ({len(exceptions)} skipped) -> {out}")
    return 0


def cmd_normalize(args, cfg: RunConfig) -> int:
    pause = cfg.getfloat("audio", "pause")
    tail = cfg.getfloat("audio", "tail")

    def transform(buf, al):
        new_buf, new_al = audio.normalize_silences(buf, al, pause=pause, tail=tail)
        gap_ms = (new_al.question_start - new_al.statement_end) * 1000.0
        return new_buf, new_al, [
            _fmt(buf.duration), _fmt(new_buf.duration), _fmt(gap_ms),
        ]

    return _audio_batch(
        args, cfg, transform,
        ["sample", "duration_in", "duration_out", "gap_ms"],
    )


def cmd_manipulate(args, cfg: RunConfig) -> int:
    params = cfg.manipulation_params()

    def transform(buf, al):
        result = prosody.manipulate_final_syllable(buf, al, params)
        target = "" if result.pitch_target is None else repr(result.pitch_target)
        return result.audio, result.alignment, [
            _fmt(result.span[0]), _fmt(result.span[1]), target,
            result.clip_count, _fmt(params.stretch_factor), _fmt(params.gain_db),
        ]

    return _audio_batch(
        args, cfg, transform,
        ["sample", "span_start", "span_end", "pitch_target_hz",
         "clip_count", "stretch_factor", "gain_db"],
    )


def cmd_evaluate(args, cfg: RunConfig) -> int:
    alignment_dir = cfg.existing_dir("alignment_dir", args.alignment_dir)
    trace_dir = cfg.existing_dir("trace_dir", args.trace_dir)
    out = cfg.output_dir(args.out)
    codec_cfg = cfg.codec_config()
    rule = cfg.get("metrics", "rule")
    threshold = cfg.getfloat("metrics", "threshold")
    early_window = cfg.getfloat("metrics", "early_window")
    tail = cfg.getfloat("metrics", "tail")

    samples = discover_samples(alignment_dir)
    if not samples:
        raise InputError(f"no alignment files under {alignment_dir}")

    exceptions: list[str] = []

    def process(sample):
        rel = sample["rel"]
        trace_path = trace_dir / rel.with_suffix(".vapt")
        if not trace_path.is_file():
            trace_path = trace_dir / rel.with_suffix(".ptrace")
        if not trace_path.is_file():
            return rel, None, f"{rel}: missing trace {trace_dir / rel.with_suffix('.vapt')}"
        try:
            al = audio.parse_alignment(sample["alignment"])
            trace = _load_prob_trace(trace_path, cfg, codec_cfg)
            regions = metrics.derive_regions(
                al, trace.frame_rate, early_window=early_window, tail=tail
            )
            classified = metrics.ClassifiedSample(
                sample_id=sample["sample_id"],
                system=sample["system"],
                condition=sample["condition"],
                metrics=metrics.classify(trace, regions, rule=rule, threshold=threshold),
            )
        except FrameRateMismatch:
            raise
        except (InputError, ValidationError, ValueError) as exc:
            return rel, None, f"{rel}: {exc}"
        return rel, classified, None

    workers = max(cfg.getint("run", "workers"), 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(process, samples))
    else:
        results = [process(sample) for sample in samples]

    classified = []
    for rel, result, problem in results:
        if problem is not None:
            exceptions.append(problem)
        else:
            classified.append(result)
    (out / "exceptions.txt").write_text("".join(line + "\n" for line in exceptions))
    if not classified:
        raise InputError(f"no sample could be evaluated; see {out / 'exceptions.txt'}")

    rows = [
        [s.system, s.condition, s.sample_id]
        + [_fmt(getattr(s.metrics, name)) for name in metrics.METRIC_NAMES]
        for s in sorted(classified, key=lambda s: (s.system, s.condition, s.sample_id))
    ]
    _write_csv(
        out / "samples.csv",
        ["system", "condition", "sample_id", *metrics.METRIC_NAMES],
        rows, cfg,
    )
    report = metrics.aggregate_corpus(
        classified, rule=rule,
        metadata={**_meta(cfg), "skipped": len(exceptions)},
    )
    if args.external:
        report.external = _load_external(Path(args.external))
    _write_report(out, report, cfg)
    print(report.format_table(), end="")
    print(f"evaluated {len(classified)} samples ({len(exceptions)} skipped) -> {out}")
    return 0


def _write_report(out: Path, report: metrics.CorpusReport, cfg: RunConfig) -> None:
    (out / "report.csv").write_text(_digest_comment(cfg) + report.to_csv())
    (out / "report.json").write_text(report.to_json())
    (out / "report.txt").write_text(report.format_table())


def cmd_report(args, cfg: RunConfig) -> int:
    samples_path = Path(args.samples)
    if not samples_path.is_file():
        raise InputError(f"per-sample CSV {samples_path} does not exist")
    out = cfg.output_dir(args.out)
    with open(samples_path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    expected = ["system", "condition", "sample_id", *metrics.METRIC_NAMES]
    if not rows or rows[0] != expected:
        raise ValidationError(f"{samples_path}: expected header {','.join(expected)}")
    classified = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(expected):
            raise ValidationError(f"{samples_path}: row {i} has {len(row)} columns")
        flags = {}
        for name, cell in zip(metrics.METRIC_NAMES, row[3:]):
            if cell not in ("true", "false"):
                raise ValidationError(
                    f"{samples_path}: row {i} {name} must be true/false, got {cell!r}"
                )
            flags[name] = cell == "true"
        classified.append(
            metrics.ClassifiedSample(
                sample_id=row[2], system=row[0], condition=row[1],
                metrics=metrics.TurnMetrics(**flags),
            )
        )
    report = metrics.aggregate_corpus(
        classified, rule=cfg.get("metrics", "rule"), metadata=_meta(cfg)
    )
    if args.external:
        report.external = _load_external(Path(args.external))
    _write_report(out, report, cfg)
    print(report.format_table(), end="")
    return 0


def cmd_oracle_sim(args, cfg: RunConfig) -> int:
    scenario_path = Path(args.scenarios)
    if not scenario_path.is_file():
        raise InputError(f"scenario file {scenario_path} does not exist")
    out = cfg.output_dir(args.out)
    codec_cfg = cfg.codec_config()
    try:
        doc = json.loads(scenario_path.read_text())
        entries = doc["scenarios"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"{scenario_path} is not a scenario file: {exc}") from exc
    if not entries:
        raise InputError(f"{scenario_path} lists no scenarios")
    rows = []
    for entry in entries:
        try:
            sid = entry["id"]
            s = predictor.scenario(
                duration=float(entry["duration"]),
                agent=entry.get("agent", ()),
                user=entry.get("user", ()),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"{scenario_path}: bad scenario entry: {exc}") from exc
        system = entry.get("system", "oracle")
        condition = entry.get("condition", "original")
        dest = out / system / condition
        dest.mkdir(parents=True, exist_ok=True)
        trace = predictor.oracle_distributions(s, codec_cfg)
        predictor.write_trace(dest / f"{sid}.vapt", trace)
        if "alignment" in entry:
            al = audio.alignment_from_dict(entry["alignment"])
            audio.write_alignment(dest / f"{sid}.json", al)
        rows.append([sid, system, condition, len(trace), _fmt(trace.frame_rate)])
    _write_csv(
        out / "manifest.csv",
        ["id", "system", "condition", "frames", "frame_rate"],
        rows, cfg,
    )
    print(f"wrote {len(rows)} oracle traces -> {out}")
    return 0


def _mel_matrix(n_bins: int, sample_rate: int, n_mels: int = 64) -> np.ndarray:
    """Triangular mel filterbank over an rfft bin grid."""

    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)

    fft_freqs = np.linspace(0, sample_rate / 2, n_bins)
    mel_pts = mel_to_hz(np.linspace(0, hz_to_mel(sample_rate / 2), n_mels + 2))
    weights = np.zeros((n_mels, n_bins))
    for i in range(n_mels):
        lo, mid, hi = mel_pts[i : i + 3]
        rising = (fft_freqs - lo) / max(mid - lo, 1e-9)
        falling = (hi - fft_freqs) / max(hi - mid, 1e-9)
        weights[i] = np.clip(np.minimum(rising, falling), 0, None)
    return weights


def cmd_plot(args, cfg: RunConfig) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from scipy.signal import stft

    wav_path = Path(args.audio)
    trace_path = Path(args.trace)
    for p in (wav_path, trace_path):
        if not p.is_file():
            raise InputError(f"missing input {p}")
    prefix = Path(args.out) if args.out else cfg.output_dir(None) / "plot"
    prefix.parent.mkdir(parents=True, exist_ok=True)
    codec_cfg = cfg.codec_config()

    buf = audio.load_wav(wav_path, cfg.getint("audio", "sample_rate"))
    mono = buf.samples if buf.channels == 1 else buf.samples[0]
    trace = _load_prob_trace(trace_path, cfg, codec_cfg)
    trace_dur = len(trace) / trace.frame_rate
    if trace_dur < buf.duration - 1e-6:
        print(
            f"warning: trace covers {trace_dur:.2f}s of {buf.duration:.2f}s audio; "
            "plot truncated",
            file=sys.stderr,
        )

    markers = {}
    if args.alignment:
        al = audio.parse_alignment(args.alignment)
        regions = metrics.derive_regions(
            al, trace.frame_rate,
            early_window=cfg.getfloat("metrics", "early_window"),
            tail=cfg.getfloat("metrics", "tail"),
        )
        markers = {
            "pause": list(regions.pause),
            "early_yield": list(regions.early_yield),
            "late_yield": list(regions.late_yield),
        }

    t_max = min(buf.duration, trace_dur)
    times = np.arange(len(trace)) / trace.frame_rate

    fig, axes = plt.subplots(3, 1, figsize=(10, 7), sharex=True)
    freqs_n = 512
    _, stft_t, z = stft(mono, fs=buf.sample_rate, nperseg=freqs_n)
    mel = _mel_matrix(z.shape[0], buf.sample_rate)
    spec_db = 10.0 * np.log10(mel @ (np.abs(z) ** 2) + 1e-10)
    axes[0].imshow(
        spec_db, origin="lower", aspect="auto",
        extent=(0, float(stft_t[-1]), 0, spec_db.shape[0]),
        cmap="magma",
    )
    axes[0].set_ylabel("mel band")
    for ax, series, label in (
        (axes[1], trace.p_now, "p_now"),
        (axes[2], trace.p_fut, "p_fut"),
    ):
        ax.plot(times, series, lw=1.2)
        ax.axhline(0.5, color="gray", lw=0.8, ls="--")
        ax.set_ylim(-0.05, 1.05)
        ax.set_ylabel(label)
        for name, (lo, hi) in markers.items():
            ax.axvline(lo / trace.frame_rate, color="k", lw=0.6)
            ax.axvline(hi / trace.frame_rate, color="k", lw=0.6)
    axes[2].set_xlabel("time (s)")
    axes[2].set_xlim(0, t_max)
    fig.tight_layout()
    fig.savefig(f"{prefix}.png", dpi=120)
    plt.close(fig)

    _write_csv(
        Path(f"{prefix}.csv"),
        ["time", "p_now", "p_fut"],
        [[_fmt(float(t)), _fmt(float(n)), _fmt(float(f))]
         for t, n, f in zip(times, trace.p_now, trace.p_fut)],
        cfg,
    )
    _write_json(
        Path(f"{prefix}.json"),
        {
            "meta": _meta(cfg),
            "frame_rate": trace.frame_rate,
            "frames": len(trace),
            "markers": markers,
        },
    )
    print(f"wrote {prefix}.png / .csv / .json")
    return 0


# --- argument parsing -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vapeval",
        description="Turn-taking cue evaluation pipeline for synthesized speech.",
    )
    parser.add_argument("--config", help="INI config file")
    parser.add_argument(
        "--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
        help="override any config key (repeatable)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract statement+question pairs")
    p.add_argument("--corpus", help="dialog corpus JSON")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("permute", help="render prompt text per condition")
    p.add_argument("--pairs", required=True, help="pairs.json from extract")
    p.add_argument(
        "--condition", default="all", choices=("all", *corpus.CONDITIONS),
    )
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_permute)

    p = sub.add_parser("normalize", help="normalize pause and tail silences")
    p.add_argument("--audio-dir", help="input WAV root")
    p.add_argument("--alignment-dir", help="alignment JSON root")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("manipulate", help="edit final-syllable prosody")
    p.add_argument("--audio-dir", help="input WAV root")
    p.add_argument("--alignment-dir", help="alignment JSON root")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_manipulate)

    p = sub.add_parser("evaluate", help="classify hold/yield metrics per sample")
    p.add_argument("--alignment-dir", help="alignment JSON root")
    p.add_argument("--trace-dir", help="trace root (.vapt or .ptrace)")
    p.add_argument("--external", help="external metric CSV to merge into reports")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("oracle-sim", help="write future-leak oracle traces")
    p.add_argument("--scenarios", required=True, help="scenario JSON file")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_oracle_sim)

    p = sub.add_parser("plot", help="render spectrogram + probability panels")
    p.add_argument("--audio", required=True, help="WAV file")
    p.add_argument("--trace", required=True, help="trace file")
    p.add_argument("--alignment", help="alignment JSON for region markers")
    p.add_argument("--out", help="output file prefix")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("report", help="re-aggregate a per-sample CSV")
    p.add_argument("--samples", required=True, help="samples.csv from evaluate")
    p.add_argument("--external", help="external metric CSV to merge into reports")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_run_config(args.config, args.set)
        return args.func(args, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
