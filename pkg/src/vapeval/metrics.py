"""Hold/Yield classification over aligned turn regions, plus corpus aggregation.

Three regions are derived from an alignment of a statement+question turn:
the inter-sentence pause, the last 600 ms of speech before the turn ends
(early-yield window), and the normalized tail silence after the turn
(late-yield window).  Over a probability trace:

  weak hold    p_fut favors the agent during the pause
  strong hold  weak hold and p_now also favors the agent (subset)
  early yield  p_fut favors the user over the early-yield window
  late yield   both p_now and p_fut favor the user over the tail

"Favors" defaults to region mean strictly beyond 0.5; exact equality
favors neither side.  An "all-frames" rule (every frame strictly beyond
the threshold) is available as an alternative; reports record which rule
was used.
"""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .aggregation import ProbTrace
from .errors import ValidationError

METRIC_NAMES = ("weak_hold", "strong_hold", "early_yield", "late_yield")

DEFAULT_EARLY_WINDOW = 0.6
DEFAULT_TAIL = 0.4
DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class TurnRegions:
    """Half-open frame spans [start, end) for the three evaluation regions."""

    pause: tuple[int, int]
    early_yield: tuple[int, int]
    late_yield: tuple[int, int]

    def __post_init__(self):
        spans = (self.pause, self.early_yield, self.late_yield)
        for name, (lo, hi) in zip(("pause", "early_yield", "late_yield"), spans):
            if lo < 0 or hi <= lo:
                raise ValueError(f"{name} span [{lo}, {hi}) is empty or negative")
        if not (self.pause[1] <= self.early_yield[0] and self.early_yield[1] <= self.late_yield[0]):
            raise ValueError("regions must be ordered pause < early_yield < late_yield")

    @property
    def end_frame(self) -> int:
        return self.late_yield[1]


@dataclass(frozen=True)
class TurnMetrics:
    weak_hold: bool
    strong_hold: bool
    early_yield: bool
    late_yield: bool

    def __post_init__(self):
        if self.strong_hold and not self.weak_hold:
            raise ValueError("strong_hold implies weak_hold")

    def as_dict(self) -> dict[str, bool]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def derive_regions(
    alignment,
    frame_rate: float,
    early_window: float = DEFAULT_EARLY_WINDOW,
    tail: float = DEFAULT_TAIL,
) -> TurnRegions:
    """Frame spans from alignment markers; the pause is assumed already normalized.

    `alignment` needs statement_end, question_start and question_end attributes
    (seconds).
    """
    for name in ("statement_end", "question_start", "question_end"):
        if getattr(alignment, name, None) is None:
            raise ValidationError(f"alignment is missing marker {name!r}")
    s_end = alignment.statement_end
    q_start = alignment.question_start
    q_end = alignment.question_end
    if tail <= 0:
        raise ValidationError("tail duration must be positive: late-yield span would be empty")
    if q_end - q_start < early_window - 1e-9:
        raise ValidationError(
            f"turn too short for early-yield window: question lasts {q_end - q_start:.3f} s, "
            f"window is {early_window:.3f} s"
        )

    def f(t: float) -> int:
        return int(round(t * frame_rate))

    return TurnRegions(
        pause=(f(s_end), f(q_start)),
        early_yield=(f(q_end - early_window), f(q_end)),
        late_yield=(f(q_end), f(q_end + tail)),
    )


def _favors_agent(values: np.ndarray, rule: str, threshold: float) -> bool:
    if rule == "mean":
        return bool(np.mean(values) > threshold)
    if rule == "all-frames":
        return bool(np.all(values > threshold))
    raise ValueError(f"unknown rule {rule!r}, expected 'mean' or 'all-frames'")


def _favors_user(values: np.ndarray, rule: str, threshold: float) -> bool:
    if rule == "mean":
        return bool(np.mean(values) < threshold)
    if rule == "all-frames":
        return bool(np.all(values < threshold))
    raise ValueError(f"unknown rule {rule!r}, expected 'mean' or 'all-frames'")


def classify(
    trace: ProbTrace,
    regions: TurnRegions,
    rule: str = "mean",
    threshold: float = DEFAULT_THRESHOLD,
) -> TurnMetrics:
    """The four hold/yield booleans for one sample."""
    if regions.end_frame > len(trace):
        raise ValidationError(
            f"regions extend to frame {regions.end_frame} but trace has {len(trace)} frames"
        )
    p_lo, p_hi = regions.pause
    e_lo, e_hi = regions.early_yield
    l_lo, l_hi = regions.late_yield
    weak = _favors_agent(trace.p_fut[p_lo:p_hi], rule, threshold)
    strong = weak and _favors_agent(trace.p_now[p_lo:p_hi], rule, threshold)
    early = _favors_user(trace.p_fut[e_lo:e_hi], rule, threshold)
    late = _favors_user(trace.p_now[l_lo:l_hi], rule, threshold) and _favors_user(
        trace.p_fut[l_lo:l_hi], rule, threshold
    )
    return TurnMetrics(weak_hold=weak, strong_hold=strong, early_yield=early, late_yield=late)


@dataclass(frozen=True)
class MetricSummary:
    """Exact percentages of true outcomes over n samples."""

    weak_hold: float
    strong_hold: float
    early_yield: float
    late_yield: float
    n: int

    def percentages(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}

    def display(self) -> dict[str, int]:
        """Integer percentages for table display (round-half-to-even)."""
        return {name: round(getattr(self, name)) for name in METRIC_NAMES}


def summarize(samples) -> MetricSummary:
    """Percentage of true outcomes per metric, exact values retained."""
    samples = list(samples)
    if not samples:
        raise ValueError("cannot aggregate an empty sample list")
    n = len(samples)
    counts = {name: sum(getattr(s, name) for s in samples) for name in METRIC_NAMES}
    return MetricSummary(n=n, **{name: 100.0 * counts[name] / n for name in METRIC_NAMES})


@dataclass(frozen=True)
class ClassifiedSample:
    sample_id: str
    system: str
    condition: str
    metrics: TurnMetrics


@dataclass
class CorpusReport:
    """Per (system, condition) metric percentages, with run metadata."""

    groups: dict[tuple[str, str], MetricSummary]
    rule: str = "mean"
    metadata: dict = field(default_factory=dict)
    external: dict[tuple[str, str], dict[str, float]] = field(default_factory=dict)

    def systems(self) -> list[str]:
        return sorted({system for system, _ in self.groups})

    def conditions(self) -> list[str]:
        return sorted({condition for _, condition in self.groups})

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["system", "condition", *METRIC_NAMES, "n"])
        for (system, condition) in sorted(self.groups):
            s = self.groups[(system, condition)]
            writer.writerow(
                [system, condition] + [repr(getattr(s, name)) for name in METRIC_NAMES] + [s.n]
            )
        return buf.getvalue()

    def to_json(self) -> str:
        groups = []
        for (system, condition) in sorted(self.groups):
            s = self.groups[(system, condition)]
            entry = {
                "system": system,
                "condition": condition,
                "percentages": s.percentages(),
                "display": s.display(),
                "n": s.n,
            }
            extra = self.external.get((system, condition))
            if extra:
                entry["external"] = dict(sorted(extra.items()))
            groups.append(entry)
        doc = {"rule": self.rule, "metadata": self.metadata, "groups": groups}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def format_table(self) -> str:
        """One table per condition: rows are metrics, columns are systems."""
        lines = []
        systems = self.systems()
        for condition in self.conditions():
            lines.append(f"== {condition} ==")
            header = ["metric"] + systems
            rows = [header]
            for name in METRIC_NAMES:
                row = [name.replace("_", " ")]
                for system in systems:
                    summary = self.groups.get((system, condition))
                    row.append("-" if summary is None else str(summary.display()[name]))
                rows.append(row)
            for extra_key in sorted({k for v in self.external.values() for k in v}):
                row = [extra_key]
                for system in systems:
                    value = self.external.get((system, condition), {}).get(extra_key)
                    row.append("-" if value is None else f"{value:g}")
                rows.append(row)
            rows.append(["n"] + [
                "-" if (s, condition) not in self.groups else str(self.groups[(s, condition)].n)
                for s in systems
            ])
            widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
            for r in rows:
                lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
            lines.append("")
        return "\n".join(lines)


def aggregate_corpus(samples, rule: str = "mean", metadata: dict | None = None) -> CorpusReport:
    """Group classified samples by (system, condition) and summarize each group."""
    samples = list(samples)
    if not samples:
        raise ValueError("cannot aggregate an empty sample list")
    grouped: dict[tuple[str, str], list[TurnMetrics]] = {}
    for sample in samples:
        grouped.setdefault((sample.system, sample.condition), []).append(sample.metrics)
    return CorpusReport(
        groups={key: summarize(values) for key, values in grouped.items()},
        rule=rule,
        metadata=metadata or {},
    )
