"""Aggregation of per-frame label distributions into next-speaker probabilities.

Each of the 256 labels contributes its probability mass to the bins it
activates.  The first two bins (0-0.6 s ahead) form the "now" region, the
last two (0.6-2.0 s) the "fut" region.  Per speaker and region the bin
contributions are combined with duration weights by default (so the weight
is an expected fraction of active time); uniform bin weights are available
as a sensitivity switch.  The final probability is normalized across the
two speakers and reads "probability that the agent is the active speaker
in that region"; a 0/0 normalization (total predicted silence) yields 0.5.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .codec import AGENT, USER, NUM_LABELS, CodecConfig, DEFAULT_CONFIG, decode_label

DISTRIBUTION_SUM_TOL = 1e-4

NOW_BINS = (0, 1)
FUT_BINS = (2, 3)


@lru_cache(maxsize=1)
def bin_activity_table() -> np.ndarray:
    """(256, 2, 4) float table; entry [y, s, i] is 1.0 iff label y activates bin i of speaker s."""
    table = np.zeros((NUM_LABELS, 2, 4))
    for y in range(NUM_LABELS):
        table[y] = decode_label(y)
    table.setflags(write=False)
    return table


def validate_distribution(probs: np.ndarray) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (NUM_LABELS,):
        raise ValueError(f"expected {NUM_LABELS} probabilities, got shape {probs.shape}")
    if np.any(probs < 0):
        raise ValueError("label probabilities must be non-negative")
    total = float(probs.sum())
    if abs(total - 1.0) > DISTRIBUTION_SUM_TOL:
        raise ValueError(f"label probabilities sum to {total}, expected 1 +/- {DISTRIBUTION_SUM_TOL}")
    return probs


def _region_bin_weights(cfg: CodecConfig, weighting: str) -> tuple[np.ndarray, np.ndarray]:
    if weighting == "duration":
        w = np.asarray(cfg.bin_durations, dtype=float)
    elif weighting == "uniform":
        w = np.ones(4)
    else:
        raise ValueError(f"unknown bin weighting {weighting!r}")
    now = w[list(NOW_BINS)]
    fut = w[list(FUT_BINS)]
    return now / now.sum(), fut / fut.sum()


def speaker_region_weight(
    probs: np.ndarray,
    speaker: int,
    region: str,
    cfg: CodecConfig = DEFAULT_CONFIG,
    weighting: str = "duration",
) -> float:
    """Probability-weighted active fraction of `region` for `speaker`, in [0, 1]."""
    probs = validate_distribution(probs)
    if speaker not in (AGENT, USER):
        raise ValueError(f"speaker must be {AGENT} (agent) or {USER} (user)")
    now_w, fut_w = _region_bin_weights(cfg, weighting)
    if region == "now":
        bins, weights = NOW_BINS, now_w
    elif region == "fut":
        bins, weights = FUT_BINS, fut_w
    else:
        raise ValueError(f"region must be 'now' or 'fut', got {region!r}")
    marginals = probs @ bin_activity_table()[:, speaker, list(bins)]
    return float(marginals @ weights)


def _normalize(w_agent: np.ndarray, w_user: np.ndarray) -> np.ndarray:
    total = w_agent + w_user
    out = np.full_like(total, 0.5)
    np.divide(w_agent, total, out=out, where=total > 0)
    return out


def region_probs(
    probs_2d: np.ndarray,
    cfg: CodecConfig = DEFAULT_CONFIG,
    weighting: str = "duration",
) -> np.ndarray:
    """Vectorized (N, 256) -> (N, 2) columns (p_now, p_fut)."""
    probs_2d = np.asarray(probs_2d, dtype=float)
    if probs_2d.ndim != 2 or probs_2d.shape[1] != NUM_LABELS:
        raise ValueError(f"expected (N, {NUM_LABELS}) array, got shape {probs_2d.shape}")
    now_w, fut_w = _region_bin_weights(cfg, weighting)
    # Per-bin marginals first: O(N * 256 * 8) instead of O(N * 256) per region pair.
    marginals = (probs_2d @ bin_activity_table().reshape(NUM_LABELS, 8)).reshape(-1, 2, 4)
    w_now = marginals[:, :, list(NOW_BINS)] @ now_w   # (N, 2) per speaker
    w_fut = marginals[:, :, list(FUT_BINS)] @ fut_w
    return np.stack(
        [_normalize(w_now[:, AGENT], w_now[:, USER]), _normalize(w_fut[:, AGENT], w_fut[:, USER])],
        axis=1,
    )


def p_now(probs, cfg: CodecConfig = DEFAULT_CONFIG, weighting: str = "duration") -> float:
    return float(region_probs(validate_distribution(probs)[None, :], cfg, weighting)[0, 0])


def p_fut(probs, cfg: CodecConfig = DEFAULT_CONFIG, weighting: str = "duration") -> float:
    return float(region_probs(validate_distribution(probs)[None, :], cfg, weighting)[0, 1])


@dataclass(frozen=True)
class ProbTrace:
    """Per-frame (p_now, p_fut) agent probabilities at a fixed frame rate."""

    frame_rate: float
    p_now: np.ndarray
    p_fut: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p_now", np.asarray(self.p_now, dtype=float))
        object.__setattr__(self, "p_fut", np.asarray(self.p_fut, dtype=float))
        if self.frame_rate <= 0:
            raise ValueError("frame rate must be positive")
        if len(self.p_now) != len(self.p_fut):
            raise ValueError("p_now and p_fut must have equal length")
        if len(self.p_now) == 0:
            raise ValueError("trace must contain at least one frame")
        for name, values in (("p_now", self.p_now), ("p_fut", self.p_fut)):
            if np.any((values < 0) | (values > 1)):
                raise ValueError(f"{name} values must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.p_now)


def trace_from_distributions(
    distributions: np.ndarray,
    cfg: CodecConfig = DEFAULT_CONFIG,
    weighting: str = "duration",
    frame_rate: float | None = None,
) -> ProbTrace:
    """Apply the now/fut aggregation frame by frame; length is preserved."""
    distributions = np.asarray(distributions, dtype=float)
    if distributions.ndim != 2 or len(distributions) == 0:
        raise ValueError("expected a non-empty (N, 256) array of distributions")
    for i, row in enumerate(distributions):
        try:
            validate_distribution(row)
        except ValueError as exc:
            raise ValueError(f"frame {i}: {exc}") from exc
    probs = region_probs(distributions, cfg, weighting)
    return ProbTrace(
        frame_rate=cfg.frame_rate if frame_rate is None else frame_rate,
        p_now=probs[:, 0],
        p_fut=probs[:, 1],
    )
