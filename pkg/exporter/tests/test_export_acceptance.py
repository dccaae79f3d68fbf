"""Acceptance checks for the exporter: its traces must be consumable by the
evaluation toolkit through the file formats alone, with both sides computing
identical speaker probabilities."""

import functools
from pathlib import Path

import numpy as np

from trace_exporter import export

from vapeval.aggregation import trace_from_distributions
from vapeval.predictor import load_ptrace, load_trace


def criterion(name):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"FAIL  {name}")
                raise
            print(f"PASS  {name}")
        return run
    return wrap


@criterion("exported traces cross-check against the evaluator within 1e-5")
def test_cross_check_with_evaluator(checkpoint, wav_paths, tmp_path):
    out = tmp_path / "traces"
    for weighting in ("duration", "uniform"):
        manifest = export(wav_paths, checkpoint, out / weighting,
                          weighting=weighting)
        assert len(manifest.files) >= 5
        for entry in manifest.files:
            # load_trace validates the header and every row
            dist = load_trace(Path(entry["trace"]))
            assert dist.frame_rate == manifest.frame_rate
            assert len(dist.probs) == entry["frames"]
            recomputed = trace_from_distributions(
                dist.probs, weighting=weighting, frame_rate=dist.frame_rate)
            side = load_ptrace(Path(entry["sidecar"]))
            assert side.frame_rate == dist.frame_rate
            assert len(side.p_now) == len(recomputed.p_now)
            assert np.max(np.abs(side.p_now - recomputed.p_now)) <= 1e-5
            assert np.max(np.abs(side.p_fut - recomputed.p_fut)) <= 1e-5
            assert entry["argmax_labels"] == np.argmax(dist.probs, axis=1).tolist()


@criterion("re-export reproduces every trace byte for byte")
def test_reexport_determinism(checkpoint, wav_paths, tmp_path):
    first = export(wav_paths, checkpoint, tmp_path / "a")
    second = export(wav_paths, checkpoint, tmp_path / "b")
    for ea, eb in zip(first.files, second.files):
        assert Path(ea["trace"]).read_bytes() == Path(eb["trace"]).read_bytes()
        assert ea["sha256"] == eb["sha256"]
