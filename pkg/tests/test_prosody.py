import numpy as np
import pytest

from vapeval.audio import Alignment, AudioBuffer, WordSpan, assemble_stereo
from vapeval.errors import ValidationError
from vapeval.prosody import (
    F0Contour,
    ManipulationParams,
    apply_gain,
    estimate_f0,
    flatten_pitch,
    manipulate_final_syllable,
    stretch,
)

SR = 16000


def cents(f, ref):
    return 1200.0 * np.log2(np.asarray(f, dtype=float) / ref)


def sine(freq, duration, amplitude=0.3, sr=SR):
    t = np.arange(int(round(duration * sr))) / sr
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq * t), sr)


class TestEstimateF0:
    def test_pure_tone_within_one_hz(self):
        c = estimate_f0(sine(220.0, 0.5))
        assert c.voiced.all()
        assert np.max(np.abs(c.voiced_f0 - 220.0)) < 1.0
        assert abs(c.mean_f0() - 220.0) < 1.0

    def test_harmonic_rich_sawtooth_avoids_octave_errors(self):
        t = np.arange(int(0.5 * SR)) / SR
        saw = AudioBuffer(0.3 * (2.0 * ((100.0 * t) % 1.0) - 1.0), SR)
        c = estimate_f0(saw)
        assert c.voiced.all()
        assert np.max(np.abs(c.voiced_f0 - 100.0)) < 1.0

    def test_silence_is_unvoiced(self):
        c = estimate_f0(AudioBuffer(np.zeros(SR), SR))
        assert not c.voiced.any()
        assert np.all(c.confidence == 0.0)
        with pytest.raises(ValidationError, match="no voiced frames"):
            c.mean_f0()

    def test_frame_timing(self):
        c = estimate_f0(sine(220.0, 0.5))
        assert c.hop == pytest.approx(0.010)
        # first frame centered on half the 25 ms analysis window
        assert c.times[0] == pytest.approx(0.0125)
        assert np.allclose(np.diff(c.times), 0.010)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValidationError, match="mono"):
            estimate_f0(assemble_stereo(sine(220.0, 0.5)))
        with pytest.raises(ValidationError, match="range"):
            estimate_f0(sine(220.0, 0.5), f0_min=400.0, f0_max=60.0)
        with pytest.raises(ValidationError, match="window"):
            estimate_f0(AudioBuffer(np.zeros(100), SR))
        with pytest.raises(ValidationError, match="too short"):
            estimate_f0(AudioBuffer(np.zeros(500), SR))


class TestF0Contour:
    def test_validation(self):
        t = np.array([0.0, 0.01])
        with pytest.raises(ValidationError, match="equally long"):
            F0Contour(hop=0.01, times=t, f0=np.zeros(3), confidence=np.zeros(2))
        with pytest.raises(ValidationError, match="positive"):
            F0Contour(hop=0.01, times=t, f0=np.array([-5.0, np.nan]),
                      confidence=np.zeros(2))
        with pytest.raises(ValidationError, match="confidence"):
            F0Contour(hop=0.01, times=t, f0=np.full(2, np.nan),
                      confidence=np.array([0.0, 1.5]))

    def test_voiced_mask(self):
        c = F0Contour(hop=0.01, times=np.array([0.0, 0.01, 0.02]),
                      f0=np.array([200.0, np.nan, 210.0]),
                      confidence=np.array([0.9, 0.1, 0.8]))
        assert c.voiced.tolist() == [True, False, True]
        assert c.voiced_f0.tolist() == [200.0, 210.0]
        assert c.mean_f0() == pytest.approx(205.0)
        assert len(c) == 3


class TestStretch:
    def test_exact_output_length(self):
        buf = sine(220.0, 1.0, amplitude=0.25)
        out = stretch(buf, (0.2, 0.7), 1.5)
        span_n = int(0.5 * SR)
        assert out.n_samples == buf.n_samples - span_n + int(round(span_n * 1.5))

    def test_pitch_preserved_within_20_cents(self):
        buf = sine(220.0, 1.0, amplitude=0.25)
        out = stretch(buf, (0.2, 0.7), 1.5)
        mid = AudioBuffer(out.samples[int(0.25 * SR):int(0.85 * SR)], SR)
        c = estimate_f0(mid)
        assert c.voiced.any()
        assert np.max(np.abs(cents(c.voiced_f0, 220.0))) < 20.0

    def test_overlap_add_keeps_level_flat(self):
        buf = sine(220.0, 1.0, amplitude=0.25)
        out = stretch(buf, (0.2, 0.7), 1.5)
        seg = out.samples[int(0.25 * SR):int(0.85 * SR)]
        frames = seg[: seg.shape[0] // 160 * 160].reshape(-1, 160)
        rms = np.sqrt((frames ** 2).mean(axis=1))
        nominal = 0.25 / np.sqrt(2.0)
        assert np.all(np.abs(rms / nominal - 1.0) < 0.10)

    def test_untouched_audio_bit_identical(self):
        buf = sine(220.0, 1.0, amplitude=0.25)
        out = stretch(buf, (0.2, 0.7), 1.5)
        s0, s1 = int(0.2 * SR), int(0.7 * SR)
        assert np.array_equal(out.samples[:s0], buf.samples[:s0])
        tail_n = buf.n_samples - s1
        assert np.array_equal(out.samples[-tail_n:], buf.samples[s1:])

    def test_factor_one_is_identity(self):
        buf = sine(220.0, 0.5)
        out = stretch(buf, (0.1, 0.4), 1.0)
        assert np.array_equal(out.samples, buf.samples)

    def test_rejects_bad_inputs(self):
        buf = sine(220.0, 0.5)
        with pytest.raises(ValidationError, match=">= 1"):
            stretch(buf, (0.1, 0.4), 0.5)
        with pytest.raises(ValidationError, match="outside"):
            stretch(buf, (0.1, 0.9), 1.5)
        with pytest.raises(ValidationError, match="outside"):
            stretch(buf, (0.4, 0.1), 1.5)
        with pytest.raises(ValidationError, match="mono"):
            stretch(assemble_stereo(buf), (0.1, 0.4), 1.5)


class TestFlattenPitch:
    def test_chirp_flattens_to_target(self):
        t = np.arange(SR) / SR
        # linear chirp 180 -> 240 Hz
        chirp = AudioBuffer(0.3 * np.sin(2 * np.pi * (180.0 * t + 30.0 * t * t)), SR)
        out = flatten_pitch(chirp, (0.0, 1.0), 210.0)
        assert out.n_samples == chirp.n_samples
        c = estimate_f0(out)
        dev = cents(c.voiced_f0, 210.0)
        assert c.voiced_f0.size > 50
        assert float(np.std(dev)) < 5.0
        assert abs(float(np.mean(dev))) < 5.0

    def test_constant_pitch_is_a_fixed_point(self):
        buf = sine(220.0, 1.0, amplitude=0.25)
        out = flatten_pitch(buf, (0.0, 1.0), 220.0)
        c = estimate_f0(out)
        assert np.max(np.abs(cents(c.voiced_f0, 220.0))) < 5.0

    def test_duration_and_outside_samples_preserved(self):
        buf = sine(200.0, 1.0, amplitude=0.25)
        out = flatten_pitch(buf, (0.3, 0.7), 210.0)
        assert out.n_samples == buf.n_samples
        s0, s1 = int(0.3 * SR), int(0.7 * SR)
        assert np.array_equal(out.samples[:s0], buf.samples[:s0])
        assert np.array_equal(out.samples[s1:], buf.samples[s1:])

    def test_unvoiced_span_warns_and_copies(self):
        silent = AudioBuffer(np.zeros(SR), SR)
        with pytest.warns(UserWarning, match="unvoiced"):
            out = flatten_pitch(silent, (0.0, 1.0), 200.0)
        assert np.array_equal(out.samples, silent.samples)

    def test_too_short_span_warns_and_copies(self):
        buf = sine(220.0, 0.5)
        with pytest.warns(UserWarning, match="too short"):
            out = flatten_pitch(buf, (0.0, 0.01), 220.0)
        assert np.array_equal(out.samples, buf.samples)

    def test_target_outside_tracker_range(self):
        buf = sine(220.0, 0.5)
        with pytest.raises(ValidationError, match="outside"):
            flatten_pitch(buf, (0.0, 0.5), 500.0)


class TestApplyGain:
    def test_gain_is_exact_when_unclipped(self):
        buf = sine(220.0, 1.0, amplitude=0.25)
        out, clipped = apply_gain(buf, (0.2, 0.7), 3.0)
        assert clipped == 0
        s0, s1 = int(0.2 * SR), int(0.7 * SR)
        r_in = np.sqrt(np.mean(buf.samples[s0:s1] ** 2))
        r_out = np.sqrt(np.mean(out.samples[s0:s1] ** 2))
        assert 20.0 * np.log10(r_out / r_in) == pytest.approx(3.0, abs=1e-9)
        assert np.array_equal(out.samples[:s0], buf.samples[:s0])
        assert np.array_equal(out.samples[s1:], buf.samples[s1:])

    def test_clip_count_matches_exceedances(self):
        buf = sine(220.0, 1.0, amplitude=0.9)
        out, clipped = apply_gain(buf, (0.0, 1.0), 3.0)
        expected = int(np.count_nonzero(
            np.abs(buf.samples * 10.0 ** (3.0 / 20.0)) > 1.0))
        assert clipped == expected > 0
        assert float(np.max(np.abs(out.samples))) == 1.0

    def test_zero_gain_is_identity(self):
        buf = sine(220.0, 0.5)
        out, clipped = apply_gain(buf, (0.1, 0.4), 0.0)
        assert clipped == 0
        assert np.array_equal(out.samples, buf.samples)

    def test_rejects_non_finite_gain(self):
        with pytest.raises(ValidationError, match="finite"):
            apply_gain(sine(220.0, 0.5), (0.1, 0.4), float("inf"))


class TestManipulationParams:
    def test_defaults(self):
        p = ManipulationParams()
        assert p.gain_db == 3.0
        assert p.stretch_factor == 1.5
        assert p.pitch_target is None

    def test_validation(self):
        with pytest.raises(ValidationError, match="finite"):
            ManipulationParams(gain_db=float("nan"))
        with pytest.raises(ValidationError, match=">= 1"):
            ManipulationParams(stretch_factor=0.9)
        with pytest.raises(ValidationError, match="positive"):
            ManipulationParams(pitch_target=0.0)


def three_word_take():
    """we boil | when: statement words [0,0.3] and [0.35,0.65], question [1.05,1.55]."""
    x = np.zeros(int(1.8 * SR))
    t = np.arange(x.shape[0]) / SR
    for a, b, f in [(0.0, 0.3, 220.0), (0.35, 0.65, 220.0), (1.05, 1.55, 300.0)]:
        i0, i1 = int(a * SR), int(b * SR)
        x[i0:i1] = 0.25 * np.sin(2 * np.pi * f * t[i0:i1])
    al = Alignment(
        words=(WordSpan("we", 0.0, 0.3), WordSpan("boil", 0.35, 0.65),
               WordSpan("when", 1.05, 1.55)),
        statement_end=0.65, question_start=1.05, question_end=1.55,
    )
    return AudioBuffer(x, SR), al


class TestManipulateFinalSyllable:
    def test_composed_edit(self):
        buf, al = three_word_take()
        res = manipulate_final_syllable(buf, al)
        # 0.3 s word stretched 1.5x: span grows to 0.45 s, delta 0.15 s
        assert res.span == (0.35, 0.8)
        assert res.audio.duration == pytest.approx(1.95)
        assert res.clip_count == 0
        assert res.pitch_target == pytest.approx(220.0, abs=1.0)

    def test_alignment_shifts(self):
        buf, al = three_word_take()
        res = manipulate_final_syllable(buf, al)
        out = res.alignment
        assert out.words[0] == al.words[0]
        assert out.words[1].onset == 0.35
        assert out.words[1].offset == pytest.approx(0.8)
        assert out.words[2].onset == pytest.approx(1.2)
        assert out.statement_end == pytest.approx(0.8)
        assert out.question_start == pytest.approx(1.2)
        assert out.question_end == pytest.approx(1.7)

    def test_span_lands_on_requested_pitch(self):
        buf, al = three_word_take()
        res = manipulate_final_syllable(
            buf, al, ManipulationParams(pitch_target=250.0))
        assert res.pitch_target == 250.0
        span = AudioBuffer(
            res.audio.samples[int(0.4 * SR):int(0.75 * SR)], SR)
        c = estimate_f0(span)
        assert np.max(np.abs(cents(c.voiced_f0, 250.0))) < 20.0

    def test_audio_before_span_untouched(self):
        buf, al = three_word_take()
        res = manipulate_final_syllable(buf, al)
        n = int(0.35 * SR)
        assert np.array_equal(res.audio.samples[:n], buf.samples[:n])

    def test_louder_by_gain(self):
        buf, al = three_word_take()
        res = manipulate_final_syllable(buf, al, ManipulationParams(
            gain_db=6.0, stretch_factor=1.5, pitch_target=220.0))
        s0, s1 = int(0.4 * SR), int(0.75 * SR)
        r_out = np.sqrt(np.mean(res.audio.samples[s0:s1] ** 2))
        r_ref = 0.25 / np.sqrt(2.0)
        db = 20.0 * np.log10(r_out / r_ref)
        assert abs(db - 6.0) < 0.5

    def test_unvoiced_word_skips_flatten(self):
        buf, al = three_word_take()
        x = np.array(buf.samples)
        x[int(0.35 * SR):int(0.65 * SR)] = 0.0
        with pytest.warns(UserWarning, match="flatten skipped"):
            res = manipulate_final_syllable(AudioBuffer(x, SR), al)
        assert res.pitch_target is None
        assert res.span == (0.35, 0.8)

    def test_requires_statement_words(self):
        buf, _ = three_word_take()
        al = Alignment(words=(WordSpan("when", 1.0, 1.5),),
                       statement_end=0.5, question_start=1.0, question_end=1.5)
        with pytest.raises(ValidationError, match="no statement words"):
            manipulate_final_syllable(buf, al)
