"""Deterministic synthetic mixtures.

All randomness comes from :class:`SplitMix64`, a counter-based generator whose
constants are fixed here, so a seed reproduces the same draws everywhere:

* state advances by ``GAMMA = 0x9E3779B97F4A7C15`` per draw (mod 2**64)
* output mixing: ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
  z *= 0x94D049BB133111EB; z ^= z >> 31``
* uniforms are ``(z >> 11) * 2**-53`` in [0, 1)
* normals use Box-Muller on consecutive uniform pairs ``(u1, u2)``:
  ``r = sqrt(-2 ln(1 - u1))``, giving ``r cos(2 pi u2)`` then ``r sin(2 pi u2)``
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .core import InvalidArgument, Waveform

GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1

SNR_MEAN_DB = 5.0
SNR_STD_DB = 10.0
GAIN_MEAN_DB = -10.0
GAIN_STD_DB = 5.0
PEAK = 0.5
BREATH_FLOOR = 1e-3  # -60 dB re. peak


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self, n: int) -> np.ndarray:
        k = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + k * np.uint64(GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * GAMMA) & MASK64
        return z

    def uniform(self, n: int) -> np.ndarray:
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        theta = 2.0 * np.pi * u[:, 1]
        return np.column_stack([r * np.cos(theta), r * np.sin(theta)]).ravel()[:n]


@dataclass(frozen=True)
class MixSpec:
    snr_db: float
    gain_db: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.snr_db) and math.isfinite(self.gain_db)):
            raise InvalidArgument("snr_db and gain_db must be finite")
        if not 0 <= self.seed <= MASK64:
            raise InvalidArgument("seed must be an unsigned 64-bit integer")


def sample_mix_spec(rng_seed: int) -> MixSpec:
    """SNR ~ N(5, 10) dB and mixture gain ~ N(-10, 5) dB from one Box-Muller pair."""
    seed = int(rng_seed) & MASK64
    n_snr, n_gain = SplitMix64(seed).normal(2)
    return MixSpec(
        snr_db=float(SNR_MEAN_DB + SNR_STD_DB * n_snr),
        gain_db=float(GAIN_MEAN_DB + GAIN_STD_DB * n_gain),
        seed=seed,
    )


def rms(x) -> float:
    s = x.samples if isinstance(x, Waveform) else np.asarray(x, dtype=np.float64)
    return float(np.sqrt(np.mean(s**2))) if s.size else 0.0


def noise_gain(speech: Waveform, noise: Waveform, snr_db: float) -> float:
    rs, rn = rms(speech), rms(noise)
    if rs == 0.0 or rn == 0.0:
        raise InvalidArgument("speech and noise must both have nonzero RMS")
    return (rs / rn) * 10.0 ** (-snr_db / 20.0)


def mix_at_snr(speech: Waveform, noise: Waveform, snr_db: float) -> tuple[Waveform, Waveform]:
    """Return ``(mixture, scaled_noise)`` with ``mixture == speech + scaled_noise``."""
    if len(speech) != len(noise):
        raise InvalidArgument(f"length mismatch: speech {len(speech)} vs noise {len(noise)}")
    if speech.sample_rate != noise.sample_rate:
        raise InvalidArgument("speech and noise sample rates differ")
    g = noise_gain(speech, noise, snr_db)
    scaled = noise.samples * g
    return Waveform(speech.samples + scaled, speech.sample_rate), Waveform(scaled, noise.sample_rate)


def mix(speech: Waveform, noise: Waveform, spec: MixSpec) -> tuple[Waveform, Waveform, Waveform]:
    """Mix at ``spec.snr_db`` and apply ``spec.gain_db`` to mixture and both references.

    Returns ``(mixture, speech_ref, noise_ref)``; the references add up to the
    mixture exactly.
    """
    g = noise_gain(speech, noise, spec.snr_db)
    a = 10.0 ** (spec.gain_db / 20.0)
    s = speech.samples * a
    n = noise.samples * (g * a)
    sr = speech.sample_rate
    return Waveform(s + n, sr), Waveform(s, sr), Waveform(n, sr)


def _peak_normalize(x: np.ndarray, peak: float = PEAK) -> np.ndarray:
    i = int(np.argmax(np.abs(x)))
    out = x * (peak / abs(x[i]))
    out[i] = math.copysign(peak, x[i])
    return out


def synth_test_signals(seed: int, duration_s: float, sample_rate: int = 16000) -> tuple[Waveform, Waveform]:
    """A speech-like harmonic tone stack and a noise-like burst signal.

    Speech-like: f0 in [100, 220) Hz with 0.5 % vibrato at 4-6 Hz, harmonics
    up to 4 kHz (or 0.45 fs) with 1/k amplitudes and random phases, a slow
    syllabic amplitude modulation, and a white breath-noise floor 60 dB below
    the tonal peak so no time-frequency bin is digitally silent.  Noise-like:
    white Gaussian noise through a random two-pole resonator, gated by piecewise-constant burst levels with
    20 ms smoothing.  Both are peak-normalized to 0.5.
    """
    if not duration_s > 0:
        raise InvalidArgument("duration must be positive")
    n = int(round(duration_s * sample_rate))
    if n < 1:
        raise InvalidArgument("duration shorter than one sample")
    rng = SplitMix64(seed)
    t = np.arange(n) / sample_rate

    f0, vib_rate, syl_rate, syl_phase, res_freq, res_r = rng.uniform(6)
    f0 = 100.0 + 120.0 * f0
    vib_rate = 4.0 + 2.0 * vib_rate
    depth = 0.005
    base_phase = 2.0 * np.pi * (f0 * t - f0 * depth / (2.0 * np.pi * vib_rate) * np.cos(2.0 * np.pi * vib_rate * t))
    n_harm = max(1, int(min(4000.0, 0.45 * sample_rate) // f0))
    phases = 2.0 * np.pi * rng.uniform(n_harm)
    speech = np.zeros(n)
    for k in range(1, n_harm + 1):
        speech += np.sin(k * base_phase + phases[k - 1]) / k
    envelope = 0.6 + 0.4 * np.sin(2.0 * np.pi * (2.0 + 3.0 * syl_rate) * t + 2.0 * np.pi * syl_phase)
    speech *= envelope
    breath = rng.normal(n)
    speech += breath * (BREATH_FLOOR * np.max(np.abs(speech)) / np.max(np.abs(breath)))

    white = rng.normal(n)
    centre = 200.0 + 0.35 * sample_rate * res_freq
    radius = 0.85 + 0.13 * res_r
    a = [1.0, -2.0 * radius * np.cos(2.0 * np.pi * centre / sample_rate), radius**2]
    colored = lfilter([1.0 - radius], a, white)
    seg = max(1, int(0.15 * sample_rate))
    n_seg = -(-n // seg)
    levels = 0.15 + 0.85 * rng.uniform(n_seg)
    gate = np.repeat(levels, seg)[:n]
    smooth = max(1, int(0.02 * sample_rate))
    gate = np.convolve(gate, np.ones(smooth) / smooth, mode="same")
    noise = colored * gate

    return (
        Waveform(_peak_normalize(speech), sample_rate),
        Waveform(_peak_normalize(noise), sample_rate),
    )
