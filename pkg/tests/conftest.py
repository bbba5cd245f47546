import numpy as np
import pytest

from specproj.core import ComplexSpectrogram, StftConfig, Waveform
from specproj.stft import stft_forward

SMALL = StftConfig(window_length=8, hop=2, fft_length=16, sample_rate=100)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def config():
    return StftConfig()


def random_waveform(rng, n, sample_rate=16000):
    return Waveform(rng.standard_normal(n), sample_rate)


def random_spectrogram(rng, like: ComplexSpectrogram):
    shape = like.shape
    return like.like(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def consistent_spectrogram(rng, n, config):
    return stft_forward(random_waveform(rng, n, config.sample_rate), config)


ACCEPTANCE_LINES: list[str] = []


def record(name: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
