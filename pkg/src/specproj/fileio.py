"""WAV and CSPEC file formats, with atomic writes.

CSPEC layout::

    b"CSPEC1\\n"
    one line of JSON: {"frames", "bins", "sample_rate", "window_length",
                       "hop", "fft_length", "original_length"} + b"\\n"
    frames * bins * 2 little-endian float32, interleaved re/im, frame-major
"""

from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .core import ComplexSpectrogram, ConfigError, InvalidArgument, StftConfig, Waveform, validate_config

MAGIC = b"CSPEC1\n"
HEADER_KEYS = ("frames", "bins", "sample_rate", "window_length", "hop", "fft_length", "original_length")


class CspecFormatError(InvalidArgument):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def atomic_write(path, payload: bytes) -> None:
    """Write ``payload`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- WAV -----------------------------------------------------------------------


def read_wav(path) -> Waveform:
    """Read a mono PCM16 or float32 WAV; PCM16 is scaled by 1/32768."""
    rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise InvalidArgument(f"{path}: only mono WAV is supported, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise InvalidArgument(f"{path}: unsupported sample format {data.dtype}; use PCM16 or float32")
    return Waveform(samples, rate)


def wav_bytes(x: Waveform, pcm16: bool = False) -> bytes:
    if pcm16:
        data = np.clip(np.round(x.samples * 32768.0), -32768, 32767).astype(np.int16)
    else:
        data = x.samples.astype(np.float32)
    buf = io.BytesIO()
    wavfile.write(buf, x.sample_rate, data)
    return buf.getvalue()


def write_wav(path, x: Waveform, pcm16: bool = False) -> None:
    atomic_write(path, wav_bytes(x, pcm16))


# -- CSPEC ---------------------------------------------------------------------


def cspec_bytes(X: ComplexSpectrogram) -> bytes:
    cfg = X.config
    header = {
        "frames": X.n_frames,
        "bins": X.data.shape[1],
        "sample_rate": cfg.sample_rate,
        "window_length": cfg.window_length,
        "hop": cfg.hop,
        "fft_length": cfg.fft_length,
        "original_length": X.original_length,
    }
    payload = np.empty(X.data.shape + (2,), dtype="<f4")
    payload[..., 0] = X.data.real
    payload[..., 1] = X.data.imag
    return MAGIC + json.dumps(header, separators=(",", ":")).encode() + b"\n" + payload.tobytes()


def write_cspec(path, X: ComplexSpectrogram) -> None:
    atomic_write(path, cspec_bytes(X))


def parse_cspec(raw: bytes) -> ComplexSpectrogram:
    if not raw.startswith(MAGIC):
        raise CspecFormatError("missing CSPEC1 magic", 0)
    start = len(MAGIC)
    end = raw.find(b"\n", start)
    if end < 0:
        raise CspecFormatError("unterminated JSON header line", start)
    try:
        header = json.loads(raw[start:end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CspecFormatError(f"malformed JSON header: {exc}", start) from None
    if not isinstance(header, dict):
        raise CspecFormatError("header is not a JSON object", start)
    missing = [k for k in HEADER_KEYS if k not in header]
    if missing:
        raise CspecFormatError(f"header lacks keys {missing}", start)
    bad = [k for k in HEADER_KEYS if not isinstance(header[k], int) or header[k] < 0]
    if bad:
        raise CspecFormatError(f"header values must be nonnegative integers: {bad}", start)
    config = StftConfig(header["window_length"], header["hop"], header["fft_length"], header["sample_rate"])
    try:
        validate_config(config)
    except ConfigError as exc:
        raise CspecFormatError(f"invalid STFT geometry in header: {exc}", start) from None
    if header["bins"] != config.n_bins:
        raise CspecFormatError(f"bins={header['bins']} but fft_length implies {config.n_bins}", start)
    offset = end + 1
    expected = header["frames"] * header["bins"] * 8
    actual = len(raw) - offset
    if actual != expected:
        raise CspecFormatError(f"payload is {actual} bytes, expected {expected}", offset)
    values = np.frombuffer(raw, dtype="<f4", offset=offset).astype(np.float64)
    values = values.reshape(header["frames"], header["bins"], 2)
    data = values[..., 0] + 1j * values[..., 1]
    try:
        return ComplexSpectrogram(data, config, header["original_length"])
    except InvalidArgument as exc:
        raise CspecFormatError(str(exc), offset) from None


def read_cspec(path) -> ComplexSpectrogram:
    return parse_cspec(Path(path).read_bytes())


def write_magnitude_csv(path, X: ComplexSpectrogram) -> None:
    """Frame-per-row CSV of bin magnitudes, for plotting elsewhere."""
    buf = io.StringIO()
    np.savetxt(buf, np.abs(X.data), delimiter=",", fmt="%.9g")
    atomic_write(path, buf.getvalue().encode())
