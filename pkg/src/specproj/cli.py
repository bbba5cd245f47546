"""Command-line interface: ``specproj {mix,enhance,stft,metrics}``."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import consistency as C
from .core import InvalidArgument, SourceSet, StftConfig, Waveform, validate_config
from .fileio import atomic_write, cspec_bytes, parse_cspec, read_wav, wav_bytes, write_magnitude_csv
from .masking import MaskSpec, oracle_sources
from .metrics import MetricsReport, mag_sq_error, si_sdr, si_sdr_improvement, spectral_loss
from .mixer import MixSpec, mix, noise_gain, sample_mix_spec, synth_test_signals
from .stft import stft_forward, stft_inverse

CONSISTENCY_MODES = ("none", "stft", "mix", "both")


class CommandError(Exception):
    pass


class Outputs:
    """Collects files written by a command so they can be removed if it fails."""

    def __init__(self):
        self.paths: list[Path] = []

    def write(self, path, payload: bytes) -> None:
        path = Path(path)
        atomic_write(path, payload)
        self.paths.append(path)

    def rollback(self) -> None:
        for p in self.paths:
            try:
                p.unlink()
            except FileNotFoundError:
                pass


# -- helpers -----------------------------------------------------------------


def _config(args, sample_rate: int | None = None) -> StftConfig:
    cfg = StftConfig(args.window_length, args.hop, args.fft_length, args.sample_rate)
    validate_config(cfg)
    if sample_rate is not None and sample_rate != cfg.sample_rate:
        raise CommandError(f"input sample rate {sample_rate} Hz does not match --sample-rate {cfg.sample_rate}")
    return cfg


def _load_wav(path) -> Waveform:
    try:
        return read_wav(path)
    except FileNotFoundError:
        raise CommandError(f"no such file: {path}") from None
    except (ValueError, OSError) as exc:
        raise CommandError(f"cannot read WAV {path}: {exc}") from None


def _same_length(**waves: Waveform) -> None:
    lengths = {name: len(w) for name, w in waves.items()}
    if len(set(lengths.values())) > 1:
        raise CommandError(f"length mismatch: {lengths}")
    rates = {w.sample_rate for w in waves.values()}
    if len(rates) > 1:
        raise CommandError(f"sample rate mismatch: {sorted(rates)}")


def _quantize_pair(s: np.ndarray, n: np.ndarray, pcm16: bool) -> tuple[np.ndarray, np.ndarray]:
    """Round both references to a grid on which their sum is exact in float32.

    For float32 output the grid step is ``2**(e - 24)`` with ``2**e`` bounding
    every sample of either reference and of their sum, so all three values fit a
    24-bit mantissa.  PCM16 output uses the 1/32768 grid directly.
    """
    if pcm16:
        q = 2.0**-15
    else:
        bound = float(np.max(np.abs(s), initial=0.0) + np.max(np.abs(n), initial=0.0))
        e = math.ceil(math.log2(bound)) + 1 if bound > 0 else 0
        q = 2.0 ** (e - 24)
    sq, nq = np.round(s / q) * q, np.round(n / q) * q
    if pcm16 and np.max(np.abs(sq + nq), initial=0.0) >= 1.0:
        raise CommandError("mixture exceeds PCM16 full scale; write float32 instead")
    return sq, nq


def _dump(obj) -> str:
    return MetricsReport(obj).to_json()


# -- commands -----------------------------------------------------------------


def cmd_mix(args, out: Outputs) -> None:
    if (args.speech is None) != (args.noise is None):
        raise CommandError("--speech and --noise must be given together")
    if args.speech is None:
        speech, noise = synth_test_signals(args.synth_seed, args.duration, args.sample_rate)
    else:
        speech, noise = _load_wav(args.speech), _load_wav(args.noise)
        _same_length(speech=speech, noise=noise)

    spec = MixSpec(snr_db=args.snr) if args.snr is not None else sample_mix_spec(args.seed)
    try:
        g = noise_gain(speech, noise, spec.snr_db)
        _, s_ref, n_ref = mix(speech, noise, spec)
    except InvalidArgument as exc:
        raise CommandError(str(exc)) from None

    s, n = _quantize_pair(s_ref.samples, n_ref.samples, args.pcm16)
    sr = speech.sample_rate
    refs = Path(args.out_refs)
    refs.mkdir(parents=True, exist_ok=True)
    out.write(args.out_mix, wav_bytes(Waveform(s + n, sr), args.pcm16))
    out.write(refs / "speech.wav", wav_bytes(Waveform(s, sr), args.pcm16))
    out.write(refs / "noise.wav", wav_bytes(Waveform(n, sr), args.pcm16))

    sys.stdout.write(
        _dump(
            {
                "seed": spec.seed,
                "snr_db": spec.snr_db,
                "gain_db": spec.gain_db,
                "noise_gain": g,
                "mixture_gain": 10.0 ** (spec.gain_db / 20.0),
            }
        )
    )


def _weighting(value: str) -> str:
    if value in ("uniform", "magsq") or (value.startswith("file:") and len(value) > 5):
        return value
    raise argparse.ArgumentTypeError(f"expected uniform, magsq or file:PATH, got {value!r}")


def _load_weights(value: str, sources: SourceSet) -> C.WeightField | None:
    if value == "uniform":
        return None
    if value == "magsq":
        return C.magnitude_squared_weights(sources)
    path = value[len("file:") :]
    try:
        w = parse_cspec(Path(path).read_bytes())
    except FileNotFoundError:
        raise CommandError(f"no such weight file: {path}") from None
    if w.shape != sources.mixture.shape:
        raise CommandError(f"weight file shape {w.shape} != spectrogram shape {sources.mixture.shape}")
    try:
        return C.learned_weights(w.data.real)
    except InvalidArgument as exc:
        raise CommandError(f"{path}: {exc}") from None


def enhance(
    mixture: Waveform,
    speech: Waveform,
    noise: Waveform,
    config: StftConfig,
    consistency: str = "both",
    weighting: str = "uniform",
    mask_spec: MaskSpec | None = None,
) -> dict:
    """Oracle-mask enhancement pipeline; returns spectrograms, waveforms and a report."""
    S = stft_forward(speech, config)
    V = stft_forward(noise, config)
    Y = stft_forward(mixture, config)
    masked = oracle_sources(S, V, mask_spec, mixture=Y)

    result = masked
    if consistency in ("mix", "both"):
        weights = _load_weights(weighting, masked)
        if weights is None:
            result = C.project_mixture_consistency(result)
        else:
            result = C.project_mixture_weighted(result, weights)
    if consistency in ("stft", "both"):
        result = C.project_sources_stft(result)

    est_speech, est_noise = (stft_inverse(x) for x in result.sources)
    consistent = [stft_forward(est_speech, config), stft_forward(est_noise, config)]
    mask_sum = masked.sources[0].data + masked.sources[1].data
    with np.errstate(invalid="ignore", divide="ignore"):
        mask_dev = np.abs(mask_sum - Y.data) / np.abs(Y.data)
    mask_dev = float(np.max(mask_dev[np.abs(Y.data) > 0], initial=0.0))

    report = MetricsReport()
    report["si_sdr_db"] = si_sdr(speech, est_speech)
    report["si_sdr_improvement_db"] = si_sdr_improvement(speech, est_speech, mixture)
    report["loss"] = spectral_loss([S, V], consistent)
    report["mag_sq_error_masked"] = mag_sq_error(masked.sources[0], S)
    report["mag_sq_error_consistent"] = mag_sq_error(consistent[0], S)
    if np.any(noise.samples):
        report["noise_si_sdr_db"] = si_sdr(noise, est_noise)
    report["noise_mag_sq_error_masked"] = mag_sq_error(masked.sources[1], V)
    report["noise_mag_sq_error_consistent"] = mag_sq_error(consistent[1], V)
    report["mask_sum_max_deviation"] = mask_dev
    return {
        "report": report,
        "masked": masked,
        "projected": result,
        "consistent": consistent,
        "speech": est_speech,
        "noise": est_noise,
        "truth": (S, V, Y),
    }


def cmd_enhance(args, out: Outputs) -> None:
    mixture = _load_wav(args.mix)
    speech = _load_wav(args.speech_ref)
    noise = _load_wav(args.noise_ref)
    _same_length(mix=mixture, speech_ref=speech, noise_ref=noise)
    config = _config(args, mixture.sample_rate)
    spec = MaskSpec(truncation=args.psm_truncate)
    res = enhance(mixture, speech, noise, config, args.consistency, args.mix_weighting, spec)

    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    out.write(d / "enhanced_speech.wav", wav_bytes(res["speech"]))
    out.write(d / "enhanced_noise.wav", wav_bytes(res["noise"]))
    for name, X in zip(("speech", "noise"), res["masked"].sources):
        out.write(d / f"masked_{name}.cspec", cspec_bytes(X))
    for name, X in zip(("speech", "noise"), res["projected"].sources):
        out.write(d / f"projected_{name}.cspec", cspec_bytes(X))
    out.write(d / "report.json", res["report"].to_json().encode())

    if args.export_csv:
        S, V, Y = res["truth"]
        masked = res["masked"].sources[0]
        consistent = res["consistent"][0]
        panels = {
            "clean": S,
            "mixture": Y,
            "masked": masked,
            "consistent": consistent,
            "masked_minus_consistent_sq": masked.like(np.abs(masked.data - consistent.data) ** 2),
        }
        for name, X in panels.items():
            path = d / f"{name}_magnitude.csv"
            write_magnitude_csv(path, X)
            out.paths.append(path)
    sys.stdout.write(res["report"].to_json())


def cmd_stft(args, out: Outputs) -> None:
    if args.inverse:
        try:
            X = parse_cspec(Path(args.input).read_bytes())
        except FileNotFoundError:
            raise CommandError(f"no such file: {args.input}") from None
        out.write(args.output, wav_bytes(stft_inverse(X), args.pcm16))
        return
    x = _load_wav(args.input)
    config = _config(args, x.sample_rate)
    out.write(args.output, cspec_bytes(stft_forward(x, config)))


def cmd_metrics(args, out: Outputs) -> None:
    ref, est, mixture = _load_wav(args.ref), _load_wav(args.est), _load_wav(args.mix)
    _same_length(ref=ref, est=est, mix=mixture)
    report = MetricsReport()
    report["si_sdr_db"] = si_sdr(ref, est)
    report["si_sdr_improvement_db"] = si_sdr_improvement(ref, est, mixture)
    sys.stdout.write(report.to_json())


# -- parser ---------------------------------------------------------------------


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("STFT geometry")
    g.add_argument("--window-length", type=int, default=800)
    g.add_argument("--hop", type=int, default=160)
    g.add_argument("--fft-length", type=int, default=1024)
    g.add_argument("--sample-rate", type=int, default=16000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specproj", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mix", help="mix speech and noise at a given or sampled SNR")
    p.add_argument("--speech", help="speech WAV (synthesized if omitted)")
    p.add_argument("--noise", help="noise WAV (synthesized if omitted)")
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument("--snr", type=float, help="SNR in dB (no extra gain)")
    how.add_argument("--seed", type=int, help="sample SNR and gain from this seed")
    p.add_argument("--synth-seed", type=int, default=0, help="seed for synthesized inputs")
    p.add_argument("--duration", type=float, default=3.0, help="seconds, for synthesized inputs")
    p.add_argument("--sample-rate", type=int, default=16000)
    p.add_argument("--pcm16", action="store_true", help="write PCM16 instead of float32")
    p.add_argument("--out-mix", required=True)
    p.add_argument("--out-refs", required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("enhance", help="oracle-mask enhancement with consistency projections")
    p.add_argument("--mix", required=True)
    p.add_argument("--speech-ref", required=True)
    p.add_argument("--noise-ref", required=True)
    p.add_argument("--mask", choices=("psm",), default="psm")
    p.add_argument("--psm-truncate", type=float, default=None, metavar="BOUND",
                   help="clip oracle masks to [0, BOUND]")
    p.add_argument("--consistency", choices=CONSISTENCY_MODES, default="both")
    p.add_argument("--mix-weighting", type=_weighting, default="uniform",
                   help="uniform, magsq, or file:PATH (CSPEC whose real part is the speech share)")
    p.add_argument("--export-csv", action="store_true", help="also write magnitude CSVs for plotting")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("stft", help="WAV -> CSPEC, or CSPEC -> WAV with --inverse")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--inverse", action="store_true")
    p.add_argument("--pcm16", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_stft)

    p = sub.add_parser("metrics", help="SI-SDR and its improvement over the mixture")
    p.add_argument("--ref", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--mix", required=True)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Outputs()
    try:
        args.func(args, out)
    except (CommandError, InvalidArgument, OSError) as exc:
        out.rollback()
        print(f"specproj {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except BaseException:
        out.rollback()
        raise
    return 0


if __name__ == "__main__":
    sys.exit(main())
