"""Mask application and oracle (reference-derived) masks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ComplexSpectrogram,
    InvalidArgument,
    Mask,
    SourceSet,
    check_same_geometry,
)

PSM_EPS = 1e-8

# Output ranges of the usual network mask heads; informational only, never
# enforced on externally supplied masks.
REAL_MASK_RANGE = (0.0, 1.0)  # sigmoid
COMPLEX_MASK_RANGE = (-1.0, 1.0)  # tanh, per component


@dataclass(frozen=True)
class MaskSpec:
    """How masks are produced and applied.

    Parameters
    ----------
    kind : {"real", "complex"}
    clamp : (lo, hi) or None
        Interval real masks are clipped to in :func:`apply_mask`.
    truncation : float or None
        Upper bound for oracle masks; when set, oracle masks are clipped to
        ``[0, truncation]``.
    """

    kind: str = "real"
    clamp: tuple[float, float] | None = None
    truncation: float | None = None

    def __post_init__(self):
        if self.kind not in ("real", "complex"):
            raise InvalidArgument(f"mask kind must be 'real' or 'complex', got {self.kind!r}")
        if self.clamp is not None:
            lo, hi = self.clamp
            if not lo <= hi:
                raise InvalidArgument(f"empty clamp interval {self.clamp}")
        if self.truncation is not None and not self.truncation > 0:
            raise InvalidArgument("truncation bound must be positive")

    @property
    def nominal_range(self) -> tuple[float, float]:
        return REAL_MASK_RANGE if self.kind == "real" else COMPLEX_MASK_RANGE


def apply_mask(M: Mask, Y: ComplexSpectrogram, spec: MaskSpec | None = None) -> ComplexSpectrogram:
    if M.shape != Y.shape:
        raise InvalidArgument(f"mask shape {M.shape} does not match spectrogram {Y.shape}")
    m = M.data
    if spec is not None and spec.clamp is not None and not M.is_complex:
        m = np.clip(m, *spec.clamp)
    return Y.like(m * Y.data)


def oracle_psm(
    S: ComplexSpectrogram,
    Y: ComplexSpectrogram,
    eps: float = PSM_EPS,
    spec: MaskSpec | None = None,
) -> Mask:
    """Phase-sensitive mask ``|S| / max(|Y|, eps) * cos(angle(S) - angle(Y))``."""
    check_same_geometry(S, Y)
    if not eps > 0:
        raise InvalidArgument("eps must be positive")
    ratio = np.abs(S.data) / np.maximum(np.abs(Y.data), eps)
    m = ratio * np.cos(np.angle(S.data) - np.angle(Y.data))
    if spec is not None and spec.truncation is not None:
        m = np.clip(m, 0.0, spec.truncation)
    return Mask(m)


def oracle_sources(
    S: ComplexSpectrogram,
    V: ComplexSpectrogram,
    spec: MaskSpec | None = None,
    mixture: ComplexSpectrogram | None = None,
) -> SourceSet:
    """Mask the mixture with oracle PSMs for speech and noise.

    ``mixture`` defaults to ``S + V``; pass the STFT of the recorded mixture when
    it is available so the estimates are built from it.
    """
    check_same_geometry(S, V)
    Y = S + V if mixture is None else mixture
    check_same_geometry(S, Y)
    speech = apply_mask(oracle_psm(S, Y, spec=spec), Y, spec)
    noise = apply_mask(oracle_psm(V, Y, spec=spec), Y, spec)
    return SourceSet((speech, noise), Y)
