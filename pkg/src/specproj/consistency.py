"""STFT-consistency and mixture-consistency projection layers and their VJPs.

Gradients follow the convention that a complex array ``g`` holds
``dL/dRe + 1j * dL/dIm``, i.e. complex numbers are pairs of real coordinates and
the pairing is ``<a, b> = Re(sum(a * conj(b)))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ComplexSpectrogram, InvalidArgument, SourceSet
from .stft import _analysis, _synthesis, output_length, parseval_weights

WEIGHT_SUM_TOL = 1e-12
NORMALIZED_TOL = 1e-9


@dataclass(frozen=True)
class WeightField:
    """Per-source, per-bin weights of shape (J, T, F).

    With ``normalized=False`` these are variances ``v`` and the correction share
    of source j is ``v_j / sum(v)``.  With ``normalized=True`` they are the
    shares themselves (e.g. a network's sigmoid output and its complement).
    """

    weights: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True)
        if w.ndim != 3:
            raise InvalidArgument(f"weights must have shape (J, T, F), got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise InvalidArgument("weights contain NaN or Inf")
        if np.any(w < 0):
            raise InvalidArgument("weights must be nonnegative")
        if self.normalized and np.max(np.abs(w.sum(axis=0) - 1.0)) > NORMALIZED_TOL:
            raise InvalidArgument("normalized weights must sum to 1 over sources in every bin")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def shares(self) -> np.ndarray:
        """Fraction of the mixture residual assigned to each source, per bin.

        Bins whose variances sum to (nearly) zero fall back to an equal split.
        """
        if self.normalized:
            return self.weights
        total = self.weights.sum(axis=0)
        degenerate = total <= WEIGHT_SUM_TOL
        safe = np.where(degenerate, 1.0, total)
        shares = self.weights / safe
        return np.where(degenerate, 1.0 / self.weights.shape[0], shares)


def magnitude_squared_weights(sources: SourceSet) -> WeightField:
    return WeightField(np.abs(sources.stack()) ** 2, normalized=False)


def learned_weights(speech_weight: np.ndarray) -> WeightField:
    """Two-source shares from a per-bin speech weight in [0, 1] (noise gets ``1 - w``)."""
    w = np.asarray(speech_weight, dtype=np.float64)
    if np.any(w < 0) or np.any(w > 1):
        raise InvalidArgument("speech weights must lie in [0, 1]")
    return WeightField(np.stack([w, 1.0 - w]), normalized=True)


# -- array kernels ---------------------------------------------------------


def mixture_projection(X: np.ndarray, Y: np.ndarray, shares: np.ndarray | None = None) -> np.ndarray:
    """Project (J, ...) estimates onto ``sum_j X_j == Y``; ``shares`` defaults to 1/J."""
    residual = Y - X.sum(axis=0)
    if shares is None:
        return X + residual / X.shape[0]
    return X + shares * residual


def _stft_projection(data: np.ndarray, spec: ComplexSpectrogram) -> np.ndarray:
    length = output_length(spec)
    return _analysis(_synthesis(data, spec.config, length), spec.config)


# -- layers ------------------------------------------------------------------


def project_stft_consistency(X: ComplexSpectrogram) -> ComplexSpectrogram:
    """Nearest consistent STFT: forward transform of the inverse transform of X."""
    projected = _stft_projection(X.data, X)
    if projected.shape != X.shape:
        raise InvalidArgument(
            f"{X.n_frames} frames do not match original_length={X.original_length}"
        )
    return X.like(projected)


def _check_weights(sources: SourceSet, weights: WeightField) -> None:
    expected = (sources.n_sources, *sources.mixture.shape)
    if weights.weights.shape != expected:
        raise InvalidArgument(f"weights shape {weights.weights.shape} != {expected}")


def project_mixture_consistency(sources: SourceSet) -> SourceSet:
    return sources.with_sources(mixture_projection(sources.stack(), sources.mixture.data))


def project_mixture_weighted(sources: SourceSet, weights: WeightField) -> SourceSet:
    _check_weights(sources, weights)
    projected = mixture_projection(sources.stack(), sources.mixture.data, weights.shares())
    return sources.with_sources(projected)


def project_sources_stft(sources: SourceSet) -> SourceSet:
    """Apply STFT consistency to every source (the mixture is left alone)."""
    projected = _stft_projection(sources.stack(), sources.mixture)
    return sources.with_sources(projected)


def project_joint(
    sources: SourceSet,
    weights: WeightField | None = None,
    order: str = "mixture_first",
) -> SourceSet:
    """Mixture consistency (weighted if ``weights`` is given) and STFT consistency.

    The canonical order applies the mixture projection first.  For uniform
    weights and a consistent mixture both orders agree; per-bin weights break
    that.
    """

    def mix(s):
        return project_mixture_consistency(s) if weights is None else project_mixture_weighted(s, weights)

    if order == "mixture_first":
        return project_sources_stft(mix(sources))
    if order == "stft_first":
        return mix(project_sources_stft(sources))
    raise InvalidArgument(f"order must be 'mixture_first' or 'stft_first', got {order!r}")


# -- vector-Jacobian products -------------------------------------------------


def vjp_mixture_consistency(upstream: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Adjoint of the uniform mixture projection.

    Returns ``(grad wrt estimates (J, T, F), grad wrt mixture (T, F))``.
    """
    g = np.asarray(upstream)
    if g.ndim < 2 or g.shape[0] < 2:
        raise InvalidArgument(f"upstream must have shape (J>=2, ...), got {g.shape}")
    mean = g.mean(axis=0)
    return g - mean, mean


def vjp_mixture_weighted(upstream: np.ndarray, weights: WeightField) -> tuple[np.ndarray, np.ndarray]:
    """Adjoint of the weighted mixture projection with the weights held fixed."""
    g = np.asarray(upstream)
    shares = weights.shares()
    if shares.shape != g.shape:
        raise InvalidArgument(f"weights shape {shares.shape} != upstream shape {g.shape}")
    through_residual = (shares * g).sum(axis=0)
    return g - through_residual, through_residual


def vjp_stft_consistency(upstream: ComplexSpectrogram, metric: str = "euclidean") -> ComplexSpectrogram:
    """Adjoint of :func:`project_stft_consistency` applied to ``upstream``.

    ``metric="euclidean"`` is the transpose with respect to the plain real
    inner product on the stored one-sided coordinates; this is what chains with
    ordinary gradients such as :func:`specproj.metrics.grad_spectral_loss`.
    Because DC and Nyquist bins carry half the weight of the others in the
    full spectrum, that transpose is ``D P D^-1`` with ``D`` the bin
    multiplicities.

    ``metric="parseval"`` treats ``upstream`` as a gradient in the Parseval
    inner product, under which the projection is orthogonal and hence its own
    adjoint: the result is simply the projection of ``upstream``.
    """
    if metric == "parseval":
        return project_stft_consistency(upstream)
    if metric != "euclidean":
        raise InvalidArgument(f"metric must be 'euclidean' or 'parseval', got {metric!r}")
    d = parseval_weights(upstream.config)
    return upstream.like(d * _stft_projection(upstream.data / d, upstream))


def parseval_inner(a: np.ndarray, b: np.ndarray, config) -> float:
    """Real inner product with one-sided bins weighted by their spectrum multiplicity."""
    return float(np.real(np.sum(parseval_weights(config) * a * np.conj(b))))
