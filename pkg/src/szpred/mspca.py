"""PCA and multiscale PCA denoising.

The denoiser runs PCA independently on the wavelet coefficient matrix of
each scale, reconstructs each scale from its retained components, inverts
the wavelet transform, and finishes with one more PCA reconstruction in
the time domain. How many components survive at a scale is decided by a
selection policy that sees only that scale's eigenvalues.
"""

from dataclasses import dataclass, replace

import numpy as np

from szpred import wavelet
from szpred.errors import DataError, ParameterError, ShapeError


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # (p,)
    loadings: np.ndarray  # (p, r), column-orthonormal
    eigenvalues: np.ndarray  # (r,), descending, >= 0
    n_samples: int
    retained: int


def fit_pca(X):
    """Fit a full PCA on the column-centered covariance (divisor n-1).

    Loadings are eigenvectors in descending eigenvalue order with the
    largest-magnitude entry of each loading made positive, so repeated
    fits are bit-reproducible.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"expected 2-D data matrix, got shape {X.shape}")
    n, p = X.shape
    if n < 2:
        raise ParameterError(f"need at least 2 samples to fit PCA, got {n}")
    if p < 1:
        raise ParameterError("need at least 1 column")
    if not np.all(np.isfinite(X)):
        raise DataError("data matrix contains non-finite entries")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.maximum(eigvals[order], 0.0)
    eigvecs = eigvecs[:, order]
    # sign convention: largest-magnitude entry positive (first on ties)
    flip = eigvecs[np.argmax(np.abs(eigvecs), axis=0), np.arange(p)] < 0
    eigvecs[:, flip] *= -1.0
    return PcaModel(mean=mean, loadings=eigvecs, eigenvalues=eigvals, n_samples=n, retained=p)


def truncate(model, retained):
    """Keep the leading `retained` components."""
    if not 1 <= retained <= model.loadings.shape[1]:
        raise ParameterError(f"retained must be in [1, {model.loadings.shape[1]}], got {retained}")
    return replace(
        model,
        loadings=model.loadings[:, :retained],
        eigenvalues=model.eigenvalues[:retained],
        retained=retained,
    )


def transform(model, X):
    """Scores T = (X - mean) P."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.loadings.shape[0]:
        raise ShapeError(f"expected (n, {model.loadings.shape[0]}) matrix, got {X.shape}")
    return (X - model.mean) @ model.loadings


def inverse_transform(model, T):
    """Reconstruction X_hat = T P^T + mean."""
    T = np.asarray(T, dtype=np.float64)
    if T.ndim != 2 or T.shape[1] != model.retained:
        raise ShapeError(f"expected (n, {model.retained}) scores, got {T.shape}")
    return T @ model.loadings.T + model.mean


def select_components(eigenvalues):
    """Kaiser-style rule: keep components with eigenvalue >= the mean.

    Always keeps at least one. The input must be non-empty and sorted
    descending.
    """
    ev = np.asarray(eigenvalues, dtype=np.float64)
    if ev.ndim != 1 or len(ev) == 0:
        raise ParameterError("eigenvalues must be a non-empty 1-D sequence")
    if np.any(np.diff(ev) > 0):
        raise ParameterError("eigenvalues must be sorted descending")
    return max(1, int(np.sum(ev >= ev.mean())))


def retain_all(eigenvalues):
    """Selection override that keeps every component (denoising becomes identity)."""
    return len(eigenvalues)


def _pca_reconstruct(X, selector):
    model = fit_pca(X)
    model = truncate(model, selector(model.eigenvalues))
    return inverse_transform(model, transform(model, X))


def mspca_denoise(X, filt=None, levels=4, selector=select_components):
    """Multiscale PCA denoising of an (n, p) matrix.

    Per column DWT to `levels`, PCA reconstruction of every scale matrix
    (each detail scale and the final approximation), inverse DWT, then a
    final PCA reconstruction of the time-domain result.
    """
    if filt is None:
        filt = wavelet.filter_bank("db4")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ShapeError(f"expected (n, p>=2) matrix, got shape {X.shape}")
    details, approx = wavelet.dwt_columns(X, filt, levels)
    details = [_pca_reconstruct(D, selector) for D in details]
    approx = _pca_reconstruct(approx, selector)
    rebuilt = wavelet.idwt_columns(details, approx, filt)
    return _pca_reconstruct(rebuilt, selector)
