"""Comparison quantities between two spectral embeddings."""

import json
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg

from .exceptions import InvalidArgumentError, UndefinedRatioError

RATIO_FLOOR = 1e-12


@dataclass(frozen=True)
class ComparisonReport:
    eigenvalue_ratios: list
    eigenvector_alignments: list
    embedding_similarity: float
    q: int
    subspace_alignment: float = None

    def to_json(self):
        return json.dumps(asdict(self), indent=2)


def eigenvalue_diff_ratio(lad, ad, indices):
    """``|l - mu| / |mu|`` for each requested index, on complex moduli.

    Raises
    ------
    UndefinedRatioError
        If a reference eigenvalue has modulus below ``RATIO_FLOOR``.
    """
    lad = np.asarray(lad)
    ad = np.asarray(ad)
    out = []
    for i in indices:
        if not (0 <= i < len(lad) and 0 <= i < len(ad)):
            raise InvalidArgumentError(f"index {i} out of range")
        mu = ad[i]
        if abs(mu) <= RATIO_FLOOR:
            raise UndefinedRatioError(f"reference eigenvalue {i} has modulus {abs(mu):.3g}")
        out.append(float(abs(lad[i] - mu) / abs(mu)))
    return out


def eigenvector_alignment(u, v):
    """Absolute cosine between two vectors, in [0, 1]."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise InvalidArgumentError(f"length mismatch {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise InvalidArgumentError("zero vector has no direction")
    return float(min(1.0, abs(u @ v) / (nu * nv)))


def _full_rank(A, name):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if np.linalg.matrix_rank(A) < A.shape[1]:
        raise InvalidArgumentError(f"{name} is rank deficient")
    return A


def subspace_alignment(U, V):
    """Product of the cosines of the principal angles between two column spans.

    Individual eigenvectors of a degenerate eigenvalue are not identifiable,
    the span they share is.
    """
    U = _full_rank(U, "U")
    V = _full_rank(V, "V")
    if U.shape != V.shape:
        raise InvalidArgumentError(f"shape mismatch {U.shape} vs {V.shape}")
    Qu, _ = np.linalg.qr(U)
    Qv, _ = np.linalg.qr(V)
    cosines = np.clip(np.linalg.svd(Qu.T @ Qv, compute_uv=False), 0.0, 1.0)
    return float(np.prod(cosines))


def closed_dimension(eigenvalues, k, rel_gap=0.02):
    """Smallest ``k' >= k`` whose leading nontrivial block ends at a gap.

    ``eigenvalues`` include the trivial one at index 0.  The block of
    nontrivial indices ``1..k'`` is grown while eigenvalue ``k'`` and
    ``k' + 1`` differ by less than ``rel_gap`` in relative modulus, so a
    near-degenerate pair is never split.  Capped at the number available.
    """
    mods = np.abs(np.asarray(eigenvalues))
    k = int(k)
    while k + 1 < len(mods) and abs(mods[k] - mods[k + 1]) < rel_gap * mods[k]:
        k += 1
    return k


def procrustes_rotation(E1, E2, weights=None):
    """Orthogonal ``O`` (reflections allowed) minimizing ``||E1 - E2 O^T||_F``.

    With ``weights`` the rows enter the squared loss with those weights.
    """
    C = E1.T @ E2 if weights is None else (E1 * weights[:, None]).T @ E2
    U, _, Vt = scipy.linalg.svd(C)
    return U @ Vt


def embedding_similarity(E1, E2, max_iter=200, tol=1e-13):
    """Mean row distance ``(1/n) sum_i ||E1[i] - O E2[i]||`` minimized over
    orthogonal ``O``.

    Starts from the least-squares alignment and refines it by iteratively
    reweighted Procrustes (weights ``1 / ||E1[i] - O E2[i]||``), which never
    increases the mean of row norms. ``max_iter=0`` keeps the least-squares
    alignment.
    """
    E1 = np.asarray(E1, dtype=np.float64)
    E2 = np.asarray(E2, dtype=np.float64)
    if E1.ndim == 1:
        E1, E2 = E1[:, None], E2.reshape(-1, 1)
    if E1.shape != E2.shape or E1.ndim != 2 or E1.shape[1] < 1:
        raise InvalidArgumentError(f"shape mismatch {E1.shape} vs {E2.shape}")
    O = procrustes_rotation(E1, E2)
    r = np.linalg.norm(E1 - E2 @ O.T, axis=1)
    best = r.mean()
    floor = 1e-12 * max(np.abs(E1).max(), np.abs(E2).max(), 1e-300)
    for _ in range(max_iter):
        if best <= floor:
            break
        O = procrustes_rotation(E1, E2, 1.0 / np.maximum(r, floor))
        r = np.linalg.norm(E1 - E2 @ O.T, axis=1)
        cur = r.mean()
        if cur >= best - tol * best:
            best = min(best, cur)
            break
        best = cur
    return float(best)


def _coords(e):
    return e.coords if hasattr(e, "coords") else np.asarray(e)


def compare(lad_spec, ad_spec, E_lad, E_ad, indices=None):
    """Bundle eigenvalue ratios, per-vector and subspace alignment, and
    embedding similarity for two spectral results (trivial pair skipped)."""
    E_lad, E_ad = _coords(E_lad), _coords(E_ad)
    q = E_ad.shape[1]
    k = min(len(lad_spec.eigenvalues), len(ad_spec.eigenvalues)) - 1
    if indices is None:
        indices = range(1, k + 1)
    ratios = eigenvalue_diff_ratio(lad_spec.eigenvalues, ad_spec.eigenvalues, indices)
    aligns = [eigenvector_alignment(lad_spec.eigenvectors[:, i], ad_spec.eigenvectors[:, i])
              for i in indices]
    sub = subspace_alignment(lad_spec.eigenvectors[:, 1:q + 1], ad_spec.eigenvectors[:, 1:q + 1])
    return ComparisonReport(ratios, aligns, embedding_similarity(E_ad, E_lad), q, sub)
