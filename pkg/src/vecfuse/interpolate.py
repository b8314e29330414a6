"""Aligning two embedding spaces and fusing their features.

Terms missing from one space get a vector inferred from their nearest
overlapping neighbors (cosine-weighted average in the space where they do
exist). The aligned spaces are concatenated and, optionally, passed
through an SVD that replaces the concatenation with U·Σ^1/2, shrinking
directions that both sources over-represent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, EmptyOverlap
from .matrixio import LabeledMatrix

DEFAULT_NEIGHBORS = 10
_ZERO = 1e-12


@dataclass
class OverlapIndex:
    """Shared/exclusive vocabulary split between two spaces, with unit
    copies of the shared vectors for cosine search."""

    a: LabeledMatrix
    b: LabeledMatrix
    shared: list
    only_a: list
    only_b: list
    a_shared_rows: np.ndarray
    b_shared_rows: np.ndarray
    a_shared_unit: np.ndarray
    b_shared_unit: np.ndarray


def _unit_rows(data: np.ndarray) -> np.ndarray:
    out = data.astype(np.float64)
    norms = np.sqrt((out * out).sum(axis=1))
    out /= np.where(norms > _ZERO, norms, 1.0)[:, None]
    return out


def build_overlap(a: LabeledMatrix, b: LabeledMatrix) -> OverlapIndex:
    """Index the vocabulary overlap; shared terms keep a's order."""
    b_index = b.label_index()
    shared = [lab for lab in a.labels if lab in b_index]
    shared_set = set(shared)
    only_a = [lab for lab in a.labels if lab not in shared_set]
    only_b = [lab for lab in b.labels if lab not in shared_set]
    a_index = a.label_index()
    a_rows = np.array([a_index[lab] for lab in shared], dtype=np.int64)
    b_rows = np.array([b_index[lab] for lab in shared], dtype=np.int64)
    return OverlapIndex(
        a=a, b=b, shared=shared, only_a=only_a, only_b=only_b,
        a_shared_rows=a_rows, b_shared_rows=b_rows,
        a_shared_unit=_unit_rows(a.data[a_rows]) if len(shared) else np.zeros((0, a.dims)),
        b_shared_unit=_unit_rows(b.data[b_rows]) if len(shared) else np.zeros((0, b.dims)),
    )


def _infer_from_vector(vec: np.ndarray, have_unit: np.ndarray,
                       want_shared: np.ndarray, k: int) -> np.ndarray:
    norm = np.sqrt(vec @ vec)
    sims = have_unit @ (vec / norm) if norm > _ZERO else np.zeros(len(have_unit))
    top = np.argsort(-sims, kind="stable")[: min(k, len(have_unit))]
    neighbors = want_shared[top].astype(np.float64)
    weights = np.maximum(sims[top], 0.0)
    total = weights.sum()
    if total <= 0.0:
        return neighbors.mean(axis=0)
    return (weights[:, None] * neighbors).sum(axis=0) / total


def infer_missing(term: str, have: LabeledMatrix, want: LabeledMatrix,
                  index: OverlapIndex, k: int = DEFAULT_NEIGHBORS) -> np.ndarray:
    """Infer `term`'s vector in the `want` space.

    Takes the k overlapping terms most cosine-similar to `term` in the
    `have` space and averages their `want` vectors weighted by similarity
    (negative similarities clamped to zero; if every similarity is
    non-positive, the plain mean of the k neighbors is used instead).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not index.shared:
        raise EmptyOverlap("the two spaces share no vocabulary")
    if have is index.a and want is index.b:
        have_unit, want_rows = index.a_shared_unit, index.b_shared_rows
    elif have is index.b and want is index.a:
        have_unit, want_rows = index.b_shared_unit, index.a_shared_rows
    else:
        raise ValueError("index was built for different matrices")
    vec = have.data[have.label_index()[term]].astype(np.float64)
    return _infer_from_vector(vec, have_unit, want.data[want_rows], k)


def svd_factors(m: np.ndarray):
    """Thin SVD with a deterministic sign convention.

    Each left-singular column is flipped so its largest-magnitude entry
    is nonnegative. Singular values come back non-increasing.
    """
    m = np.asarray(m, dtype=np.float64)
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"SVD did not converge: {exc}")
    pick = np.argmax(np.abs(u), axis=0)
    flip = u[pick, np.arange(u.shape[1])] < 0
    u[:, flip] *= -1.0
    vt[flip, :] *= -1.0
    return u, s, vt


def svd_discount(m: np.ndarray, out_dims: int):
    """Redundancy-discounted features U·Σ^1/2, truncated to `out_dims`.

    Returns (features, singular_values); the full non-increasing spectrum
    is returned even when the features are truncated.
    """
    m = np.asarray(m, dtype=np.float64)
    r, c = m.shape
    if not 1 <= out_dims <= min(r, c):
        raise ValueError(f"out_dims must be in [1, {min(r, c)}], got {out_dims}")
    u, s, _vt = svd_factors(m)
    features = u * np.sqrt(s)[None, :]
    return features[:, :out_dims], s


@dataclass
class FusionResult:
    """Fused matrix over the union vocabulary plus the SVD spectrum
    (empty when the discount step was skipped)."""

    matrix: LabeledMatrix
    singular_values: np.ndarray


def fuse(a: LabeledMatrix, b: LabeledMatrix, k: int = DEFAULT_NEIGHBORS,
         out_dims: int | None = None, discount: bool = True) -> FusionResult:
    """Align, concatenate and (optionally) SVD-discount two spaces.

    Union vocabulary order: shared terms in a's order, then terms only in
    a, then terms only in b. Missing sides are inferred from the overlap;
    with `discount` off the raw concatenation is returned (dimensionality
    dims(a) + dims(b)) and `out_dims` is ignored.
    """
    index = build_overlap(a, b)
    if (index.only_a or index.only_b) and not index.shared:
        raise EmptyOverlap("cannot infer missing vectors without shared terms")
    labels = index.shared + index.only_a + index.only_b
    da, db = a.dims, b.dims
    a_index = a.label_index()
    b_index = b.label_index()
    a_shared = a.data[index.a_shared_rows]
    b_shared = b.data[index.b_shared_rows]
    concat = np.empty((len(labels), da + db), dtype=np.float32)
    for row, lab in enumerate(labels):
        ai = a_index.get(lab)
        bi = b_index.get(lab)
        if ai is not None:
            concat[row, :da] = a.data[ai]
        else:
            concat[row, :da] = _infer_from_vector(
                b.data[bi].astype(np.float64), index.b_shared_unit, a_shared, k)
        if bi is not None:
            concat[row, da:] = b.data[bi]
        else:
            concat[row, da:] = _infer_from_vector(
                a.data[ai].astype(np.float64), index.a_shared_unit, b_shared, k)
    if not discount:
        return FusionResult(matrix=LabeledMatrix(labels=labels, data=concat),
                            singular_values=np.zeros(0))
    if out_dims is None:
        out_dims = da + db
    features, spectrum = svd_discount(concat.astype(np.float64), out_dims)
    return FusionResult(
        matrix=LabeledMatrix(labels=labels, data=features.astype(np.float32)),
        singular_values=spectrum)
