"""Generative-quality metrics over feature sets.

Feature sets are (N, D) float arrays. The manifold metrics build k-NN
balls around one set and count membership of the other; balls are
closed, so a point exactly on the radius counts as inside.
"""
from __future__ import annotations

import math
import struct
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.preprocessing import StandardScaler
from sklearn.utils.validation import check_array, check_is_fitted

from .pose import wrap_angle

MAGIC = b"FSET1"
_BLOCK_CELLS = 1 << 22  # distance-matrix entries held at once


def check_feature_set(X, min_rows: int = 2, name: str = "X") -> np.ndarray:
    """Finite 2-D float array with at least ``min_rows`` rows."""
    try:
        return check_array(X, dtype=np.float64, ensure_min_samples=min_rows, input_name=name)
    except ValueError as exc:
        raise ValueError(f"{name}: {exc}") from None


def _check_pair(real, gen, min_rows: int = 2):
    real = check_feature_set(real, min_rows, "real")
    gen = check_feature_set(gen, min_rows, "gen")
    if real.shape[1] != gen.shape[1]:
        raise ValueError(f"dimension mismatch: {real.shape[1]} vs {gen.shape[1]}")
    return real, gen


def _check_k(k: int, n: int) -> int:
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the manifold set size {n}")
    return int(k)


# ---------------------------------------------------------------- FID

def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.T) / 2)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def moments(X) -> tuple:
    X = check_feature_set(X)
    return X.mean(axis=0), np.atleast_2d(np.cov(X, rowvar=False))


def frechet_from_moments(mu_r, sigma_r, mu_g, sigma_g) -> float:
    """Squared Frechet distance between two Gaussian fits.

    The cross term uses Tr sqrt(Sg^1/2 Sr Sg^1/2), evaluated by a symmetric
    eigendecomposition with negative eigenvalues clipped to zero.
    """
    root_g = _psd_sqrt(sigma_g)
    inner = root_g @ sigma_r @ root_g
    w = np.linalg.eigvalsh((inner + inner.T) / 2)
    cross = float(np.sum(np.sqrt(np.clip(w, 0.0, None))))
    diff = np.asarray(mu_r) - np.asarray(mu_g)
    value = float(diff @ diff + np.trace(sigma_r) + np.trace(sigma_g) - 2.0 * cross)
    return max(value, 0.0)


def fid(real, gen) -> float:
    real, gen = _check_pair(real, gen)
    return frechet_from_moments(*moments(real), *moments(gen))


# ---------------------------------------------------------------- manifold metrics

def sq_distances(A, B) -> np.ndarray:
    """Squared Euclidean distances, accumulated one coordinate at a time.

    The summation order is fixed (left to right over coordinates) so the
    exhaustive reference below reproduces every value bit for bit, which
    keeps ball-membership decisions identical even at exact ties.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    out = np.zeros((len(A), len(B)))
    for j in range(A.shape[1]):
        diff = A[:, j, None] - B[None, :, j]
        out += diff * diff
    return out


def _blocked(A, B):
    rows = max(1, _BLOCK_CELLS // max(len(B), 1))
    for start in range(0, len(A), rows):
        yield start, sq_distances(A[start:start + rows], B)


def _knn_sq_radii(X, k: int) -> np.ndarray:
    out = np.empty(len(X))
    for start, d in _blocked(X, X):
        rows = np.arange(len(d))
        d[rows, start + rows] = -1.0  # self sorts first, then k others
        out[start:start + len(d)] = np.partition(d, k, axis=1)[:, k]
    return out


def knn_radii(X, k: int) -> np.ndarray:
    """Distance from every row to its k-th nearest other row."""
    X = check_feature_set(X)
    k = _check_k(k, len(X))
    return np.sqrt(_knn_sq_radii(X, k))


def knn_radius(X, index: int, k: int) -> float:
    X = check_feature_set(X)
    k = _check_k(k, len(X))
    if not 0 <= index < len(X):
        raise IndexError(f"index {index} out of range for {len(X)} rows")
    d = np.delete(sq_distances(X[index:index + 1], X)[0], index)
    return float(np.sqrt(np.partition(d, k - 1)[k - 1]))


def _membership_counts(centers, sq_radii, points) -> tuple:
    """(per-point ball count, per-center hit flag); balls are closed."""
    counts = np.zeros(len(points), dtype=np.int64)
    hit = np.zeros(len(centers), dtype=bool)
    for start, d in _blocked(points, centers):
        inside = d <= sq_radii[None, :]
        counts[start:start + len(d)] = inside.sum(axis=1)
        hit |= inside.any(axis=0)
    return counts, hit


def prdc(real, gen, k: int = 5) -> dict:
    """Precision, recall, density and coverage in one pass."""
    real, gen = _check_pair(real, gen)
    _check_k(k, len(real))
    _check_k(k, len(gen))
    r_real = _knn_sq_radii(real, k)
    r_gen = _knn_sq_radii(gen, k)
    counts, covered = _membership_counts(real, r_real, gen)
    recalled, _ = _membership_counts(gen, r_gen, real)
    return {
        "precision": float(np.mean(counts > 0)),
        "recall": float(np.mean(recalled > 0)),
        "density": float(counts.sum() / (k * len(gen))),
        "coverage": float(np.mean(covered)),
    }


def precision(real, gen, k: int = 5) -> float:
    real, gen = _check_pair(real, gen)
    counts, _ = _membership_counts(real, _knn_sq_radii(real, _check_k(k, len(real))), gen)
    return float(np.mean(counts > 0))


def recall(real, gen, k: int = 5) -> float:
    return precision(gen, real, k)


def density(real, gen, k: int = 5) -> float:
    real, gen = _check_pair(real, gen)
    counts, _ = _membership_counts(real, _knn_sq_radii(real, _check_k(k, len(real))), gen)
    return float(counts.sum() / (k * len(gen)))


def coverage(real, gen, k: int = 5) -> float:
    real, gen = _check_pair(real, gen)
    _, covered = _membership_counts(real, _knn_sq_radii(real, _check_k(k, len(real))), gen)
    return float(np.mean(covered))


# Exhaustive reference versions: plain double loops over Python floats,
# kept deliberately naive so they can audit the vectorised path.

def _rows(X) -> list:
    return [[float(v) for v in row] for row in np.asarray(X, dtype=float)]


def _sq_dist(a, b) -> float:
    s = 0.0
    for x, y in zip(a, b):
        d = x - y
        s += d * d
    return s


def _oracle_sq_radius(pts, index: int, k: int) -> float:
    d = sorted(_sq_dist(pts[index], q) for j, q in enumerate(pts) if j != index)
    return d[k - 1]


def oracle_knn_radius(X, index: int, k: int) -> float:
    return math.sqrt(_oracle_sq_radius(_rows(X), index, k))


def oracle_prdc(real, gen, k: int) -> dict:
    R, G = _rows(real), _rows(gen)
    r_real = [_oracle_sq_radius(R, i, k) for i in range(len(R))]
    r_gen = [_oracle_sq_radius(G, j, k) for j in range(len(G))]
    in_real = 0
    total = 0
    for y in G:
        hits = 0
        for x, r in zip(R, r_real):
            if _sq_dist(y, x) <= r:
                hits += 1
        total += hits
        if hits > 0:
            in_real += 1
    recalled = 0
    for x in R:
        for y, r in zip(G, r_gen):
            if _sq_dist(x, y) <= r:
                recalled += 1
                break
    covered = 0
    for x, r in zip(R, r_real):
        for y in G:
            if _sq_dist(y, x) <= r:
                covered += 1
                break
    return {
        "precision": in_real / len(G),
        "recall": recalled / len(R),
        "density": total / (k * len(G)),
        "coverage": covered / len(R),
    }


# ---------------------------------------------------------------- CLIP-score

def clip_score(traj_emb, prompt_emb, scale: float = 100.0, mode: str = "mean") -> float:
    """Scaled cosine agreement between paired rows; ``mode`` is mean or sum."""
    a = check_feature_set(traj_emb, 1, "traj_emb")
    b = check_feature_set(prompt_emb, 1, "prompt_emb")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a, axis=1), np.linalg.norm(b, axis=1)
    if np.any(na == 0) or np.any(nb == 0):
        raise ValueError("zero-norm row")
    cos = np.clip(np.einsum("ij,ij->i", a, b) / (na * nb), -1.0, 1.0)
    if mode == "mean":
        return float(scale * cos.mean())
    if mode == "sum":
        return float(scale * cos.sum())
    raise ValueError(f"mode must be 'mean' or 'sum', got {mode!r}")


# ---------------------------------------------------------------- estimators

class TrajectoryFeaturizer(BaseEstimator, TransformerMixin):
    """Flatten camera trajectories into standardized feature rows.

    Each row holds positions relative to frame 0, wrapped Euler offsets from
    frame 0, and the per-frame fov. ``fit`` learns the per-dimension
    standardization (constant dimensions keep unit scale).
    """

    def __init__(self, standardize: bool = True):
        self.standardize = standardize

    @staticmethod
    def raw_features(trajectories) -> np.ndarray:
        rows = []
        for traj in trajectories:
            rel = traj.positions - traj.positions[0]
            rot = wrap_angle(traj.orientations - traj.orientations[0])
            rows.append(np.concatenate([rel.ravel(), rot.ravel(), traj.fovs]))
        if not rows:
            raise ValueError("no trajectories given")
        if len({len(r) for r in rows}) != 1:
            raise ValueError("trajectories must share one length")
        return np.vstack(rows)

    def fit(self, X, y=None):
        raw = self.raw_features(X)
        self.n_features_in_ = raw.shape[1]
        self.scaler_ = StandardScaler(with_mean=self.standardize, with_std=self.standardize).fit(raw)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "scaler_")
        raw = self.raw_features(X)
        if raw.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {raw.shape[1]}")
        return self.scaler_.transform(raw)


class FrechetDistance(BaseEstimator):
    """``fit`` stores the Gaussian fit of the real set; ``score`` returns FID."""

    def fit(self, X, y=None):
        X = check_feature_set(X)
        self.n_features_in_ = X.shape[1]
        self.mu_, self.sigma_ = moments(X)
        return self

    def score(self, X, y=None) -> float:
        check_is_fitted(self, "mu_")
        X = check_feature_set(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"dimension mismatch: {self.n_features_in_} vs {X.shape[1]}")
        return frechet_from_moments(self.mu_, self.sigma_, *moments(X))


class ManifoldMetrics(BaseEstimator):
    """k-NN manifold estimator fit on the real set."""

    def __init__(self, k: int = 5):
        self.k = k

    def fit(self, X, y=None):
        X = check_feature_set(X)
        _check_k(self.k, len(X))
        self.real_ = X
        self.sq_radii_ = _knn_sq_radii(X, self.k)
        return self

    def score(self, X, y=None) -> dict:
        check_is_fitted(self, "sq_radii_")
        real, gen = _check_pair(self.real_, X)
        _check_k(self.k, len(gen))
        counts, covered = _membership_counts(real, self.sq_radii_, gen)
        recalled, _ = _membership_counts(gen, _knn_sq_radii(gen, self.k), real)
        return {
            "precision": float(np.mean(counts > 0)),
            "recall": float(np.mean(recalled > 0)),
            "density": float(counts.sum() / (self.k * len(gen))),
            "coverage": float(np.mean(covered)),
        }


# ---------------------------------------------------------------- feature files

def write_features(path, X, binary: bool = False) -> None:
    X = check_feature_set(X, 0)
    n, d = X.shape
    path = Path(path)
    if binary:
        with path.open("wb") as fh:
            fh.write(MAGIC + struct.pack("<II", d, n))
            fh.write(X.astype("<f8").tobytes())
        return
    lines = [f"{d} {n}"] + [" ".join(repr(float(v)) for v in row) for row in X]
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def read_features(path) -> np.ndarray:
    """Read a text or binary feature file; the format is detected from the magic bytes."""
    raw = Path(path).read_bytes()
    if raw.startswith(MAGIC):
        head = len(MAGIC) + 8
        if len(raw) < head:
            raise ValueError(f"{path}: truncated header")
        d, n = struct.unpack("<II", raw[len(MAGIC):head])
        body = raw[head:]
        if len(body) != 8 * n * d:
            raise ValueError(f"{path}: expected {n * d} values, found {len(body) // 8}")
        X = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(n, d)
    else:
        lines = raw.decode("ascii").splitlines()
        if not lines:
            raise ValueError(f"{path}: empty feature file")
        try:
            d, n = (int(v) for v in lines[0].split())
        except ValueError:
            raise ValueError(f"{path}: header must be 'D N'") from None
        rows = [ln for ln in lines[1:] if ln.strip()]
        if len(rows) != n:
            raise ValueError(f"{path}: header says {n} rows, found {len(rows)}")
        for i, ln in enumerate(rows):
            if len(ln.split()) != d:
                raise ValueError(f"{path}: line {i + 2} has {len(ln.split())} values, expected {d}")
        X = np.array([[float(v) for v in ln.split()] for ln in rows], dtype=float).reshape(n, d)
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{path}: non-finite values")
    return X
