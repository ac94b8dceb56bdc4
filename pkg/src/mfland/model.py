"""Data model for the factorization objective J(W, S) = 0.5 * ||X - W S||_F^2.

The search space pairs a left factor W (m x k) with a right factor S (k x n).
Everything downstream keys off a full SVD of the data matrix X, so this module
owns the SVD conventions: row/column orientation is normalized to m <= n,
singular vectors get a deterministic sign, and singular values below the rank
cutoff are stored as exact zeros.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidInput

DEFAULT_RANK_TOL = 1e-10


def _as_matrix(arr, name):
    a = np.asarray(arr, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise InvalidInput(f"{name} must be a nonempty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return a


def _freeze(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DataMatrixSVD:
    """Full SVD of the (orientation-normalized) data matrix.

    Attributes:
        X: the m x n data matrix, after transposition if the input was taller
            than wide.  ``transposed`` records whether that happened.
        U: m x m orthogonal, V: n x n orthogonal, sigma: length-m nonneg,
            nonincreasing, with entries below the rank cutoff stored as 0.0.
        r: numerical rank (count of retained singular values).
    """

    X: np.ndarray
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    r: int
    transposed: bool
    rank_tol: float

    @property
    def m(self):
        return self.X.shape[0]

    @property
    def n(self):
        return self.X.shape[1]

    @property
    def V0(self):
        """Columns of V spanning the kernel of X (indices r..n-1)."""
        return self.V[:, self.r:]

    def reconstruction_error(self):
        approx = (self.U * self.sigma) @ self.V[:, : self.m].T
        return float(np.linalg.norm(approx - self.X))


def load_data_matrix(X, rank_tol=DEFAULT_RANK_TOL):
    """Build a :class:`DataMatrixSVD` from a dense array.

    The matrix is transposed first if it has more rows than columns, so that
    m <= n always holds internally.  Sign convention: for each singular pair
    (u_i, v_i) with sigma_i > 0 the largest-magnitude entry of u_i is made
    positive (flipping v_i along with it); leftover null-space columns are
    sign-normalized the same way, independently.
    """
    X = _as_matrix(X, "X")
    transposed = False
    if X.shape[0] > X.shape[1]:
        X = X.T.copy()
        transposed = True
    if not np.any(X):
        raise InvalidInput("X is identically zero; the landscape is degenerate")
    if not (0 < rank_tol < 1):
        raise InvalidInput(f"rank_tol must lie in (0, 1), got {rank_tol}")

    U, s, Vh = np.linalg.svd(X, full_matrices=True)
    V = Vh.T
    m, n = X.shape

    r = int(np.count_nonzero(s > rank_tol * s[0]))
    sigma = s.copy()
    sigma[r:] = 0.0

    # Deterministic signs.  Paired columns flip together to keep U S V^T = X.
    for i in range(m):
        col = U[:, i]
        sgn = 1.0 if col[np.argmax(np.abs(col))] >= 0 else -1.0
        U[:, i] = sgn * col
        if i < r:
            V[:, i] = sgn * V[:, i]
    for j in range(n):
        if j < r:
            continue
        col = V[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            V[:, j] = -col

    return DataMatrixSVD(
        X=_freeze(X),
        U=_freeze(U),
        sigma=_freeze(sigma),
        V=_freeze(V),
        r=r,
        transposed=transposed,
        rank_tol=float(rank_tol),
    )


@dataclass(frozen=True)
class FactorPair:
    """A point (W, S) of the search space, W: m x k and S: k x n."""

    W: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        W = _as_matrix(self.W, "W")
        S = _as_matrix(self.S, "S")
        if W.shape[1] != S.shape[0]:
            raise DimensionError(
                f"inner dimensions disagree: W is {W.shape}, S is {S.shape}"
            )
        object.__setattr__(self, "W", _freeze(W))
        object.__setattr__(self, "S", _freeze(S))

    @property
    def k(self):
        return self.W.shape[1]

    def norm(self):
        return float(np.sqrt(np.sum(self.W**2) + np.sum(self.S**2)))


@dataclass(frozen=True)
class TangentPair:
    """A tangent direction (G, H) matching the shapes of some FactorPair."""

    G: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        G = _as_matrix(self.G, "G")
        H = _as_matrix(self.H, "H")
        if G.shape[1] != H.shape[0]:
            raise DimensionError(
                f"inner dimensions disagree: G is {G.shape}, H is {H.shape}"
            )
        object.__setattr__(self, "G", _freeze(G))
        object.__setattr__(self, "H", _freeze(H))

    def norm(self):
        return float(np.sqrt(np.sum(self.G**2) + np.sum(self.H**2)))


def check_pair(X, p):
    """Raise DimensionError unless p's shapes match X (m x k times k x n)."""
    if p.W.shape[0] != X.m or p.S.shape[1] != X.n:
        raise DimensionError(
            f"factor pair {p.W.shape} x {p.S.shape} does not fit a "
            f"{X.m} x {X.n} data matrix"
        )


def residual(X, p):
    """E = W S - X, the misfit whose Frobenius norm squared is 2 J."""
    check_pair(X, p)
    return p.W @ p.S - X.X


def evaluate_J(X, p):
    E = residual(X, p)
    return 0.5 * float(np.sum(E * E))


def inner(t1, t2):
    """Frobenius inner product on tangent pairs: <G1,G2> + <H1,H2>."""
    return float(np.sum(t1.G * t2.G) + np.sum(t1.H * t2.H))


def to_user_orientation(X, W, S):
    """Map a factor pair back to the orientation of the originally loaded X."""
    if X.transposed:
        return S.T.copy(), W.T.copy()
    return W.copy(), S.copy()


def read_matrix_csv(path):
    """Read a dense matrix from CSV: one row per line, no header.

    Ragged rows, non-numeric fields, and unreadable paths raise InvalidInput.
    """
    rows = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = [f.strip() for f in line.split(",")]
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                raise InvalidInput(f"{path}:{lineno}: non-numeric field")
            if len(rows) > 1 and len(rows[-1]) != len(rows[0]):
                raise InvalidInput(
                    f"{path}:{lineno}: ragged row ({len(rows[-1])} fields, "
                    f"expected {len(rows[0])})"
                )
    if not rows:
        raise InvalidInput(f"{path}: empty matrix file")
    return np.array(rows, dtype=float)


def write_matrix_csv(path, arr):
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    with open(path, "w", encoding="utf-8") as fh:
        for row in arr:
            fh.write(",".join(format(x, ".17g") for x in row))
            fh.write("\n")
