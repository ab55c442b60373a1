"""Linear-algebra certificate engine.

Single-site LSI constants via Bakry-Emery plus Holley-Stroock, the
Otto-Reznikoff matrix A (diagonal rho_i, off-diagonal -kappa_ij), global
LSI/PI constants from A >= rho*Id, covariance bounds (A^-1)_ij, and
power-law decay fitting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import distance
from .model import DEFAULT_GRID, ModelSpec, SingleSitePotential, validate_spec

DENSE_EIGEN_LIMIT = 2048


@dataclass(frozen=True)
class DecayFit:
    """Least-squares power-law fit |v| ~ C * r^-exponent on binned medians."""

    C: float
    exponent: float
    max_residual: float
    n_dropped: int = 0
    n_bins: int = 0

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "exponent": self.exponent,
            "max_residual": self.max_residual,
            "n_dropped": self.n_dropped,
            "n_bins": self.n_bins,
        }


def fit_decay(values, d: int) -> DecayFit:
    """Fit log|v| = log C - p log r over unit-width distance bins.

    Zero magnitudes are dropped (count reported); medians per bin make the
    fit robust to lattice-distance anisotropy.  Requires at least three
    distinct distances among the nonzero entries.
    """
    rs, vs = [], []
    dropped = 0
    for r, v in values:
        if v == 0.0:
            dropped += 1
            continue
        if r <= 0:
            raise ValueError("distances must be positive")
        rs.append(float(r))
        vs.append(abs(float(v)))
    if not rs:
        raise ValueError("all magnitudes are zero; nothing to fit")
    if len(set(rs)) < 3:
        raise ValueError("need at least 3 distinct distances to fit a decay")
    rs = np.asarray(rs)
    vs = np.asarray(vs)
    bins = np.rint(rs).astype(int)
    log_r, log_v = [], []
    for b in sorted(set(bins)):
        mask = bins == b
        log_r.append(np.log(np.median(rs[mask])))
        log_v.append(np.log(np.median(vs[mask])))
    log_r = np.asarray(log_r)
    log_v = np.asarray(log_v)
    X = np.column_stack([np.ones_like(log_r), -log_r])
    coef, *_ = np.linalg.lstsq(X, log_v, rcond=None)
    resid = log_v - X @ coef
    return DecayFit(
        C=float(np.exp(coef[0])),
        exponent=float(coef[1]),
        max_residual=float(np.max(np.abs(resid))),
        n_dropped=dropped,
        n_bins=len(log_r),
    )


def convexified_site_constant(
    pot: SingleSitePotential, M_ii: float, beta: float, grid=None
) -> float:
    """Bakry-Emery constant of the convexified single-site Hamiltonian.

    lambda = beta * (M_ii + inf_grid psi_c'') >= beta * M_ii.  The infimum is
    a grid infimum over the validation grid, not a symbolic proof.
    """
    if M_ii <= 0:
        raise ValueError("M_ii must be > 0")
    grid = DEFAULT_GRID if grid is None else np.asarray(grid, dtype=float)
    inf_d2 = float(np.min(np.asarray(pot.convex_d2(grid), dtype=float)))
    return beta * (M_ii + inf_d2)


def single_site_lsi(
    pot: SingleSitePotential, M_ii: float, beta: float = 1.0, grid=None
) -> float:
    """rho_i = Bakry-Emery constant degraded by Holley-Stroock: lam*e^(-beta*osc)."""
    if pot.osc_bounded is None:
        raise ValueError("osc(psi_b) must be declared")
    lam = convexified_site_constant(pot, M_ii, beta, grid)
    return lam * float(np.exp(-beta * pot.osc_bounded))


class OttoReznikoffMatrix:
    """Symmetric matrix with positive diagonal and nonpositive off-diagonals."""

    def __init__(self, A):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if not np.array_equal(A, A.T):
            raise ValueError("A must be symmetric")
        if np.any(np.diag(A) <= 0):
            raise ValueError("diagonal entries must be > 0")
        off = A - np.diag(np.diag(A))
        if np.any(off > 0):
            raise ValueError("off-diagonal entries must be <= 0")
        self.A = A

    @property
    def n(self) -> int:
        return self.A.shape[0]


def build_A(rho, kappa) -> OttoReznikoffMatrix:
    """A_ii = rho_i, A_ij = -kappa_ij for i != j."""
    rho = np.asarray(rho, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("all rho_i must be > 0")
    if kappa.shape != (rho.size, rho.size):
        raise ValueError("kappa shape does not match rho")
    if np.any(kappa < 0):
        raise ValueError("kappa entries must be >= 0")
    if not np.array_equal(kappa, kappa.T):
        raise ValueError("kappa must be symmetric")
    A = -kappa.copy()
    np.fill_diagonal(A, rho)
    return OttoReznikoffMatrix(A)


@dataclass(frozen=True)
class Certificate:
    """Certified LSI/PI constant with method tag and model fingerprint."""

    rho: float
    kind: str  # "LSI" | "PI"
    method: str  # "eigen" | "gershgorin"
    fingerprint: str = ""
    decay: DecayFit | None = None

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("certificate constant must be > 0")

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "rho": self.rho,
            "method": self.method,
            "fingerprint": self.fingerprint,
        }
        if self.decay is not None:
            d["decay"] = self.decay.to_dict()
        return d


@dataclass(frozen=True)
class CertificationFailure:
    """Non-positive bound: the criterion does not certify this matrix."""

    method: str
    value: float
    reason: str


def smallest_eigenvalue(A: np.ndarray) -> float:
    if A.shape[0] <= DENSE_EIGEN_LIMIT:
        return float(np.linalg.eigvalsh(A)[0])
    from scipy.sparse.linalg import eigsh

    return float(eigsh(A, k=1, which="SA", return_eigenvectors=False)[0])


def gershgorin_bound(A: np.ndarray) -> float:
    off = np.sum(np.abs(A), axis=1) - np.abs(np.diag(A))
    return float(np.min(np.diag(A) - off))


def certify_lsi(
    A: OttoReznikoffMatrix,
    method: str = "eigen",
    kind: str = "LSI",
    fingerprint: str = "",
) -> Certificate | CertificationFailure:
    """Certificate rho from A >= rho*Id; failure is a value, not an error."""
    dense = A.A if isinstance(A, OttoReznikoffMatrix) else np.asarray(A, dtype=float)
    if method == "eigen":
        rho = smallest_eigenvalue(dense)
    elif method == "gershgorin":
        rho = gershgorin_bound(dense)
    else:
        raise ValueError(f"unknown method {method!r}")
    if rho <= 0:
        return CertificationFailure(method, rho, "matrix bound is not positive")
    return Certificate(rho=rho, kind=kind, method=method, fingerprint=fingerprint)


class NotPositiveDefiniteError(ValueError):
    pass


def _dense(A) -> np.ndarray:
    return A.A if isinstance(A, OttoReznikoffMatrix) else np.asarray(A, dtype=float)


def covariance_bound(A, i: int, j: int) -> float:
    """(A^-1)_ij by linear solve; >= 0 by M-matrix inverse positivity."""
    A = _dense(A)
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefiniteError("A is not positive definite") from e
    e_j = np.zeros(A.shape[0])
    e_j[j] = 1.0
    y = np.linalg.solve(L, e_j)
    x = np.linalg.solve(L.T, y)
    return float(x[i])


def inverse_matrix(A) -> np.ndarray:
    A = _dense(A)
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefiniteError("A is not positive definite") from e
    Linv = np.linalg.solve(L, np.eye(A.shape[0]))
    return Linv.T @ Linv


def model_matrix(spec: ModelSpec, grid=None) -> OttoReznikoffMatrix:
    """A for a model: convexified site constants on the diagonal, beta|M_ij| off.

    kappa_ij = beta * |M_ij| is exact for pair interactions since
    grad_i grad_j H = beta * M_ij.
    """
    n = spec.n_sites
    lam = np.array(
        [
            convexified_site_constant(p, spec.M.diag[k], spec.beta, grid)
            for k, p in enumerate(spec.potentials)
        ]
    )
    kappa = np.zeros((n, n))
    for (a, b), v in spec.M.entries():
        if a in spec.box and b in spec.box:
            i, j = spec.box.site_id(a), spec.box.site_id(b)
            kappa[i, j] = kappa[j, i] = spec.beta * abs(v)
    return build_A(lam, kappa)


def inverse_decay_fit(A: OttoReznikoffMatrix, spec: ModelSpec) -> DecayFit | None:
    """Fit the decay of the center row of A^-1 against lattice distance."""
    inv = inverse_matrix(A)
    center = spec.n_sites // 2
    cs = spec.box.site(center)
    pairs = [
        (distance(cs, spec.box.site(j)), inv[center, j])
        for j in range(spec.n_sites)
        if j != center
    ]
    distinct = {round(r, 12) for r, v in pairs if v != 0.0}
    if len(distinct) < 3:
        return None
    return fit_decay(pairs, spec.box.dimension)


def certify_model(
    spec: ModelSpec,
    method: str = "eigen",
    kind: str = "LSI",
    include_decay: bool = False,
    grid=None,
) -> Certificate | CertificationFailure:
    """Compose the full certificate pipeline for a model.

    The bound is certified for the convexified interaction matrix and the
    result degraded once by the worst Holley-Stroock factor
    exp(-beta * max_i osc(psi_b_i)); with osc = 0 this reduces to the plain
    Otto-Reznikoff bound.  The linear field b never enters.
    """
    report = validate_spec(spec, grid)
    if not report.all_ok:
        raise ValueError(f"model fails validation: {report.messages}")
    A = model_matrix(spec, grid)
    fp = spec.fingerprint(include_field=False)
    result = certify_lsi(A, method=method, kind=kind, fingerprint=fp)
    if isinstance(result, CertificationFailure):
        return result
    osc = max(p.osc_bounded for p in spec.potentials)
    rho = result.rho * float(np.exp(-spec.beta * osc))
    decay = inverse_decay_fit(A, spec) if include_decay else None
    return Certificate(rho=rho, kind=kind, method=method, fingerprint=fp, decay=decay)
