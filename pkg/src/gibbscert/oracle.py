"""Exact reference values for small systems.

Tensor Gauss-Legendre quadrature for up to three sites, and closed-form
Gaussian identities (density ~ e^{-x.Px/2} has covariance P^-1).  Used as
ground truth by tests and by the deterministic experiment paths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .certify import NotPositiveDefiniteError
from .model import BoundaryCondition, InteractionMatrix, ModelSpec, boundary_field


@dataclass(frozen=True)
class QuadratureConfig:
    truncation: float = 12.0   # integrate over [-L, L] per axis
    nodes: int = 96

    def __post_init__(self):
        if self.truncation <= 0:
            raise ValueError("truncation must be > 0")
        if self.nodes < 16:
            raise ValueError("need at least 16 nodes per axis")


@dataclass(frozen=True)
class QuadratureMoments:
    mean: np.ndarray
    var: np.ndarray
    cov: np.ndarray
    error_estimate: float      # max moment change in the last refinement
    deltas: tuple[float, ...]  # successive refinement deltas


class RefinementError(RuntimeError):
    pass


def _moments_at(spec: ModelSpec, bc: BoundaryCondition, L: float, m: int):
    k = spec.n_sites
    t, wt = np.polynomial.legendre.leggauss(m)
    x = L * t
    w = L * wt
    axes_x, axes_w = [], []
    for i in range(k):
        shape = [1] * k
        shape[i] = m
        axes_x.append(x.reshape(shape))
        axes_w.append(w.reshape(shape))

    fld = spec.b + boundary_field(spec, bc)
    M = spec.M.dense()
    H = np.zeros((1,) * k)
    for i, p in enumerate(spec.potentials):
        H = H + p.value(axes_x[i]) + fld[i] * axes_x[i] + 0.5 * M[i, i] * axes_x[i] ** 2
    for i in range(k):
        for j in range(i + 1, k):
            if M[i, j] != 0.0:
                H = H + M[i, j] * axes_x[i] * axes_x[j]
    H = spec.beta * H

    logw = -H
    logw -= logw.max()
    rho = np.exp(logw)
    W = axes_w[0]
    for i in range(1, k):
        W = W * axes_w[i]
    rho = rho * W
    Z = rho.sum()

    mean = np.array([(axes_x[i] * rho).sum() / Z for i in range(k)])
    cov = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            second = (axes_x[i] * axes_x[j] * rho).sum() / Z
            cov[i, j] = cov[j, i] = second - mean[i] * mean[j]
    return mean, cov


def quadrature_moments(spec: ModelSpec, bc: BoundaryCondition | None = None,
                       qcfg: QuadratureConfig | None = None) -> QuadratureMoments:
    """Moments of the Gibbs measure by direct numerical integration.

    Runs a three-level refinement (half nodes, base, then doubled domain and
    nodes) and reports the last delta as the truncation-error estimate.
    Raises when the deltas grow instead of shrinking.
    """
    bc = bc or BoundaryCondition.empty()
    qcfg = qcfg or QuadratureConfig()
    if spec.n_sites > 3:
        raise ValueError("quadrature oracle supports at most 3 interior sites")
    levels = [
        (qcfg.truncation, max(qcfg.nodes // 2, 16)),
        (qcfg.truncation, qcfg.nodes),
        (2 * qcfg.truncation, 2 * qcfg.nodes),
    ]
    results = [_moments_at(spec, bc, L, m) for L, m in levels]
    deltas = []
    for (m0, c0), (m1, c1) in zip(results, results[1:]):
        deltas.append(float(max(np.max(np.abs(m1 - m0)), np.max(np.abs(c1 - c0)))))
    if deltas[-1] > max(deltas[0], 1e-12) and deltas[-1] > 1e-8:
        raise RefinementError(
            f"refinement not converging: deltas {deltas} are not decreasing"
        )
    mean, cov = results[-1]
    return QuadratureMoments(
        mean=mean, var=np.diag(cov).copy(), cov=cov,
        error_estimate=deltas[-1], deltas=tuple(deltas),
    )


def gaussian_covariance(M) -> np.ndarray:
    """Covariance M^-1 of the Gaussian density ~ e^{-x.Mx/2}; M must be SPD."""
    A = M.dense() if isinstance(M, InteractionMatrix) else np.asarray(M, dtype=float)
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefiniteError("interaction matrix is not positive definite") from e
    Linv = np.linalg.solve(L, np.eye(A.shape[0]))
    return Linv.T @ Linv


def gaussian_moments(spec: ModelSpec, bc: BoundaryCondition | None = None):
    """Exact (mean, covariance) of a Gaussian model with boundary data.

    Precision P = beta * (M + diag of quadratic potential coefficients);
    conditional mean is -P^-1 * beta * (b + halo field).
    """
    if not spec.is_gaussian:
        raise ValueError("model is not Gaussian (non-quadratic potentials present)")
    bc = bc or BoundaryCondition.empty()
    P = spec.beta * (spec.M.dense() + np.diag(spec.quadratic_diag()))
    cov = gaussian_covariance(P)
    mean = -cov @ (spec.beta * (spec.b + boundary_field(spec, bc)))
    return mean, cov


def golden_store(path, fingerprint: str, payload: dict) -> None:
    """Record oracle values keyed by model fingerprint (regression golden file)."""
    path = Path(path)
    data = json.loads(path.read_text()) if path.exists() else {}
    data[fingerprint] = payload
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def golden_lookup(path, fingerprint: str) -> dict | None:
    path = Path(path)
    if not path.exists():
        return None
    return json.loads(path.read_text()).get(fingerprint)
