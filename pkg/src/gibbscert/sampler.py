"""MCMC sampling of finite-volume Gibbs measures and moment estimation.

Random-scan single-site Metropolis with Gaussian proposals.  Chains are
independent with RNG streams derived from (seed, chain index); results are
merged by chain index, so estimates are deterministic for any thread count.
Error bars are batch means (default 32 batches).
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .lattice import Site
from .model import (
    BoundaryCondition,
    ModelSpec,
    boundary_field,
    conditioned_model,
)

DEFAULT_BATCHES = 32


@dataclass(frozen=True)
class SamplerConfig:
    n_samples: int = 10_000          # retained samples per chain
    burn_in: int | None = None       # sweeps; default 10x box size
    thinning: int = 1                # sweeps between retained samples
    proposal_sd: float = 1.0
    seed: int = 0
    n_chains: int = 1
    threads: int = 1
    tune: bool = False               # pre-run step-size tuning, frozen before measurement

    def __post_init__(self):
        if self.n_samples < 1 or self.thinning < 1 or self.n_chains < 1:
            raise ValueError("counts must be >= 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.proposal_sd <= 0:
            raise ValueError("proposal_sd must be > 0")


@dataclass
class SampleRun:
    """Retained configurations, stacked chain-by-chain in index order."""

    samples: np.ndarray              # (n_chains * n_samples, n_sites)
    sites: tuple[Site, ...]
    acceptance: float
    proposal_sd: float
    fingerprint: str


class SamplingError(RuntimeError):
    pass


def _chain_seed(seed: int, chain: int) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(chain,))
    return int(ss.generate_state(1, np.uint32)[0])


def _kernel_inputs(spec: ModelSpec, bc: BoundaryCondition):
    M = spec.M.dense()
    fld = spec.b + boundary_field(spec, bc)
    codable = all(p.codable for p in spec.potentials)
    if codable:
        ck = np.array([p.convex_code for p in spec.potentials], dtype=np.int64)
        cp = np.array([p.convex_param for p in spec.potentials], dtype=np.float64)
        bk = np.array([p.bounded_code for p in spec.potentials], dtype=np.int64)
        bp = np.array([p.bounded_param for p in spec.potentials], dtype=np.float64)
        return M, fld, (ck, cp, bk, bp)
    return M, fld, None


def _run_chain(M, fld, beta, codes, potentials, n_keep, burn, thin, sd, seed):
    if codes is not None:
        return _kernels.metropolis_chain(
            M, fld, beta, *codes, n_keep, burn, thin, sd, seed
        )
    return _kernels.metropolis_chain_python(
        M, fld, beta, potentials, n_keep, burn, thin, sd, seed
    )


def _tuned_sd(M, fld, beta, codes, potentials, cfg: SamplerConfig) -> float:
    """Scale the proposal sd until pilot acceptance lands in [0.3, 0.5]."""
    sd = cfg.proposal_sd
    n = M.shape[0]
    pilot_seed = _chain_seed(cfg.seed, 10_007)  # stream disjoint from chains
    for _ in range(20):
        _, acc, prop, _, err, _ = _run_chain(
            M, fld, beta, codes, potentials, 50, 10 * n, 1, sd, pilot_seed
        )
        if err:
            raise SamplingError("non-finite energy during tuning")
        rate = acc / max(prop, 1)
        if 0.3 <= rate <= 0.5:
            break
        sd *= 1.5 if rate > 0.5 else 1 / 1.5
    return sd


def sample_gibbs(spec: ModelSpec, bc: BoundaryCondition | None,
                 cfg: SamplerConfig) -> SampleRun:
    """Sample the finite-volume Gibbs measure of the model.

    Deterministic given (seed, n_chains) regardless of thread scheduling.
    Requires a positive dominance margin so the measure is normalizable.
    """
    bc = bc or BoundaryCondition.empty()
    if spec.M.realized_margin() <= 0:
        raise ValueError("dominance margin must be > 0 to sample")
    M, fld, codes = _kernel_inputs(spec, bc)
    n = spec.n_sites
    burn = cfg.burn_in if cfg.burn_in is not None else 10 * n
    sd = cfg.proposal_sd
    if cfg.tune:
        sd = _tuned_sd(M, fld, spec.beta, codes, spec.potentials, cfg)

    def one(chain):
        return _run_chain(
            M, fld, spec.beta, codes, spec.potentials,
            cfg.n_samples, burn, cfg.thinning, sd, _chain_seed(cfg.seed, chain),
        )

    if cfg.threads > 1 and cfg.n_chains > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(one, range(cfg.n_chains)))
    else:
        results = [one(c) for c in range(cfg.n_chains)]

    blocks = []
    accepts = proposals = 0
    for chain, (out, acc, prop, burn_acc, err, site) in enumerate(results):
        if err:
            raise SamplingError(
                f"non-finite energy difference at site index {site} (chain {chain})"
            )
        if burn > 0 and burn_acc == 0:
            raise SamplingError(
                f"zero acceptance over the full burn-in window (chain {chain}); "
                f"proposal_sd={sd} is likely misconfigured"
            )
        blocks.append(out)
        accepts += acc
        proposals += prop
    samples = np.concatenate(blocks, axis=0)
    return SampleRun(
        samples=samples,
        sites=spec.box.sites,
        acceptance=accepts / max(proposals, 1),
        proposal_sd=sd,
        fingerprint=spec.fingerprint(),
    )


def conditional_resample(spec: ModelSpec, bc: BoundaryCondition | None,
                         clamp: dict, cfg: SamplerConfig) -> SampleRun:
    """Sample the model conditioned on fixed values for a subset of sites.

    Clamped spins join the boundary condition of the reduced model; the
    returned configurations cover the full box with clamped columns constant.
    With an empty clamp this is exactly sample_gibbs (same seed, same stream).
    """
    bc = bc or BoundaryCondition.empty()
    clamp = {tuple(s): float(v) for s, v in clamp.items()}
    if not clamp:
        return sample_gibbs(spec, bc, cfg)
    sub_spec, sub_bc = conditioned_model(spec, bc, clamp)
    run = sample_gibbs(sub_spec, sub_bc, cfg)

    full = np.empty((run.samples.shape[0], spec.n_sites))
    for col, s in enumerate(sub_spec.box.sites):
        full[:, spec.box.site_id(s)] = run.samples[:, col]
    for s, v in clamp.items():
        full[:, spec.box.site_id(s)] = v
    return SampleRun(
        samples=full,
        sites=spec.box.sites,
        acceptance=run.acceptance,
        proposal_sd=run.proposal_sd,
        fingerprint=spec.fingerprint(),
    )


@dataclass
class MomentEstimates:
    """Empirical moments with batch-means standard errors."""

    mean: np.ndarray
    var: np.ndarray
    se_mean: np.ndarray
    se_var: np.ndarray
    ess: np.ndarray
    cov: np.ndarray | None = None            # full matrix when pairs not given
    cov_pairs: dict | None = None            # {(i, j): value} for sparse use
    se_cov: np.ndarray | dict | None = None
    fingerprint: str = ""

    def cov_entry(self, i: int, j: int) -> float:
        if self.cov is not None:
            return float(self.cov[i, j])
        key = (i, j) if (i, j) in self.cov_pairs else (j, i)
        return float(self.cov_pairs[key])

    def se_cov_entry(self, i: int, j: int) -> float:
        if isinstance(self.se_cov, np.ndarray):
            return float(self.se_cov[i, j])
        key = (i, j) if (i, j) in self.se_cov else (j, i)
        return float(self.se_cov[key])

    def to_dict(self) -> dict:
        if self.cov_pairs is not None:
            pairs = [[list(k), v] for k, v in sorted(self.cov_pairs.items())]
            se_pairs = [[list(k), v] for k, v in sorted(self.se_cov.items())]
        else:
            pairs = [
                [[i, j], float(self.cov[i, j])]
                for i in range(self.cov.shape[0])
                for j in range(i, self.cov.shape[0])
            ]
            se_pairs = [
                [[i, j], float(self.se_cov[i, j])]
                for i in range(self.cov.shape[0])
                for j in range(i, self.cov.shape[0])
            ]
        return {
            "mean": self.mean.tolist(),
            "var": self.var.tolist(),
            "cov_pairs": pairs,
            "se": {
                "mean": self.se_mean.tolist(),
                "var": self.se_var.tolist(),
                "cov_pairs": se_pairs,
            },
            "ess": self.ess.tolist(),
            "config_fingerprint": self.fingerprint,
        }


def _batch_se(values: np.ndarray, n_batches: int) -> np.ndarray:
    """SE of the mean of (T, k) columns via non-overlapping batch means."""
    T = values.shape[0]
    m = T // n_batches
    trimmed = values[: m * n_batches]
    batches = trimmed.reshape(n_batches, m, -1).mean(axis=1)
    return batches.std(axis=0, ddof=1) / np.sqrt(n_batches)


def estimate_moments(samples, pairs=None, n_batches: int = DEFAULT_BATCHES,
                     fingerprint: str = "") -> MomentEstimates:
    """Means, variances, covariances with batch-means SEs and per-site ESS.

    If `pairs` (list of site-index pairs) is given, only those covariances
    are computed.
    """
    if hasattr(samples, "samples"):
        if not fingerprint:
            fingerprint = samples.fingerprint
        samples = samples.samples
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    T, n = X.shape
    if T < 2:
        raise ValueError("need at least 2 samples")
    if T < n_batches:
        raise ValueError(f"fewer samples ({T}) than batches ({n_batches})")

    mean = X.mean(axis=0)
    centered = X - mean
    se_mean = _batch_se(X, n_batches)

    sq = centered**2
    var = sq.sum(axis=0) / (T - 1)
    se_var = _batch_se(sq, n_batches)

    with np.errstate(divide="ignore", invalid="ignore"):
        ess = np.where(se_mean > 0, var / np.maximum(se_mean**2, 1e-300), float(T))
    ess = np.minimum(ess, float(T))

    if pairs is None:
        cov = centered.T @ centered / (T - 1)
        np.fill_diagonal(cov, var)
        prods = np.empty((T, n * (n + 1) // 2))
        idx = 0
        index_of = {}
        for i in range(n):
            for j in range(i, n):
                prods[:, idx] = centered[:, i] * centered[:, j]
                index_of[(i, j)] = idx
                idx += 1
        se_flat = _batch_se(prods, n_batches)
        se_cov = np.zeros((n, n))
        for (i, j), k in index_of.items():
            se_cov[i, j] = se_cov[j, i] = se_flat[k]
        return MomentEstimates(mean, var, se_mean, se_var, ess,
                               cov=cov, se_cov=se_cov, fingerprint=fingerprint)

    cov_pairs = {}
    se_pairs = {}
    for i, j in pairs:
        w = centered[:, i] * centered[:, j]
        cov_pairs[(i, j)] = float(w.sum() / (T - 1))
        se_pairs[(i, j)] = float(_batch_se(w[:, None], n_batches)[0])
    return MomentEstimates(mean, var, se_mean, se_var, ess,
                           cov_pairs=cov_pairs, se_cov=se_pairs,
                           fingerprint=fingerprint)


@dataclass(frozen=True)
class ExpMomentEstimate:
    value: float
    se: float
    overflowed: bool = False
    note: str = ""


def estimate_exp_moment(samples, a: float, site_index: int,
                        n_batches: int = DEFAULT_BATCHES,
                        delta: float | None = None) -> ExpMomentEstimate:
    """Empirical mean of exp(a * x_i^2) with batch-means SE.

    The finite-moment regime is a <= delta/2; outside it the estimator may
    diverge, so a warning is issued when delta is known.
    """
    if a < 0:
        raise ValueError("a must be >= 0")
    if delta is not None and a > delta / 2:
        warnings.warn(
            f"a={a} exceeds delta/2={delta / 2}; exponential moment may diverge",
            RuntimeWarning,
        )
    if hasattr(samples, "samples"):
        samples = samples.samples
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    col = X[:, site_index]
    if a == 0.0:
        return ExpMomentEstimate(1.0, 0.0)
    with np.errstate(over="ignore"):
        vals = np.exp(a * col**2)
    if not np.all(np.isfinite(vals)):
        return ExpMomentEstimate(
            float("inf"), float("inf"), overflowed=True,
            note=f"exp(a*x^2) overflowed at max |x| = {np.max(np.abs(col)):.3g}",
        )
    return ExpMomentEstimate(
        float(vals.mean()), float(_batch_se(vals[:, None], n_batches)[0])
    )
