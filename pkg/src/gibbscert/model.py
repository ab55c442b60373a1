"""Hamiltonian specification for lattice spin systems.

A model is H(x) = beta * [ sum_i psi_i(x_i) + b_i x_i + 1/2 sum_ij M_ij x_i x_j ]
with perturbed-convex single-site potentials psi_i = psi_c + psi_b, a symmetric
strictly diagonally dominant interaction matrix M, and a linear field b.
Boundary conditions fix spin values on a finite halo outside the active box.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace

import numpy as np

from .lattice import LatticeBox, Site, distance

DEFAULT_GRID = np.arange(-20.0, 20.0 + 1e-9, 1e-2)

# Integer codes for potentials the compiled sampler kernel understands.
POT_ZERO = 0
POT_QUADRATIC = 1      # param c: c/2 * z^2
POT_QUARTIC = 2        # z^4 / 12
POT_GAUSS_BUMP = 3     # param a: -a * exp(-z^2/2)


@dataclass(frozen=True)
class SingleSitePotential:
    """Split single-site potential psi = psi_c + psi_b with declared bounds.

    The convex part carries its second derivative, the bounded part its first;
    sup/osc bounds for psi_b must be declared by the caller (they enter the
    Holley-Stroock factor of the certificates).
    """

    convex: callable
    convex_d1: callable
    convex_d2: callable
    bounded: callable
    bounded_d1: callable
    sup_bounded: float
    sup_bounded_d1: float
    osc_bounded: float
    name: str = "custom"
    # Kernel codes; None means the compiled sampler path is unavailable.
    convex_code: int | None = None
    convex_param: float = 0.0
    bounded_code: int | None = None
    bounded_param: float = 0.0

    def value(self, z):
        return self.convex(z) + self.bounded(z)

    def d1(self, z):
        return self.convex_d1(z) + self.bounded_d1(z)

    @property
    def codable(self) -> bool:
        return self.convex_code is not None and self.bounded_code is not None

    def descriptor(self) -> dict:
        if self.codable:
            return {
                "name": self.name,
                "convex": [self.convex_code, self.convex_param],
                "bounded": [self.bounded_code, self.bounded_param],
            }
        return {
            "name": self.name,
            "bounds": [self.sup_bounded, self.sup_bounded_d1, self.osc_bounded],
        }


def zero_potential() -> SingleSitePotential:
    z = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return SingleSitePotential(
        convex=z, convex_d1=z, convex_d2=z, bounded=z, bounded_d1=z,
        sup_bounded=0.0, sup_bounded_d1=0.0, osc_bounded=0.0,
        name="zero", convex_code=POT_ZERO, bounded_code=POT_ZERO,
    )


def quadratic_potential(c: float) -> SingleSitePotential:
    """psi_c(z) = c/2 z^2, psi_b = 0. Requires c >= 0."""
    if c < 0:
        raise ValueError("quadratic coefficient must be >= 0")
    z = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return SingleSitePotential(
        convex=lambda x: 0.5 * c * np.asarray(x, dtype=float) ** 2,
        convex_d1=lambda x: c * np.asarray(x, dtype=float),
        convex_d2=lambda x: np.full_like(np.asarray(x, dtype=float), c),
        bounded=z, bounded_d1=z,
        sup_bounded=0.0, sup_bounded_d1=0.0, osc_bounded=0.0,
        name=f"quadratic({c})",
        convex_code=POT_QUADRATIC, convex_param=float(c), bounded_code=POT_ZERO,
    )


def quartic_potential() -> SingleSitePotential:
    """psi_c(z) = z^4/12, psi_b = 0."""
    z = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return SingleSitePotential(
        convex=lambda x: np.asarray(x, dtype=float) ** 4 / 12.0,
        convex_d1=lambda x: np.asarray(x, dtype=float) ** 3 / 3.0,
        convex_d2=lambda x: np.asarray(x, dtype=float) ** 2,
        bounded=z, bounded_d1=z,
        sup_bounded=0.0, sup_bounded_d1=0.0, osc_bounded=0.0,
        name="quartic",
        convex_code=POT_QUARTIC, bounded_code=POT_ZERO,
    )


def double_well_potential(a: float) -> SingleSitePotential:
    """Quartic well plus bounded bump psi_b(z) = -a exp(-z^2/2).

    sup|psi_b| = osc(psi_b) = a; sup|psi_b'| = a e^{-1/2} (extremum at z=+-1).
    """
    if a < 0:
        raise ValueError("bump amplitude must be >= 0")
    return SingleSitePotential(
        convex=lambda x: np.asarray(x, dtype=float) ** 4 / 12.0,
        convex_d1=lambda x: np.asarray(x, dtype=float) ** 3 / 3.0,
        convex_d2=lambda x: np.asarray(x, dtype=float) ** 2,
        bounded=lambda x: -a * np.exp(-np.asarray(x, dtype=float) ** 2 / 2.0),
        bounded_d1=lambda x: a
        * np.asarray(x, dtype=float)
        * np.exp(-np.asarray(x, dtype=float) ** 2 / 2.0),
        sup_bounded=float(a),
        sup_bounded_d1=float(a) * float(np.exp(-0.5)),
        osc_bounded=float(a),
        name=f"double_well({a})",
        convex_code=POT_QUARTIC, bounded_code=POT_GAUSS_BUMP, bounded_param=float(a),
    )


def _pair_key(a: Site, b: Site) -> tuple[Site, Site]:
    if a == b:
        raise ValueError(f"off-diagonal entry with equal sites {a}")
    return (a, b) if a < b else (b, a)


class InteractionMatrix:
    """Symmetric interaction M over a box, stored sparse, with dominance margin.

    Off-diagonal entries are keyed by lexicographically ordered site pairs, so
    symmetry M_ij = M_ji holds structurally.  Entries may couple box sites to
    halo sites outside the box (used by boundary conditions); entries with no
    endpoint in the box are rejected.
    """

    def __init__(self, box: LatticeBox, diag, offdiag: dict, delta: float):
        diag = np.asarray(diag, dtype=float)
        if diag.shape != (len(box),):
            raise ValueError("diagonal length does not match box size")
        if delta <= 0:
            raise ValueError("dominance margin delta must be > 0")
        clean = {}
        for (a, b), v in offdiag.items():
            a, b = tuple(a), tuple(b)
            if len(a) != box.dimension or len(b) != box.dimension:
                raise ValueError(f"site pair ({a},{b}) has wrong dimension")
            if a not in box and b not in box:
                raise ValueError(f"entry ({a},{b}) has no endpoint in the box")
            if v != 0.0:
                clean[_pair_key(a, b)] = float(v)
        self.box = box
        self.diag = diag
        self.offdiag = clean
        self.delta = float(delta)

    def coupling(self, a, b) -> float:
        a, b = tuple(a), tuple(b)
        if a == b:
            return float(self.diag[self.box.site_id(a)])
        return self.offdiag.get(_pair_key(a, b), 0.0)

    def dense(self) -> np.ndarray:
        """Interior-interior matrix over the box ordering."""
        n = len(self.box)
        M = np.zeros((n, n))
        np.fill_diagonal(M, self.diag)
        for (a, b), v in self.offdiag.items():
            if a in self.box and b in self.box:
                i, j = self.box.site_id(a), self.box.site_id(b)
                M[i, j] = M[j, i] = v
        return M

    def halo_items(self):
        """Yield (interior_id, halo_site, value) for box-halo couplings."""
        for (a, b), v in self.offdiag.items():
            ain, bin_ = a in self.box, b in self.box
            if ain and not bin_:
                yield self.box.site_id(a), b, v
            elif bin_ and not ain:
                yield self.box.site_id(b), a, v

    def row_abs_offdiag(self) -> np.ndarray:
        """Per box site: sum_j |M_ij| over all stored off-diagonal entries."""
        rows = np.zeros(len(self.box))
        for (a, b), v in self.offdiag.items():
            if a in self.box:
                rows[self.box.site_id(a)] += abs(v)
            if b in self.box:
                rows[self.box.site_id(b)] += abs(v)
        return rows

    def realized_margin(self) -> float:
        return float(np.min(self.diag - self.row_abs_offdiag()))

    @property
    def is_ferromagnetic(self) -> bool:
        return all(v <= 0.0 for v in self.offdiag.values())

    def with_absolute(self) -> "InteractionMatrix":
        off = {k: -abs(v) for k, v in self.offdiag.items()}
        return InteractionMatrix(self.box, self.diag.copy(), off, self.delta)

    def entries(self):
        """Deterministic iteration over off-diagonal entries (sorted keys)."""
        for k in sorted(self.offdiag):
            yield k, self.offdiag[k]


@dataclass(frozen=True)
class BoundaryCondition:
    """Tempered spin values on halo sites outside the active box."""

    sites: tuple[Site, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.sites) != len(self.values):
            raise ValueError("boundary sites/values length mismatch")
        if not all(np.isfinite(self.values)):
            raise ValueError("boundary values must be finite")

    @classmethod
    def empty(cls) -> "BoundaryCondition":
        return cls((), ())

    @classmethod
    def from_map(cls, mapping: dict) -> "BoundaryCondition":
        items = sorted((tuple(s), float(v)) for s, v in mapping.items())
        return cls(tuple(s for s, _ in items), tuple(v for _, v in items))

    def value_map(self) -> dict:
        return dict(zip(self.sites, self.values))


@dataclass(frozen=True)
class ModelSpec:
    """Full model: box, per-site potentials, interaction, field, temperature."""

    box: LatticeBox
    potentials: tuple[SingleSitePotential, ...]
    M: InteractionMatrix
    b: np.ndarray
    beta: float = 1.0

    def __post_init__(self):
        if len(self.potentials) != len(self.box):
            raise ValueError("one potential per box site required")
        if self.M.box != self.box:
            raise ValueError("interaction matrix box does not match model box")
        b = np.asarray(self.b, dtype=float)
        if b.shape != (len(self.box),):
            raise ValueError("field length does not match box size")
        object.__setattr__(self, "b", b)
        if self.beta <= 0:
            raise ValueError("beta must be > 0")

    @property
    def n_sites(self) -> int:
        return len(self.box)

    @property
    def is_gaussian(self) -> bool:
        return all(
            p.convex_code in (POT_ZERO, POT_QUADRATIC) and p.bounded_code == POT_ZERO
            for p in self.potentials
        )

    def quadratic_diag(self) -> np.ndarray:
        """Per-site quadratic coefficient of the convex part (Gaussian models)."""
        out = np.zeros(self.n_sites)
        for k, p in enumerate(self.potentials):
            if p.convex_code == POT_QUADRATIC:
                out[k] = p.convex_param
        return out

    def fingerprint(self, include_field: bool = True) -> str:
        """Stable hash of the model content.

        Certificates use include_field=False: the certified constant never
        depends on the linear field b.
        """
        payload = {
            "dimension": self.box.dimension,
            "sites": list(self.box.sites),
            "potentials": [p.descriptor() for p in self.potentials],
            "diag": self.M.diag.tolist(),
            "offdiag": [[list(a), list(b), v] for (a, b), v in self.M.entries()],
            "delta": self.M.delta,
            "beta": self.beta,
        }
        if include_field:
            payload["b"] = self.b.tolist()
        raw = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(raw.encode()).hexdigest()[:16]


def uniform_spec(box, potential, M, b=0.0, beta=1.0) -> ModelSpec:
    """Convenience: same potential at every site, constant or per-site field."""
    b_arr = np.full(len(box), float(b)) if np.isscalar(b) else np.asarray(b, float)
    return ModelSpec(box, (potential,) * len(box), M, b_arr, beta)


def boundary_field(spec: ModelSpec, bc: BoundaryCondition) -> np.ndarray:
    """Per interior site: sum over halo of M_ih * x_h (tempered by assumption)."""
    vmap = bc.value_map()
    for s in bc.sites:
        if s in spec.box:
            raise ValueError(f"boundary site {s} lies inside the box")
    f = np.zeros(spec.n_sites)
    for i, halo_site, v in spec.M.halo_items():
        if halo_site in vmap:
            f[i] += v * vmap[halo_site]
    if not np.all(np.isfinite(f)):
        raise ValueError("boundary field is not finite (temperedness violated)")
    return f


def energy(spec: ModelSpec, x, bc: BoundaryCondition | None = None) -> float:
    """H at an interior configuration; halo-halo terms dropped (constant shift)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n_sites,):
        raise ValueError(f"configuration shape {x.shape} does not match box")
    bc = bc or BoundaryCondition.empty()
    psi = sum(float(p.value(x[k])) for k, p in enumerate(spec.potentials))
    M = spec.M.dense()
    halo = boundary_field(spec, bc)
    quad = 0.5 * float(x @ M @ x)
    return spec.beta * (psi + float(spec.b @ x) + quad + float(halo @ x))


def grad(spec: ModelSpec, x, bc: BoundaryCondition | None = None) -> np.ndarray:
    """dH/dx_i = beta * (psi_i'(x_i) + b_i + sum_j M_ij x_j + halo terms)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n_sites,):
        raise ValueError(f"configuration shape {x.shape} does not match box")
    bc = bc or BoundaryCondition.empty()
    psi1 = np.array([float(p.d1(x[k])) for k, p in enumerate(spec.potentials)])
    return spec.beta * (psi1 + spec.b + spec.M.dense() @ x + boundary_field(spec, bc))


def build_algebraic_interaction(
    box: LatticeBox,
    C: float,
    alpha: float,
    delta: float,
    sign: str = "ferromagnetic",
    halo_sites=(),
    max_range: float | None = None,
    sign_seed: int = 0,
) -> InteractionMatrix:
    """Off-diagonals +-C/|i-j|^(d+alpha); diagonal by the row-sum rule.

    M_ii = sum_{j != i} |M_ij| + delta, so strict diagonal dominance holds with
    margin exactly delta.  Signs: ferromagnetic (all negative), alternating
    (negative at odd l1-distance), random (seeded +-).
    """
    if C <= 0 or alpha <= 0 or delta <= 0:
        raise ValueError("C, alpha, delta must all be > 0")
    if sign not in ("ferromagnetic", "alternating", "random"):
        raise ValueError(f"unknown sign pattern {sign!r}")
    d = box.dimension
    rng = np.random.default_rng(sign_seed)
    halo_sites = [tuple(s) for s in halo_sites]
    all_sites = list(box.sites) + halo_sites
    off = {}
    for ai, a in enumerate(box.sites):
        for b in all_sites[ai + 1:]:
            r = distance(a, b)
            if max_range is not None and r > max_range:
                continue
            mag = C / r ** (d + alpha)
            if sign == "ferromagnetic":
                val = -mag
            elif sign == "alternating":
                l1 = sum(abs(p - q) for p, q in zip(a, b))
                val = -mag if l1 % 2 == 1 else mag
            else:
                val = mag if rng.random() < 0.5 else -mag
            off[(a, b)] = val
    M = InteractionMatrix(box, np.zeros(len(box)), off, delta)
    M.diag[:] = M.row_abs_offdiag() + delta
    return M


def absolute_model(spec: ModelSpec) -> ModelSpec:
    """Same model with attractive interaction: off-diagonals -> -|M_ij|."""
    return replace(spec, M=spec.M.with_absolute())


def conditioned_model(
    spec: ModelSpec, bc: BoundaryCondition, clamp: dict
) -> tuple[ModelSpec, BoundaryCondition]:
    """Reduced model where clamped spins join the boundary condition.

    Sampling the result is equivalent to sampling the original measure
    conditioned on the clamped values.
    """
    clamp = {tuple(s): float(v) for s, v in clamp.items()}
    for s in clamp:
        if s not in spec.box:
            raise ValueError(f"clamped site {s} not in box")
    if len(clamp) == spec.n_sites:
        raise ValueError("cannot clamp the whole box")
    keep = [s for s in spec.box.sites if s not in clamp]
    sub_box = LatticeBox(spec.box.dimension, keep)
    keep_ids = [spec.box.site_id(s) for s in keep]
    off = {
        k: v
        for k, v in spec.M.offdiag.items()
        if k[0] in sub_box or k[1] in sub_box
    }
    sub_M = InteractionMatrix(sub_box, spec.M.diag[keep_ids], off, spec.M.delta)
    sub_spec = ModelSpec(
        sub_box,
        tuple(spec.potentials[i] for i in keep_ids),
        sub_M,
        spec.b[keep_ids],
        spec.beta,
    )
    return sub_spec, BoundaryCondition.from_map(bc.value_map() | clamp)


def coarse_grained_coupling(
    M: InteractionMatrix, cov, S, integrated
) -> np.ndarray:
    """Pairwise coupling bounds after integrating out a set of spins.

    kappa_bar[i][j] = |M_ij| + sum_{k,l integrated} |M_ik| |M_jl| |cov_kl|,
    for i, j in the retained set S.  Diagonal returned as 0.
    """
    S = [tuple(s) for s in S]
    integrated = [tuple(s) for s in integrated]
    overlap = set(S) & set(integrated)
    if overlap:
        raise ValueError(f"retained and integrated sets overlap: {sorted(overlap)}")
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (len(integrated), len(integrated)):
        raise ValueError("covariance shape does not match integrated set")
    B = np.zeros((len(S), len(integrated)))
    for i, si in enumerate(S):
        for k, sk in enumerate(integrated):
            B[i, k] = abs(M.coupling(si, sk))
    kbar = B @ np.abs(cov) @ B.T
    kbar = 0.5 * (kbar + kbar.T)  # exact symmetry despite fp rounding
    for i, si in enumerate(S):
        for j in range(i + 1, len(S)):
            direct = abs(M.coupling(si, S[j]))
            kbar[i, j] += direct
            kbar[j, i] += direct
    np.fill_diagonal(kbar, 0.0)
    return kbar


@dataclass(frozen=True)
class ValidationReport:
    """Pass/fail summary of the model's structural assumptions."""

    symmetric: bool
    realized_margin: float
    dominance_ok: bool
    convexity_ok: bool
    bounds_ok: bool
    decay: object | None  # DecayFit of |M_ij| vs distance, when fittable
    messages: tuple[str, ...] = ()

    @property
    def all_ok(self) -> bool:
        return self.symmetric and self.dominance_ok and self.convexity_ok and self.bounds_ok

    def to_dict(self) -> dict:
        d = {
            "symmetric": self.symmetric,
            "realized_margin": self.realized_margin,
            "dominance_ok": self.dominance_ok,
            "convexity_ok": self.convexity_ok,
            "bounds_ok": self.bounds_ok,
            "all_ok": self.all_ok,
            "messages": list(self.messages),
        }
        if self.decay is not None:
            d["decay"] = {
                "C": self.decay.C,
                "exponent": self.decay.exponent,
                "max_residual": self.decay.max_residual,
            }
        return d


def validate_spec(spec: ModelSpec, grid=None) -> ValidationReport:
    """Check symmetry, dominance margin, grid convexity, declared psi_b bounds.

    Also fits the algebraic decay of |M_ij| against distance when at least
    three distinct distances are present.  Report-style: never raises on a
    failed check.
    """
    from .certify import fit_decay

    grid = DEFAULT_GRID if grid is None else np.asarray(grid, dtype=float)
    msgs = []

    margin = spec.M.realized_margin()
    dominance_ok = margin > 0
    if not dominance_ok:
        msgs.append(f"diagonal dominance fails: realized margin {margin:.3g} <= 0")

    convexity_ok = True
    bounds_ok = True
    seen = set()
    for p in spec.potentials:
        if id(p) in seen:
            continue
        seen.add(id(p))
        d2 = np.asarray(p.convex_d2(grid), dtype=float)
        if np.min(d2) < 0:
            convexity_ok = False
            msgs.append(f"convex part of {p.name} has negative curvature on grid")
        bv = np.max(np.abs(np.asarray(p.bounded(grid), dtype=float)))
        bd = np.max(np.abs(np.asarray(p.bounded_d1(grid), dtype=float)))
        if bv > p.sup_bounded + 1e-12:
            bounds_ok = False
            msgs.append(f"{p.name}: |psi_b| reaches {bv:.3g} > declared {p.sup_bounded:.3g}")
        if bd > p.sup_bounded_d1 + 1e-12:
            bounds_ok = False
            msgs.append(f"{p.name}: |psi_b'| reaches {bd:.3g} > declared {p.sup_bounded_d1:.3g}")

    pairs = [
        (distance(a, b), abs(v))
        for (a, b), v in spec.M.entries()
        if a in spec.box and b in spec.box and v != 0.0
    ]
    decay = None
    if len({round(r, 12) for r, _ in pairs}) >= 3:
        decay = fit_decay(pairs, spec.box.dimension)

    return ValidationReport(
        symmetric=True,  # structural: entries stored over unordered pairs
        realized_margin=margin,
        dominance_ok=dominance_ok,
        convexity_ok=convexity_ok,
        bounds_ok=bounds_ok,
        decay=decay,
        messages=tuple(msgs),
    )
