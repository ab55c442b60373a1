"""Structured-text model files.

Sections: [lattice], [potentials], [interaction], [field], [boundary].
The interaction is either generator parameters (algebraic) or explicit
sparse triplets.  Unknown sections or keys are rejected.  Parsing round-trips
through serialize_model exactly.

Coordinates are space-separated integers; triplet values use
"i_coords ; j_coords ; value".
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass

from .lattice import make_box
from .model import (
    BoundaryCondition,
    InteractionMatrix,
    build_algebraic_interaction,
    double_well_potential,
    quadratic_potential,
    quartic_potential,
    uniform_spec,
    zero_potential,
)


class ModelFileError(ValueError):
    pass


_KNOWN = {
    "lattice": {"dimension", "lower", "upper"},
    "potentials": {"convex", "bounded", "beta"},
    "interaction": {"type", "c", "alpha", "delta", "sign", "max_range",
                    "sign_seed"},
    "field": {"constant"},
    "boundary": None,  # free-form numbered keys halo<N>
}


@dataclass(frozen=True)
class ModelConfig:
    """Raw, serializable content of a model file."""

    dimension: int
    lower: tuple[int, ...]
    upper: tuple[int, ...]
    convex: str                       # "zero" | "quadratic <c>" | "quartic"
    bounded: str                      # "zero" | "gauss_bump <a>"
    beta: float
    interaction_type: str             # "algebraic" | "explicit"
    delta: float
    C: float | None = None
    alpha: float | None = None
    sign: str = "ferromagnetic"
    max_range: float | None = None
    sign_seed: int = 0
    entries: tuple = ()               # ((i_coords, j_coords, value), ...)
    field_constant: float = 0.0
    boundary: tuple = ()              # ((coords, value), ...)


def _coords(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split())
    except ValueError as e:
        raise ModelFileError(f"bad coordinates {text!r}") from e


def _triplet(text: str):
    parts = [p.strip() for p in text.split(";")]
    if len(parts) != 3:
        raise ModelFileError(f"expected 'i ; j ; value', got {text!r}")
    return _coords(parts[0]), _coords(parts[1]), float(parts[2])


def parse_model_text(text: str) -> ModelConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ModelFileError(f"config syntax error: {e}") from e

    for section in cp.sections():
        if section not in _KNOWN:
            raise ModelFileError(f"unknown section [{section}]")
        allowed = _KNOWN[section]
        for key in cp[section]:
            if allowed is None:
                if not key.startswith("halo"):
                    raise ModelFileError(f"unknown key {key!r} in [boundary]")
            elif key.lower() not in allowed and not (
                section == "interaction" and key.lower().startswith("entry")
            ):
                raise ModelFileError(f"unknown key {key!r} in [{section}]")
    for required in ("lattice", "potentials", "interaction"):
        if required not in cp:
            raise ModelFileError(f"missing section [{required}]")

    lat = cp["lattice"]
    pot = cp["potentials"]
    inter = cp["interaction"]
    try:
        dimension = int(lat["dimension"])
        lower = _coords(lat["lower"])
        upper = _coords(lat["upper"])
        beta = float(pot.get("beta", "1.0"))
        itype = inter["type"].strip()
        delta = float(inter["delta"])
    except KeyError as e:
        raise ModelFileError(f"missing required key {e}") from e

    convex = pot.get("convex", "zero").strip()
    bounded = pot.get("bounded", "zero").strip()

    kwargs = {}
    if itype == "algebraic":
        try:
            kwargs["C"] = float(inter["c"])
            kwargs["alpha"] = float(inter["alpha"])
        except KeyError as e:
            raise ModelFileError(f"algebraic interaction needs key {e}") from e
        kwargs["sign"] = inter.get("sign", "ferromagnetic").strip()
        if inter.get("max_range"):
            kwargs["max_range"] = float(inter["max_range"])
        kwargs["sign_seed"] = int(inter.get("sign_seed", "0"))
    elif itype == "explicit":
        entries = []
        for key in inter:
            if key.lower().startswith("entry"):
                entries.append(_triplet(inter[key]))
        if not entries:
            raise ModelFileError("explicit interaction has no entry* keys")
        kwargs["entries"] = tuple(entries)
    else:
        raise ModelFileError(f"unknown interaction type {itype!r}")

    field_constant = 0.0
    if "field" in cp:
        field_constant = float(cp["field"].get("constant", "0.0"))

    boundary = []
    if "boundary" in cp:
        for key in cp["boundary"]:
            parts = [p.strip() for p in cp["boundary"][key].split(";")]
            if len(parts) != 2:
                raise ModelFileError(f"expected 'coords ; value' for {key}")
            boundary.append((_coords(parts[0]), float(parts[1])))

    return ModelConfig(
        dimension=dimension, lower=lower, upper=upper,
        convex=convex, bounded=bounded, beta=beta,
        interaction_type=itype, delta=delta,
        field_constant=field_constant, boundary=tuple(boundary),
        **kwargs,
    )


def parse_model_file(path) -> ModelConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_model_text(fh.read())


def serialize_model(cfg: ModelConfig) -> str:
    out = io.StringIO()
    j = " ".join
    out.write("[lattice]\n")
    out.write(f"dimension = {cfg.dimension}\n")
    out.write(f"lower = {j(map(str, cfg.lower))}\n")
    out.write(f"upper = {j(map(str, cfg.upper))}\n\n")
    out.write("[potentials]\n")
    out.write(f"convex = {cfg.convex}\n")
    out.write(f"bounded = {cfg.bounded}\n")
    out.write(f"beta = {cfg.beta}\n\n")
    out.write("[interaction]\n")
    out.write(f"type = {cfg.interaction_type}\n")
    out.write(f"delta = {cfg.delta}\n")
    if cfg.interaction_type == "algebraic":
        out.write(f"c = {cfg.C}\n")
        out.write(f"alpha = {cfg.alpha}\n")
        out.write(f"sign = {cfg.sign}\n")
        if cfg.max_range is not None:
            out.write(f"max_range = {cfg.max_range}\n")
        out.write(f"sign_seed = {cfg.sign_seed}\n")
    else:
        for k, (a, b, v) in enumerate(cfg.entries):
            out.write(f"entry{k} = {j(map(str, a))} ; {j(map(str, b))} ; {v}\n")
    out.write("\n[field]\n")
    out.write(f"constant = {cfg.field_constant}\n")
    if cfg.boundary:
        out.write("\n[boundary]\n")
        for k, (coords, v) in enumerate(cfg.boundary):
            out.write(f"halo{k} = {j(map(str, coords))} ; {v}\n")
    return out.getvalue()


def _potential_from(cfg: ModelConfig):
    cparts = cfg.convex.split()
    bparts = cfg.bounded.split()
    ckind = cparts[0]
    bkind = bparts[0]
    if bkind == "zero":
        if ckind == "zero":
            return zero_potential()
        if ckind == "quadratic":
            return quadratic_potential(float(cparts[1]))
        if ckind == "quartic":
            return quartic_potential()
    elif bkind == "gauss_bump":
        a = float(bparts[1])
        if ckind == "quartic":
            return double_well_potential(a)
    raise ModelFileError(
        f"unsupported potential combination convex={cfg.convex!r} "
        f"bounded={cfg.bounded!r}"
    )


def build_model(cfg: ModelConfig, box=None):
    """Instantiate (ModelSpec, BoundaryCondition) from a parsed config.

    `box` overrides the lattice section (used by size scans); it must come
    from the same generator family, so only algebraic interactions allow it.
    """
    if box is None:
        box = make_box(cfg.dimension, cfg.lower, cfg.upper)
    elif cfg.interaction_type != "algebraic":
        raise ModelFileError("box override requires an algebraic interaction")

    halo_sites = [c for c, _ in cfg.boundary]
    if cfg.interaction_type == "algebraic":
        M = build_algebraic_interaction(
            box, cfg.C, cfg.alpha, cfg.delta,
            sign=cfg.sign, halo_sites=halo_sites,
            max_range=cfg.max_range, sign_seed=cfg.sign_seed,
        )
    else:
        import numpy as np

        diag = np.zeros(len(box))
        off = {}
        for a, b, v in cfg.entries:
            if a == b:
                diag[box.site_id(a)] = v
            else:
                key = (a, b) if a < b else (b, a)
                if key in off and off[key] != v:
                    raise ModelFileError(f"conflicting entries for pair {key}")
                off[key] = v
        M = InteractionMatrix(box, diag, off, cfg.delta)

    spec = uniform_spec(box, _potential_from(cfg), M,
                        b=cfg.field_constant, beta=cfg.beta)
    bc = BoundaryCondition.from_map(dict(cfg.boundary))
    return spec, bc
