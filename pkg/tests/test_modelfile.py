import numpy as np
import pytest

from gibbscert import (
    ModelFileError,
    build_model,
    make_box,
    parse_model_text,
    serialize_model,
)

ALGEBRAIC = """\
[lattice]
dimension = 1
lower = 0
upper = 7

[potentials]
convex = quartic
bounded = gauss_bump 0.4
beta = 1.5

[interaction]
type = algebraic
delta = 0.5
c = 0.3
alpha = 1.0
sign = ferromagnetic
sign_seed = 0

[field]
constant = 0.25

[boundary]
halo0 = -1 ; 0.7
"""

EXPLICIT = """\
[lattice]
dimension = 1
lower = 0
upper = 2

[potentials]
convex = quadratic 1.0
bounded = zero

[interaction]
type = explicit
delta = 0.6
entry0 = 0 ; 0 ; 1.0
entry1 = 1 ; 1 ; 1.0
entry2 = 2 ; 2 ; 1.0
entry3 = 0 ; 1 ; -0.2
entry4 = 1 ; 2 ; -0.2
"""


def test_parse_algebraic():
    cfg = parse_model_text(ALGEBRAIC)
    assert cfg.dimension == 1
    assert (cfg.lower, cfg.upper) == ((0,), (7,))
    assert cfg.convex == "quartic"
    assert cfg.bounded == "gauss_bump 0.4"
    assert cfg.beta == 1.5
    assert cfg.C == 0.3 and cfg.alpha == 1.0 and cfg.delta == 0.5
    assert cfg.field_constant == 0.25
    assert cfg.boundary == (((-1,), 0.7),)


def test_parse_explicit():
    cfg = parse_model_text(EXPLICIT)
    assert cfg.interaction_type == "explicit"
    assert len(cfg.entries) == 5
    assert ((0,), (1,), -0.2) in cfg.entries


def test_roundtrip_is_exact():
    for text in (ALGEBRAIC, EXPLICIT):
        cfg = parse_model_text(text)
        assert parse_model_text(serialize_model(cfg)) == cfg


def test_unknown_section_rejected():
    with pytest.raises(ModelFileError, match="unknown section"):
        parse_model_text(ALGEBRAIC + "\n[extras]\nfoo = 1\n")


def test_unknown_key_rejected():
    bad = ALGEBRAIC.replace("c = 0.3", "c = 0.3\nstrength = 9")
    with pytest.raises(ModelFileError, match="unknown key"):
        parse_model_text(bad)
    bad2 = ALGEBRAIC.replace("dimension = 1", "dimension = 1\nshape = donut")
    with pytest.raises(ModelFileError, match="unknown key"):
        parse_model_text(bad2)


def test_missing_required_section_rejected():
    with pytest.raises(ModelFileError, match="missing section"):
        parse_model_text("[lattice]\ndimension = 1\nlower = 0\nupper = 3\n")


def test_bad_syntax_rejected():
    with pytest.raises(ModelFileError, match="syntax"):
        parse_model_text("this is not an ini file")


def test_unknown_interaction_type_rejected():
    bad = ALGEBRAIC.replace("type = algebraic", "type = telepathic")
    with pytest.raises(ModelFileError, match="interaction type"):
        parse_model_text(bad)


def test_explicit_without_entries_rejected():
    bad = "\n".join(
        line for line in EXPLICIT.splitlines() if not line.startswith("entry")
    )
    with pytest.raises(ModelFileError, match="no entry"):
        parse_model_text(bad)


def test_bad_coordinates_rejected():
    bad = ALGEBRAIC.replace("halo0 = -1 ; 0.7", "halo0 = west ; 0.7")
    with pytest.raises(ModelFileError, match="coordinates"):
        parse_model_text(bad)


def test_build_model_algebraic():
    spec, bc = build_model(parse_model_text(ALGEBRAIC))
    assert spec.n_sites == 8
    assert spec.beta == 1.5
    assert np.allclose(spec.b, 0.25)
    assert spec.M.coupling((0,), (1,)) == pytest.approx(-0.3)
    assert spec.M.coupling((-1,), (0,)) == pytest.approx(-0.3)  # halo coupling
    assert bc.value_map() == {(-1,): 0.7}
    assert spec.potentials[0].name == "double_well(0.4)"


def test_build_model_explicit():
    spec, bc = build_model(parse_model_text(EXPLICIT))
    assert spec.M.coupling((0,), (1,)) == -0.2
    assert spec.M.coupling((0,), (2,)) == 0.0
    assert np.allclose(spec.M.diag, 1.0)
    assert bc.sites == ()
    assert spec.is_gaussian


def test_build_model_box_override_for_size_scans():
    cfg = parse_model_text(ALGEBRAIC)
    spec, _ = build_model(cfg, box=make_box(1, (0,), (15,)))
    assert spec.n_sites == 16
    with pytest.raises(ModelFileError, match="algebraic"):
        build_model(parse_model_text(EXPLICIT), box=make_box(1, (0,), (5,)))


def test_conflicting_explicit_entries_rejected():
    bad = EXPLICIT + "entry5 = 1 ; 0 ; -0.9\n"
    with pytest.raises(ModelFileError, match="conflicting"):
        build_model(parse_model_text(bad))


def test_unsupported_potential_combination_rejected():
    bad = ALGEBRAIC.replace("convex = quartic", "convex = zero")
    with pytest.raises(ModelFileError, match="combination"):
        build_model(parse_model_text(bad))
