"""Batch front-end: parse model files, run certificates/samplers/experiments.

Exit codes: 0 success/pass, 1 inequality-check fail, 2 usage or parse error,
3 numeric failure (non-positive-definite matrix, sampling overflow).  All
artifacts land under --out together with a manifest; outputs are byte-stable
for a fixed (model, seed), independent of --threads.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .certify import (
    CertificationFailure,
    NotPositiveDefiniteError,
    certify_model,
    inverse_matrix,
    model_matrix,
)
from .experiments import (
    boundary_sensitivity,
    coarse_grained_decay,
    compare_attractive_domination,
    compare_subset_covariances,
    variance_uniformity,
)
from .lattice import distance, make_box, sublattice
from .model import validate_spec
from .modelfile import ModelFileError, build_model, parse_model_file
from .oracle import RefinementError
from .sampler import (
    SamplerConfig,
    SamplingError,
    estimate_moments,
    sample_gibbs,
)

DEFAULT_SEED = 12345  # fixed, never time-based: runs are reproducible by default
SCHEMA_VERSION = 1


def _write_json(path: Path, payload: dict) -> None:
    payload = {"schema": SCHEMA_VERSION, **payload}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _manifest(outdir: Path, args, fingerprint: str) -> None:
    _write_json(outdir / "manifest.json", {
        "command": args.command,
        "model": str(args.model),
        "fingerprint": fingerprint,
        "seed": args.seed,
        "threads": args.threads,
        "version": __version__,
    })


def emit_report(report, outdir: Path) -> None:
    """Write report.json plus one CSV per check table; filenames fixed."""
    outdir.mkdir(parents=True, exist_ok=True)
    _write_json(outdir / "report.json", report.to_dict())
    if report.checks:
        _write_csv(
            outdir / "checks.csv",
            ["quantity", "lhs", "rhs", "se", "verdict"],
            [[c.quantity, repr(c.lhs), repr(c.rhs), repr(c.se), c.verdict]
             for c in report.checks],
        )


def _sampler_config(args) -> SamplerConfig:
    return SamplerConfig(
        n_samples=args.n_samples,
        burn_in=args.burn_in,
        thinning=args.thinning,
        proposal_sd=args.proposal_sd,
        seed=args.seed,
        n_chains=args.chains,
        threads=args.threads,
    )


def _parse_pairs(text: str):
    """Pairs of sites: 'i ; j' entries separated by commas, coords by spaces."""
    pairs = []
    for chunk in text.split(","):
        sides = [p.strip() for p in chunk.split(";")]
        if len(sides) != 2:
            raise ModelFileError(f"bad pair {chunk!r}; expected 'i ; j'")
        pairs.append((
            tuple(int(t) for t in sides[0].split()),
            tuple(int(t) for t in sides[1].split()),
        ))
    return pairs


def _all_pairs(box):
    return [
        (box.sites[i], box.sites[j])
        for i in range(len(box))
        for j in range(i + 1, len(box))
    ]


def _int_list(text: str):
    return [int(t) for t in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gibbscert",
        description="Lattice spin systems: certificates, sampling, experiments",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, sampler=False):
        sp.add_argument("--model", required=True, help="model file path")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--threads", type=int, default=1)
        if sampler:
            sp.add_argument("--n-samples", type=int, default=10_000)
            sp.add_argument("--burn-in", type=int, default=None)
            sp.add_argument("--thinning", type=int, default=1)
            sp.add_argument("--proposal-sd", type=float, default=1.0)
            sp.add_argument("--chains", type=int, default=1)

    sp = sub.add_parser("validate", help="check the model's structural assumptions")
    common(sp)

    sp = sub.add_parser("certify", help="compute an LSI/PI certificate")
    common(sp)
    sp.add_argument("--method", choices=["eigen", "gershgorin"], default="eigen")
    sp.add_argument("--kind", choices=["LSI", "PI"], default="LSI")
    sp.add_argument("--decay", action="store_true",
                    help="also fit the decay of the certificate matrix inverse")

    sp = sub.add_parser("sample", help="sample the Gibbs measure, estimate moments")
    common(sp, sampler=True)
    sp.add_argument("--csv", action="store_true", help="also dump raw samples")

    sp = sub.add_parser("covariance", help="covariance bounds (A^-1) and their decay")
    common(sp)

    sp = sub.add_parser("compare-subset", help="subset covariance comparison")
    common(sp, sampler=True)
    sp.add_argument("--sub-lower", required=True, help="sub-box lower corner")
    sp.add_argument("--sub-upper", required=True, help="sub-box upper corner")
    sp.add_argument("--pairs", default=None)

    sp = sub.add_parser("compare-abs", help="attractive domination comparison")
    common(sp, sampler=True)
    sp.add_argument("--pairs", default=None)

    sp = sub.add_parser("variance-scan", help="variance uniformity across sizes")
    common(sp, sampler=True)
    sp.add_argument("--sizes", required=True, help="comma-separated box sizes")

    sp = sub.add_parser("boundary", help="boundary sensitivity decay")
    common(sp, sampler=True)
    sp.add_argument("--site", default=None, help="observable site (default origin)")
    sp.add_argument("--bc1", type=float, default=1.0)
    sp.add_argument("--bc2", type=float, default=-1.0)
    sp.add_argument("--radii", required=True, help="comma-separated radii")

    sp = sub.add_parser("coarse-grain", help="coarse-grained coupling decay")
    common(sp, sampler=True)
    sp.add_argument("--K", type=int, required=True, help="retain the K-sublattice")
    return p


def run(argv) -> int:
    args = build_parser().parse_args(argv)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = parse_model_file(args.model)
    spec, bc = build_model(cfg)
    _manifest(outdir, args, spec.fingerprint())

    if args.command == "validate":
        report = validate_spec(spec)
        _write_json(outdir / "report.json", report.to_dict())
        print(f"validation {'passed' if report.all_ok else 'FAILED'}; "
              f"realized margin = {report.realized_margin:.6g}")
        return 0 if report.all_ok else 1

    if args.command == "certify":
        result = certify_model(spec, method=args.method, kind=args.kind,
                               include_decay=args.decay)
        if isinstance(result, CertificationFailure):
            print(f"certification failed: {result.reason} "
                  f"(value {result.value:.6g})", file=sys.stderr)
            return 3
        _write_json(outdir / "certificate.json", result.to_dict())
        print(f"{result.kind} constant rho = {result.rho:.9g} ({result.method})")
        return 0

    if args.command == "sample":
        run_ = sample_gibbs(spec, bc, _sampler_config(args))
        est = estimate_moments(run_)
        _write_json(outdir / "moments.json", est.to_dict())
        if args.csv:
            _write_csv(
                outdir / "samples.csv",
                [str(i) for i in range(spec.n_sites)],
                [[repr(v) for v in row] for row in run_.samples],
            )
        print(f"acceptance {run_.acceptance:.3f}; "
              f"mean[0] = {est.mean[0]:.6g} +- {est.se_mean[0]:.2g}")
        return 0

    if args.command == "covariance":
        A = model_matrix(spec)
        inv = inverse_matrix(A)
        center = spec.n_sites // 2
        cs = spec.box.site(center)
        from .certify import fit_decay

        pairs = [
            (distance(cs, spec.box.site(j)), inv[center, j])
            for j in range(spec.n_sites) if j != center
        ]
        fit = fit_decay(pairs, spec.box.dimension)
        rows = [
            [repr(r), repr(v), repr(fit.C * r ** (-fit.exponent))]
            for r, v in sorted(pairs)
        ]
        _write_csv(outdir / "decay.csv", ["distance", "value", "bound"], rows)
        _write_json(outdir / "report.json",
                    {"decay": fit.to_dict(), "center_site": list(cs)})
        print(f"(A^-1) decay exponent = {fit.exponent:.6g}")
        return 0

    # Experiment commands below produce ExperimentReports.
    scfg = _sampler_config(args)
    if args.command == "compare-subset":
        sub = make_box(spec.box.dimension,
                       tuple(int(t) for t in args.sub_lower.split()),
                       tuple(int(t) for t in args.sub_upper.split()))
        pairs = _parse_pairs(args.pairs) if args.pairs else _all_pairs(sub)
        report = compare_subset_covariances(spec, sub, pairs, scfg, bc)
    elif args.command == "compare-abs":
        pairs = _parse_pairs(args.pairs) if args.pairs else _all_pairs(spec.box)
        report = compare_attractive_domination(spec, pairs, scfg, bc)
    elif args.command == "variance-scan":
        sizes = _int_list(args.sizes)
        d = spec.box.dimension
        specs = []
        for s in sizes:
            box = make_box(d, (0,) * d, (s - 1,) * d)
            spec_s, _ = build_model(cfg, box=box)
            specs.append(spec_s)
        report = variance_uniformity(specs, scfg)
    elif args.command == "boundary":
        site = (tuple(int(t) for t in args.site.split())
                if args.site else (0,) * spec.box.dimension)
        report = boundary_sensitivity(spec, site, args.bc1, args.bc2,
                                      _int_list(args.radii), scfg)
    elif args.command == "coarse-grain":
        S = sublattice(spec.box, args.K)
        report = coarse_grained_decay(spec, S, scfg)
    else:  # pragma: no cover
        raise AssertionError(args.command)

    emit_report(report, outdir)
    verdicts = [c.verdict for c in report.checks]
    print(f"{report.name}: {verdicts.count('pass')} pass, "
          f"{verdicts.count('inconclusive')} inconclusive, "
          f"{verdicts.count('fail')} fail")
    return 0 if report.ok else 1


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        return run(argv)
    except ModelFileError as e:
        print(f"model file error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"cannot read model file: {e}", file=sys.stderr)
        return 2
    except (NotPositiveDefiniteError, SamplingError, RefinementError,
            OverflowError, FloatingPointError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
