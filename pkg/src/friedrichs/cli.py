"""Command-line surface: one binary, subcommand per analysis, CSV out.

Every CSV starts with a comment line recording a digest of the run
configuration, then a header row.  Matrix-valued columns follow the
convention ReU_m_n / ImU_m_n (row-major, 1-based).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from .errors import (
    BorderlineClassification,
    BudgetExceeded,
    ClassificationMismatch,
    FriedrichsError,
    InvalidInput,
)
from .model import load_scenario, validate_model
from .selfenergy import SelfEnergyEvaluator
from .resolvent import ResolventEvaluator
from .classify import classify_zero_energy, critical_couplings
from .asymptotics import build_asymptote_model
from .evolve import reduced_evolution, survival_probability
from .oracle import DiscretizedHamiltonian, convergence_study, oracle_evolution


def _digest(args) -> str:
    payload = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    blob = json.dumps(payload, default=str, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _emit(args, header, rows):
    lines = ["# config %s" % _digest(args), ",".join(header)]
    for row in rows:
        lines.append(",".join(
            x if isinstance(x, str) else "%.17g" % x for x in row
        ))
    text = "\n".join(lines) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _matrix_header(prefix, n):
    names = []
    for m in range(1, n + 1):
        for k in range(1, n + 1):
            names += ["Re%s_%d_%d" % (prefix, m, k), "Im%s_%d_%d" % (prefix, m, k)]
    return names


def _matrix_row(mat):
    out = []
    for x in np.asarray(mat).ravel():
        out += [float(np.real(x)), float(np.imag(x))]
    return out


def _load(args):
    return load_scenario(args.scenario)


def _times(args):
    if args.tpoints < 1:
        raise InvalidInput("tpoints must be positive")
    if args.log:
        if args.tmin <= 0.0:
            raise InvalidInput("log-spaced times need tmin > 0")
        return np.geomspace(args.tmin, args.tmax, args.tpoints)
    return np.linspace(args.tmin, args.tmax, args.tpoints)


def _wgrid(args):
    if args.wpoints < 1:
        raise InvalidInput("wpoints must be positive")
    if args.log:
        if args.wmin <= 0.0:
            raise InvalidInput("log-spaced grid needs wmin > 0")
        return np.geomspace(args.wmin, args.wmax, args.wpoints)
    return np.linspace(args.wmin, args.wmax, args.wpoints)


def _psi(args, n):
    if args.psi is None:
        return None
    vals = [complex(tok) for tok in args.psi.split(",")]
    if len(vals) != n:
        raise InvalidInput("psi needs %d components" % n)
    return np.asarray(vals)


def _read_csv(path):
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append([float(x) for x in line.split(",")])
    if header is None or not rows:
        raise InvalidInput("no data in %s" % path)
    return header, np.asarray(rows)


def cmd_validate(args):
    model = _load(args)
    report = validate_model(model)
    for name, ok in report.checks:
        print("%-40s %s" % (name, "ok" if ok else "FAIL"))
    for issue in report.issues:
        print("issue: %s" % issue)
    if not report.ok:
        return 2
    print("scenario valid: %d levels, coupling %g" % (model.nlevels, model.coupling))
    return 0


def cmd_classify(args):
    model = _load(args)
    ev = ResolventEvaluator.from_model(model)
    cls = classify_zero_energy(ev)
    print("kind: %s" % cls.kind.value)
    print("dim kernel K(0): %d  (resonance %d, eigenvector %d)"
          % (cls.dim_kernel, cls.dim_m1, cls.dim_m2))
    print("K(0) eigenvalues: %s" % np.array2string(cls.eigenvalues, precision=6))
    print("kernel threshold: %.3e" % cls.threshold)
    return 0


def cmd_critical(args):
    model = _load(args)
    ev = ResolventEvaluator.from_model(model)
    roots = critical_couplings(ev, args.level)
    if not roots:
        print("no zero crossing of eigenvalue %d in the default bracket" % args.level)
        return 0
    rows = []
    for r in roots:
        print("level %d: lambda*^2 = %.15g  (lambda* = %.15g, kappa = %.3e)"
              % (r.level, r.lam2, r.lam, r.kappa))
        rows.append([r.level, r.lam2, r.lam, r.kappa])
    if args.out:
        _emit(args, ["level", "lam2", "lam", "kappa"], rows)
    return 0


def cmd_self_energy(args):
    model = _load(args)
    se = SelfEnergyEvaluator.build(model)
    grid = _wgrid(args)
    n = model.nlevels
    rows = []
    for w in grid:
        d, g = se.boundary(float(w))
        rows.append([float(w)] + _matrix_row(d) + _matrix_row(g))
    _emit(args, ["w"] + _matrix_header("D", n) + _matrix_header("G", n), rows)
    return 0


def cmd_spectral_density(args):
    model = _load(args)
    ev = ResolventEvaluator.from_model(model)
    grid = _wgrid(args)
    rows = [[float(w)] + _matrix_row(ev.density(float(w))) for w in grid]
    _emit(args, ["w"] + _matrix_header("Rho", model.nlevels), rows)
    return 0


def cmd_resonances(args):
    model = _load(args)
    ev = ResolventEvaluator.from_model(model)
    lo = args.re_min if args.re_min is not None else 0.2 * float(model.levels[0])
    hi = args.re_max if args.re_max is not None else 2.0 * float(model.levels[-1])
    poles = ev.resonance_poles((lo, hi), (args.im_min, args.im_max))
    rows = [[float(np.real(z)), float(np.imag(z))] for z in poles]
    for z in poles:
        print("resonance pole: %.12g %+.12gj" % (np.real(z), np.imag(z)))
    _emit(args, ["Re_z", "Im_z"], rows)
    return 0


def cmd_evolve(args):
    model = _load(args)
    ev = ResolventEvaluator.from_model(model)
    times = _times(args)
    result = reduced_evolution(ev, times, tolerance=args.tol, jobs=args.jobs)
    psi = _psi(args, model.nlevels)
    header = ["t"] + _matrix_header("U", model.nlevels)
    surv = None
    if psi is not None:
        surv = survival_probability(result, psi)
        header.append("survival")
    rows = []
    for i, t in enumerate(times):
        row = [float(t)] + _matrix_row(result.matrices[i])
        if surv is not None:
            row.append(float(surv[i]))
        rows.append(row)
    _emit(args, header, rows)
    return 0


def cmd_asymptote(args):
    model = _load(args)
    ev = ResolventEvaluator.from_model(model)
    cls = classify_zero_energy(ev)
    am = build_asymptote_model(ev, cls)
    times = _times(args)
    rows = [[float(t)] + _matrix_row(am.value(float(t))) for t in times]
    _emit(args, ["t"] + _matrix_header("A", model.nlevels), rows)
    return 0


def cmd_compare(args):
    eh, erows = _read_csv(args.evolve_csv)
    ah, arows = _read_csv(args.asymptote_csv)
    if abs(erows.shape[0] - arows.shape[0]) > 0 or not np.allclose(
            erows[:, 0], arows[:, 0], rtol=1e-12):
        raise InvalidInput("time grids of the two CSVs do not match")
    # pair ReU_m_n/ImU_m_n with ReA_m_n/ImA_m_n
    pairs = []
    for i, name in enumerate(eh):
        if name.startswith("ReU_"):
            suffix = name[4:]
            j = eh.index("ImU_" + suffix)
            try:
                ia = ah.index("ReA_" + suffix)
                ja = ah.index("ImA_" + suffix)
            except ValueError:
                continue
            pairs.append((suffix, i, j, ia, ja))
    if not pairs:
        raise InvalidInput("no matching matrix columns between the CSVs")
    header = ["t"] + ["ratio_%s" % s for s, *_ in pairs]
    rows = []
    for r, a in zip(erows, arows):
        row = [float(r[0])]
        for _, i, j, ia, ja in pairs:
            num = abs(complex(r[i], r[j]))
            den = abs(complex(a[ia], a[ja]))
            row.append(num / den if den else float("nan"))
        rows.append(row)
    _emit(args, header, rows)
    return 0


def cmd_oracle_compare(args):
    model = _load(args)
    ev = ResolventEvaluator.from_model(model)
    times = _times(args)
    psi = _psi(args, model.nlevels)
    if psi is None:
        psi = np.zeros(model.nlevels, dtype=complex)
        psi[0] = 1.0
    result = reduced_evolution(ev, times, tolerance=args.tol, jobs=args.jobs)
    amps = np.einsum("i,tij,j->t", np.conj(psi), result.matrices, psi)
    cells = [int(x) for x in args.cells.split(",")]
    dhs = [DiscretizedHamiltonian(model, m) for m in cells]
    study = convergence_study(dhs, lambda dh: oracle_evolution(dh, psi, times))
    oracle_amps = np.asarray(study.values[-1])
    dev = np.abs(amps - oracle_amps)
    rows = [
        [float(t), float(np.real(amps[i])), float(np.imag(amps[i])),
         float(np.real(oracle_amps[i])), float(np.imag(oracle_amps[i])),
         float(dev[i])]
        for i, t in enumerate(times)
    ]
    _emit(args, ["t", "ReU", "ImU", "ReU_oracle", "ImU_oracle", "absdiff"], rows)
    print("max |analytic - oracle| = %.3e" % dev.max())
    print("grid convergence orders: %s" % np.array2string(study.orders, precision=3))
    return 0


def _build_parser():
    top = argparse.ArgumentParser(prog="friedrichs",
                                  description="N-level Friedrichs model laboratory")
    sub = top.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario JSON file")
    common.add_argument("--out", default=None, help="CSV output path (default stdout)")
    common.add_argument("--tol", type=float, default=1e-8, help="quadrature tolerance")

    tgrid = argparse.ArgumentParser(add_help=False)
    tgrid.add_argument("--tmin", type=float, default=0.0)
    tgrid.add_argument("--tmax", type=float, default=50.0)
    tgrid.add_argument("--tpoints", type=int, default=60)
    tgrid.add_argument("--log", action="store_true", help="log-spaced time grid")
    tgrid.add_argument("--jobs", type=int, default=1)

    wgrid = argparse.ArgumentParser(add_help=False)
    wgrid.add_argument("--wmin", type=float, default=1e-3)
    wgrid.add_argument("--wmax", type=float, default=10.0)
    wgrid.add_argument("--wpoints", type=int, default=100)
    wgrid.add_argument("--log", action="store_true", help="log-spaced energy grid")

    p = sub.add_parser("validate", parents=[common])
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("classify", parents=[common])
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("critical-coupling", parents=[common])
    p.add_argument("--level", type=int, default=1)
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("self-energy", parents=[common, wgrid])
    p.set_defaults(func=cmd_self_energy)

    p = sub.add_parser("spectral-density", parents=[common, wgrid])
    p.set_defaults(func=cmd_spectral_density)

    p = sub.add_parser("resonances", parents=[common])
    p.add_argument("--re-min", type=float, default=None)
    p.add_argument("--re-max", type=float, default=None)
    p.add_argument("--im-min", type=float, default=-1.0)
    p.add_argument("--im-max", type=float, default=-1e-3)
    p.set_defaults(func=cmd_resonances)

    p = sub.add_parser("evolve", parents=[common, tgrid])
    p.add_argument("--psi", default=None, help="comma-separated level amplitudes")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("asymptote", parents=[common, tgrid])
    p.set_defaults(func=cmd_asymptote)

    p = sub.add_parser("compare")
    p.add_argument("--evolve-csv", required=True)
    p.add_argument("--asymptote-csv", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle-compare", parents=[common, tgrid])
    p.add_argument("--psi", default=None)
    p.add_argument("--cells", default="1000,2000,4000",
                   help="comma-separated refinement sizes")
    p.set_defaults(func=cmd_oracle_compare)
    return top


def main(argv=None) -> int:
    # fixed seed for anything randomized, overridable for reproducibility sweeps
    os.environ.setdefault("FRIEDRICHS_SEED", "0")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 4
    except (ClassificationMismatch, BorderlineClassification) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except InvalidInput as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except FriedrichsError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
