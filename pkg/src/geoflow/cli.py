"""Command-line front end.

Exit status: 0 success, 1 computation failure, 2 an identity or bound check
failed, 3 unreadable input or invalid options.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import asymptotics, galerkin, jacobi, model, spectral
from .settings import DEFAULTS, Settings

EXIT_OK, EXIT_FAILURE, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2, 3
COMMANDS = ("validate", "poincare", "profile", "iterate", "asymptotics", "selftest")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _round(x):
    """Make a document JSON-ready with floats at 15 significant digits."""
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return str(x)
        r = float(f"{x:.15g}")
        return 0.0 if r == 0 else r
    if isinstance(x, (complex, np.complexfloating)):
        return [_round(x.real), _round(x.imag)]
    return x


def dumps(doc) -> str:
    return json.dumps(_round(doc), sort_keys=True, indent=2) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.15g}"
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="geoflow", description="Spectral flow of closed semi-Riemannian geodesics.")
    p.add_argument("command", choices=COMMANDS)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", help="preset name, e.g. 'hyp-L(4)'")
    src.add_argument("--input", help="JSON system document")
    p.add_argument("--out", help="directory for output files (default: print to stdout)")
    p.add_argument("--format", choices=("json", "csv", "both"), default="json")
    p.add_argument("--rtol", type=float)
    p.add_argument("--K", type=int)
    p.add_argument("--P", type=int)
    p.add_argument("--Q", type=int)
    p.add_argument("--N-max", dest="N_max", type=int)
    p.add_argument("--grid-per-arc", dest="grid_per_arc", type=int)
    p.add_argument("--seed", type=int, default=0, help="seed for random systems in selftest")
    p.add_argument("--branches", action="store_true",
                   help="profile: also dump eigenvalue branches of the Galerkin path at z=1")
    return p


def _settings(args) -> Settings:
    s = DEFAULTS.with_overrides(rtol=args.rtol, K=args.K, P=args.P, Q=args.Q,
                                N_max=args.N_max, grid_per_arc=args.grid_per_arc)
    try:
        s.check()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return s


def _load(args, validate: bool = True) -> model.GeodesicSystem:
    if args.preset:
        try:
            return model.preset(args.preset)
        except ValueError as exc:
            raise model.InvalidSystem(str(exc)) from None
    if not args.input:
        raise UsageError("one of --preset or --input is required")
    try:
        text = Path(args.input).read_text()
    except OSError as exc:
        raise model.InvalidSystem(f"cannot read {args.input}: {exc}") from None
    return model.load_system(text, tol=model.LOAD_TOL if validate else math.inf)


class Output:
    """Collects artifacts; writes them to ``--out`` or prints them."""

    def __init__(self, args, stream=None):
        self.dir = Path(args.out) if args.out else None
        self.format = args.format
        self.stream = stream or sys.stdout
        self.lines: list[str] = []

    def say(self, line: str = "") -> None:
        self.lines.append(line)

    def emit(self, name: str, doc: dict, tables: dict[str, str]) -> None:
        files = {}
        if self.format in ("json", "both"):
            files[f"{name}.json"] = dumps(doc)
        if self.format in ("csv", "both"):
            files.update(tables)
        if self.dir is None:
            for text in files.values():
                self.stream.write(text)
            return
        self.dir.mkdir(parents=True, exist_ok=True)
        for fname, text in files.items():
            (self.dir / fname).write_text(text)
        for line in self.lines:
            print(line, file=self.stream)


def cmd_validate(sys_, settings, out, args):
    report = model.validate_system(sys_)
    doc = {"label": sys_.label, "n": sys_.n, "epsilon": list(sys_.metric.epsilon)}
    doc.update(report.as_dict())
    rows = [(c.name, c.violation, c.tol, c.passed) for c in report.checks]
    for r in rows:
        out.say(f"{r[0]:<36} {r[1]:.3e}  {'ok' if r[3] else 'FAIL'}")
    out.emit("validate", doc, {"validate.csv": _csv(["check", "violation", "tol", "passed"], rows)})
    return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_poincare(sys_, settings, out, args):
    mono = spectral.monodromy(sys_, settings)
    n0, nper, both = jacobi.nullities(mono)
    doc = mono.to_dict()
    doc.update(n_0=n0, n_per=nper, dim_Jper_cap_J0=both,
               i_conc=jacobi.concavity_index(mono), n_minus_g=sys_.n_minus_g)
    rows = [(e.real, e.imag, abs(e), np.angle(e) % (2 * np.pi)) for e in mono.eigenvalues]
    out.say(f"n_0={n0} n_per={nper} dim(Jper cap J0)={both} i_conc={doc['i_conc']}")
    for r in rows:
        out.say(f"  {r[0]: .10f} {r[1]:+.10f}i  |.|={r[2]:.10f}")
    out.emit("poincare", doc, {"poincare.csv": _csv(["re", "im", "modulus", "angle"], rows)})
    return EXIT_OK


def cmd_profile(sys_, settings, out, args):
    pack = spectral.index_pack(sys_, settings)
    prof = spectral.lambda_profile(sys_, settings)
    doc = {"index_pack": pack.to_dict(), "profile": prof.to_dict()}
    out.say(f"lambda(1) = {prof.value_at_1}, maslov = {pack.maslov}, lambda_o = {pack.lambda_o}")
    for a in prof.arcs:
        out.say(f"  arc ({a.theta_lo:.6f}, {a.theta_hi:.6f}): lambda={a.value} d={a.d}")
    for j in prof.jumps:
        out.say(f"  theta={j.theta:.6f}: left={j.left} right={j.right} point={j.point} "
                f"bound={j.bound}")
    tables = {
        "profile.csv": _csv(["theta", "lambda"], prof.plot_points()),
        "profile_arcs.csv": _csv(["theta_lo", "theta_hi", "lambda", "d_j", "kernel_dim"],
                                 [(a.theta_lo, a.theta_hi, a.value, a.d, a.kernel_dim)
                                  for a in prof.arcs]),
    }
    if args.branches:
        flow = galerkin.stabilized_spectral_flow(sys_, "twisted", 1.0, settings=settings)
        doc["galerkin_z1"] = flow.to_dict()
        tables["branches.csv"] = _csv(["t", "branch_id", "eigenvalue"],
                                      flow.result.branch_rows(window=1.0))
    out.emit("profile", doc, tables)
    return EXIT_OK if pack.identity_holds and not prof.violations else EXIT_VIOLATION


def cmd_iterate(sys_, settings, out, args):
    rows = []
    agree = True
    for N in range(1, settings.N_max + 1):
        vals = spectral.sf_iterate_all(sys_, N, settings)
        ok = len(set(vals.values())) == 1
        agree &= ok
        rows.append((N, vals["fourier"], vals["direct"], vals["reduction"]))
        out.say(f"N={N:3d}  fourier={vals['fourier']:5d}  direct={vals['direct']:5d}  "
                f"reduction={vals['reduction']:5d}{'' if ok else '  DISAGREE'}")
    hyp = [asymptotics.hyperbolic_sf(sys_, N, settings) for N in range(1, settings.N_max + 1)]
    doc = {
        "label": sys_.label,
        "rows": [dict(zip(("N", "sf_fourier", "sf_direct", "sf_reduction"), r)) for r in rows],
        "hyperbolic_sf": hyp if hyp[0] is not None else None,
        "methods_agree": agree,
    }
    if hyp[0] is not None:
        agree &= all(h == r[1] for h, r in zip(hyp, rows))
    out.emit("iterate", doc, {"iterate.csv": _csv(
        ["N", "sf_fourier", "sf_direct", "sf_reduction"], rows)})
    return EXIT_OK if agree else EXIT_VIOLATION


def cmd_asymptotics(sys_, settings, out, args):
    rep = asymptotics.growth_report(sys_, settings.N_max, settings)
    out.say(f"K = {rep.K_gamma}, L = {rep.L_gamma}, C = {rep.C_gamma}, alpha = {rep.alpha}, "
            f"{rep.classification}")
    for c in rep.violations:
        out.say(f"  VIOLATION {c.name} N={c.N} P={c.P}: {c.value} not in [{c.lo}, {c.hi}]")
    out.emit("asymptotics", rep.to_dict(), {"asymptotics.csv": rep.to_csv()})
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def selftest_checks(sys_, settings, full: bool = True) -> dict[str, bool]:
    """Invariant checks for one system; each entry maps a check name to pass/fail."""
    res = {}
    res["valid"] = model.validate_system(sys_).passed
    pack = spectral.index_pack(sys_, settings)
    res["index identity"] = pack.identity_holds
    if full:
        prof = spectral.lambda_profile(sys_, settings)
        res["profile"] = not prof.violations
        res["iterates agree"] = all(
            len(set(spectral.sf_iterate_all(sys_, N, settings).values())) == 1
            for N in range(1, 9))
        res["growth bounds"] = asymptotics.growth_report(sys_, settings.N_max, settings).passed
    return res


def cmd_selftest(settings, seed, out, count: int = 5):
    table = {}
    for name in model.CANONICAL_PRESETS:
        table[name] = selftest_checks(model.preset(name), settings)
    rng = np.random.default_rng(seed)
    for i in range(count):
        s = model.random_system(rng, 1 + i % 3, label=f"random-{seed}-{i}")
        table[s.label] = selftest_checks(s, settings, full=False)
    names = sorted({k for row in table.values() for k in row},
                   key=lambda k: list(next(iter(table.values()))).index(k))
    out.say(f"{'system':<16}" + "".join(f"{n:>17}" for n in names))
    for label, row in table.items():
        cells = "".join(f"{('pass' if row[n] else 'FAIL') if n in row else '-':>17}"
                        for n in names)
        out.say(f"{label:<16}{cells}")
    ok = all(all(r.values()) for r in table.values())
    doc = {"seed": seed, "results": table, "passed": ok}
    rows = [(label, n, row[n]) for label, row in table.items() for n in row]
    out.emit("selftest", doc, {"selftest.csv": _csv(["system", "check", "passed"], rows)})
    return EXIT_OK if ok else EXIT_VIOLATION


def run(argv=None, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        settings = _settings(args)
        out = Output(args, stream)
        if args.command == "selftest":
            code = cmd_selftest(settings, args.seed, out)
        else:
            sys_ = _load(args, validate=args.command != "validate")
            handler = {"validate": cmd_validate, "poincare": cmd_poincare,
                       "profile": cmd_profile, "iterate": cmd_iterate,
                       "asymptotics": cmd_asymptotics}[args.command]
            code = handler(sys_, settings, out, args)
    except (UsageError, model.InvalidSystem) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (spectral.ProfileError, spectral.MethodDisagreement,
            asymptotics.CrossCheckError) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except galerkin.NotStabilized as exc:
        print(f"computation failed: {exc} (last values {exc.values})", file=sys.stderr)
        return EXIT_FAILURE
    except (RuntimeError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if code != EXIT_OK:
        print("one or more checks failed", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
