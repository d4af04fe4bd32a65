"""Config-driven batch runner and command-line interface.

Subcommands: ``verify-space`` (sampled geometry checks), ``mean`` (one
Karcher mean from a points file), ``ergodic`` and ``semigroup`` (full
pipelines from a config), ``report`` (re-print a persisted run).  Exit
codes: 0 success/converged, 2 inconclusive, 3 invariant violation found,
4 usage error.

Trace files are plain CSV, one row per schedule point, with floats written
through ``repr`` so reruns with the same seed are byte identical.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import ergodic as erg
from . import semigroup as sg
from .config import ConfigError, ExperimentConfig, parse_config
from .frechet import CertificateError, FrechetProblem, SolverError, karcher_mean
from .geometry import (
    TOL_GEOMETRY,
    check_cat0_sample,
    check_cauchy_schwarz_sample,
    check_four_point_sample,
    check_quasi_inner_identities,
)
from .mappings import parse_mapping
from .spaces import parse_space

EXIT_OK = 0
EXIT_INCONCLUSIVE = 2
EXIT_VIOLATION = 3
EXIT_USAGE = 4

PROJ_SLACK = 1e-9  # allowed one-step increase of a theoretically monotone trace


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


@dataclass(frozen=True)
class RunReport:
    verdict: erg.Verdict
    final_residual: float
    agreement: float
    worst_cert_gap: float
    trace_paths: tuple[Path, ...]
    wall_clock: float
    violation: str | None = None

    def print(self, out=sys.stdout) -> None:
        v = self.verdict
        coords = ", ".join(f"{c:.6g}" for c in v.limit_candidate.coords)
        print(f"status          : {v.status}", file=out)
        print(f"limit candidate : ({coords})", file=out)
        print(f"agreement       : {self.agreement:.6e}", file=out)
        print(f"final residual  : {self.final_residual:.6e}", file=out)
        print(f"worst cert gap  : {self.worst_cert_gap:.6e}", file=out)
        if self.violation:
            print(f"VIOLATION       : {self.violation}", file=out)
        for p in self.trace_paths:
            print(f"trace           : {p}", file=out)
        print(f"wall clock      : {self.wall_clock:.2f}s", file=out)


def _resolve_ergodic_schedule(cfg: ExperimentConfig) -> tuple[int, ...]:
    if cfg.schedule == "geometric":
        return erg.geometric_schedule(cfg.N, cfg.k_list)
    return tuple(int(v) for v in cfg.schedule)


def run_ergodic(cfg: ExperimentConfig) -> RunReport:
    """Orbit, means, diagnostics, verdict and trace files for one config."""
    t0 = time.perf_counter()
    space = parse_space(cfg.space)
    mapping = parse_mapping(space, cfg.map)
    start = space.point(cfg.start)
    orbit = erg.generate_orbit(mapping, start, cfg.N)
    schedule = _resolve_ergodic_schedule(cfg)
    trace, diag = erg.mean_sequence(orbit, schedule, cfg.k_list,
                                    tol=cfg.tol_solver, rng_seed=cfg.seed)
    proj = None
    proj_slack = 0.0
    if mapping.fixed_set is not None:
        proj = erg.projection_trace(orbit)
        proj_slack = proj.monotonicity_slack()
    vd = erg.verdict(trace, proj, cfg.tol_verdict)

    violation = None
    if proj_slack > PROJ_SLACK:
        violation = f"projected-orbit distances rose by {proj_slack:.3e}"
    bound_slack = orbit.boundedness_slack()
    if bound_slack > PROJ_SLACK:
        violation = f"orbit left the fixed-point ball by {bound_slack:.3e}"

    out = Path(cfg.out)
    dim = space.dim
    ks = sorted(trace.shifted_means)
    header = (["n"] + [f"sigma_{i}" for i in range(dim)] + ["residual"]
              + [f"shift_gap_k{k}" for k in ks]
              + ["proj_dist", "cert_gap", "frechet_value"])
    rows = []
    for i, n in enumerate(trace.schedule):
        rec = diag.records[i]
        row = [str(n)]
        row += [_fmt(c) for c in trace.means[i].coords]
        row.append(_fmt(rec.residual))
        row += [_fmt(rec.shift_gaps[k]) for k in ks]
        row.append(_fmt(rec.proj_dist) if rec.proj_dist is not None else "")
        row.append(_fmt(trace.certificates[i].worst_gap))
        row.append(_fmt(trace.frechet_values[i]))
        rows.append(row)
    mean_path = out / "mean_trace.csv"
    _write_csv(mean_path, header, rows)

    vheader = (["status"] + [f"limit_{i}" for i in range(dim)]
               + ["agreement", "final_residual", "worst_cert_gap",
                  "proj_monotone_slack", "boundedness_slack", "tol_verdict"])
    vrow = ([vd.status] + [_fmt(c) for c in vd.limit_candidate.coords]
            + [_fmt(vd.agreement), _fmt(vd.final_residual),
               _fmt(trace.worst_certificate_gap()), _fmt(proj_slack),
               _fmt(bound_slack), _fmt(cfg.tol_verdict)])
    verdict_path = out / "verdict.csv"
    _write_csv(verdict_path, vheader, [vrow])

    return RunReport(vd, vd.final_residual, vd.agreement,
                     trace.worst_certificate_gap(), (mean_path, verdict_path),
                     time.perf_counter() - t0, violation)


def _resolve_semigroup_schedule(cfg: ExperimentConfig) -> tuple[float, ...]:
    if cfg.schedule == "geometric":
        out = []
        t = 10.0
        while t < cfg.T - 1e-9:
            out.append(t)
            t *= 10.0
        out.append(float(cfg.T))
        return tuple(out)
    return tuple(float(v) for v in cfg.schedule)


def run_semigroup(cfg: ExperimentConfig) -> RunReport:
    """Flow, windowed means, diagnostics, verdict and trace files."""
    t0 = time.perf_counter()
    space = parse_space(cfg.space)
    field = sg.parse_field(space, cfg.field)
    spec = sg.SemigroupSpec(space, field, cfg.h)
    start = space.point(cfg.start)
    T_list = _resolve_semigroup_schedule(cfg)
    horizon = T_list[-1] + max(cfg.s_list)
    curve = sg.flow(spec, start, horizon)
    diag = sg.semigroup_diagnostics(spec, curve, T_list, cfg.s_list, cfg.r,
                                    tol=cfg.tol_solver, rng_seed=cfg.seed)
    vd = sg.semigroup_verdict(spec, curve, diag, cfg.tol_verdict)
    axioms = sg.check_semigroup_axioms(spec, rng_seed=cfg.seed,
                                       t_max=min(2.0, cfg.T))
    final_dist = sg.final_state_distance(spec, curve)

    violation = None
    if not axioms.passed:
        violation = f"semigroup axiom violated: {axioms.summary()}"

    out = Path(cfg.out)
    dim = space.dim
    ss = sorted(diag.shifted_means)
    header = (["T"] + [f"mean_{i}" for i in range(dim)] + ["residual_r"]
              + [f"shift_gap_s{s:g}" for s in ss] + ["proj_dist", "cert_gap"])
    rows = []
    for i, T in enumerate(diag.T_list):
        row = [_fmt(T)]
        row += [_fmt(c) for c in diag.means[i].coords]
        row.append(_fmt(diag.residuals_r[i]))
        row += [_fmt(diag.shift_gaps[s][i]) for s in ss]
        row.append(_fmt(diag.proj_dists[i]))
        row.append(_fmt(diag.certificates[i].worst_gap))
        rows.append(row)
    mean_path = out / "mean_trace.csv"
    _write_csv(mean_path, header, rows)

    vheader = (["status"] + [f"limit_{i}" for i in range(dim)]
               + ["agreement", "final_residual_r", "final_state_dist",
                  "worst_cert_gap", "axiom_worst", "tol_verdict"])
    vrow = ([vd.status] + [_fmt(c) for c in vd.limit_candidate.coords]
            + [_fmt(vd.agreement), _fmt(vd.final_residual), _fmt(final_dist),
               _fmt(diag.worst_certificate_gap()),
               _fmt(axioms.worst_violation), _fmt(cfg.tol_verdict)])
    verdict_path = out / "verdict.csv"
    _write_csv(verdict_path, vheader, [vrow])

    return RunReport(vd, vd.final_residual, vd.agreement,
                     diag.worst_certificate_gap(), (mean_path, verdict_path),
                     time.perf_counter() - t0, violation)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_verify_space(args) -> int:
    try:
        space = parse_space(args.space)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    checks = [
        check_cat0_sample(space, args.seed, args.samples, args.tol),
        check_cauchy_schwarz_sample(space, args.seed, args.samples, args.tol),
        check_quasi_inner_identities(space, args.seed, args.samples),
        check_four_point_sample(space, args.seed, args.samples, args.tol),
    ]
    all_ok = True
    rows = []
    for rep in checks:
        print(rep.summary())
        if not rep.passed:
            all_ok = False
            if rep.witness:
                print(f"  witness: {rep.witness}")
        rows.append([rep.check, str(rep.samples_tested),
                     _fmt(rep.worst_violation), _fmt(rep.tol),
                     "pass" if rep.passed else "fail"])
    if args.out:
        path = Path(args.out) / f"checks_{space.space_id.replace(':', '_')}.csv"
        _write_csv(path, ["check", "samples", "worst_violation", "tol", "status"], rows)
        print(f"trace           : {path}")
    return EXIT_OK if all_ok else EXIT_VIOLATION


def _read_points_file(space, path: Path):
    pts = []
    for ln, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            coords = [float(v) for v in line.replace(",", " ").split()]
            pts.append(space.point(coords))
        except ValueError as exc:
            raise ConfigError(f"{path}:{ln}: {exc}") from exc
    if not pts:
        raise ConfigError(f"{path}: no points found")
    return pts


def _cmd_mean(args) -> int:
    try:
        space = parse_space(args.space)
        pts = _read_points_file(space, Path(args.points))
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        mean, cert = karcher_mean(FrechetProblem(space, anchors=pts),
                                  tol=args.tol, cert_seed=args.seed)
    except (SolverError, CertificateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    coords = ", ".join(f"{c:.12g}" for c in mean.coords)
    print(f"mean            : ({coords})")
    print(f"functional value: {cert.functional_value:.12g}")
    print(f"certificate gap : {cert.worst_gap:.3e} over {cert.probes} probes")
    return EXIT_OK


def _load_config(path: str, args) -> ExperimentConfig:
    text = Path(path).read_text(encoding="utf-8")
    cfg = parse_config(text)
    from dataclasses import replace
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    if args.tol is not None:
        cfg = replace(cfg, tol_verdict=args.tol)
    if args.schedule is not None:
        if args.schedule.strip() == "geometric":
            cfg = replace(cfg, schedule="geometric")
        else:
            cfg = replace(cfg, schedule=tuple(
                float(v) for v in args.schedule.split(",")))
    return cfg


def _run_config_cmd(args, runner) -> int:
    try:
        cfg = _load_config(args.config, args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = runner(cfg)
    except (SolverError, CertificateError, sg.FlowInstabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    report.print()
    if report.violation is not None:
        return EXIT_VIOLATION
    return EXIT_OK if report.verdict.converged else EXIT_INCONCLUSIVE


def _cmd_report(args) -> int:
    base = Path(args.trace_dir)
    verdict_path = base / "verdict.csv"
    mean_path = base / "mean_trace.csv"
    if not verdict_path.exists() or not mean_path.exists():
        print(f"error: no traces under {base}", file=sys.stderr)
        return EXIT_USAGE
    vlines = verdict_path.read_text(encoding="utf-8").strip().splitlines()
    header = vlines[0].split(",")
    values = vlines[1].split(",")
    for key, val in zip(header, values):
        print(f"{key:20s}: {val}")
    mlines = mean_path.read_text(encoding="utf-8").strip().splitlines()
    print(f"{'schedule rows':20s}: {len(mlines) - 1}")
    status = dict(zip(header, values)).get("status", "")
    return EXIT_OK if status == "converged" else EXIT_INCONCLUSIVE


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hadamard-means",
                     description="Karcher-mean ergodic averaging on Hadamard spaces")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-space", parents=[], help="sampled geometry checks")
    p.add_argument("space")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--tol", type=float, default=TOL_GEOMETRY)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_verify_space)

    p = sub.add_parser("mean", help="Karcher mean of a points file")
    p.add_argument("space")
    p.add_argument("points")
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_mean)

    for name, runner in (("ergodic", run_ergodic), ("semigroup", run_semigroup)):
        p = sub.add_parser(name, help=f"run one {name} experiment config")
        p.add_argument("config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--schedule", default=None)
        p.set_defaults(fn=lambda args, r=runner: _run_config_cmd(args, r))

    p = sub.add_parser("report", help="print a persisted run report")
    p.add_argument("trace_dir")
    p.set_defaults(fn=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
