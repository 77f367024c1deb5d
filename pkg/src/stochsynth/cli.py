"""Command-line pipeline: abstract, synthesize, simulate, certify, heatmap.

Exit codes: 0 verdict yes / check passed, 1 verdict no / check failed,
2 verdict unknown / inconclusive, 3 usage or input errors, 4 internal
errors.  The worker count for abstraction rows is taken from the
STOCHSYNTH_THREADS environment variable (default 1).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .abstraction import build_imdp, default_worker_count
from .certificate import CertificateError, check_certificate
from .engine import interval_value_iteration, satisfaction_interval
from .io_formats import (
    ManifestMismatch,
    RunManifest,
    now_stamp,
    pipeline_identity,
    read_imdp,
    read_policy,
    read_results,
    write_heatmap,
    write_imdp,
    write_manifest,
    write_policy,
    write_ref_record,
    write_report,
    write_results,
    write_trajectory_csv,
)
from .partition import build_control_grid, build_partition
from .properties import check_props_known, parse_property, verdict
from .simulate import (
    XI_MODES,
    Controller,
    evaluate_property,
    monte_carlo,
    run_trajectory,
    soundness_check,
    trajectory_rng,
)
from .system import ConfigError, SynthesisParams, load_config

EXIT_YES = 0
EXIT_NO = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 3
EXIT_INTERNAL = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_config_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="system config file (YAML)")
    p.add_argument("--eta", type=float, default=None, help="override config eta")
    p.add_argument("--rho", type=float, default=None, help="override config rho")
    p.add_argument("--k", type=float, default=None, help="override config k")


def _load(args: argparse.Namespace):
    spec, params, digest = load_config(args.config)
    eta = args.eta if args.eta is not None else params.eta
    rho = args.rho if args.rho is not None else params.rho
    k = args.k if args.k is not None else params.k
    return spec, SynthesisParams(eta=eta, rho=rho, k=k), digest


def _parse_x0(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stochsynth", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_abs = sub.add_parser("abstract", help="build the interval-MDP abstraction")
    _add_config_arg(p_abs)
    p_abs.add_argument("--out-dir", required=True)
    p_abs.add_argument("--workers", type=int, default=None)

    p_cert = sub.add_parser("certify", help="evaluate the completeness certificate")
    _add_config_arg(p_cert)

    p_syn = sub.add_parser("synthesize", help="robust policy synthesis on an abstraction")
    p_syn.add_argument("--imdp", required=True)
    p_syn.add_argument("--property", required=True, dest="prop")
    p_syn.add_argument("--out-dir", required=True)
    p_syn.add_argument("--q0", type=int, default=None, help="initial cell id to report")
    p_syn.add_argument("--tol", type=float, default=1e-9)
    p_syn.add_argument("--max-iter", type=int, default=100_000)

    p_sim = sub.add_parser("simulate", help="Monte Carlo validation of a policy")
    _add_config_arg(p_sim)
    p_sim.add_argument("--policy", required=True)
    p_sim.add_argument("--results", default=None, help="results file for the interval check")
    p_sim.add_argument("--property", required=True, dest="prop")
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--xi-mode", choices=XI_MODES, default="zero")
    p_sim.add_argument("--xi-direction", default=None, help="comma-separated corner direction")
    p_sim.add_argument("--q0", type=int, default=None, help="start at the center of this cell")
    p_sim.add_argument("--x0", default=None, help="comma-separated start point")
    p_sim.add_argument("--horizon", type=int, default=None)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--traj-csv", default=None)

    p_heat = sub.add_parser("heatmap", help="export per-cell intervals as CSV")
    _add_config_arg(p_heat)
    p_heat.add_argument("--results", required=True)
    p_heat.add_argument("--policy", required=True)
    p_heat.add_argument("--out", required=True)

    p_pipe = sub.add_parser("pipeline", help="abstract + synthesize + simulate")
    _add_config_arg(p_pipe)
    p_pipe.add_argument("--property", required=True, dest="prop")
    p_pipe.add_argument("--out-dir", required=True)
    p_pipe.add_argument("--n", type=int, default=10_000)
    p_pipe.add_argument("--seed", type=int, default=0)
    p_pipe.add_argument("--xi-mode", choices=XI_MODES, default="zero")
    p_pipe.add_argument("--q0", type=int, default=None)
    p_pipe.add_argument("--horizon", type=int, default=None)
    p_pipe.add_argument("--workers", type=int, default=None)

    return parser


def cmd_abstract(args: argparse.Namespace) -> int:
    started = now_stamp()
    spec, params, digest = _load(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ident = pipeline_identity(digest, params.eta, params.rho, params.k)

    part = build_partition(spec, params.eta)
    grid = build_control_grid(spec, params.rho)
    workers = args.workers if args.workers is not None else default_worker_count()
    imdp, record = build_imdp(spec, part, grid, params.k, workers=workers)

    write_imdp(imdp, out / "abstraction.imdp", ident)
    write_ref_record(record, out / "refs.json", ident)

    print(
        f"abstraction: {imdp.num_states} states ({imdp.num_cells} cells + sink), "
        f"{imdp.num_actions} actions, effective eta {imdp.eta}"
    )

    code = EXIT_YES
    cert_doc: dict = {"manifest": ident}
    if spec.theta2 is None:
        print("certificate: no gap target (config sets no theta2); certificate skipped")
        cert_doc["skipped"] = True
    else:
        cert = check_certificate(spec, params.eta, params.rho, params.k)
        cert_doc.update(
            {
                "skipped": False,
                "eta": cert.eta,
                "rho": cert.rho,
                "k": cert.k,
                "ws": cert.ws,
                "tv": cert.tv,
                "lhs": cert.lhs,
                "gap": cert.gap,
                "holds": cert.holds,
            }
        )
        status = "holds" if cert.holds else "FAILS"
        print(f"certificate: {status} (lhs {cert.lhs} vs gap {cert.gap})")
        if not cert.holds:
            code = EXIT_NO
    write_report(out / "certificate.json", cert_doc)

    manifest = RunManifest(
        config_path=str(args.config),
        config_sha256=digest,
        subcommand="abstract",
        provenance_hash=ident,
        params={"eta": params.eta, "rho": params.rho, "k": params.k, "workers": workers},
        started_at=started,
        finished_at=now_stamp(),
    )
    write_manifest(manifest, out / "abstract.manifest.json")
    return code


def cmd_certify(args: argparse.Namespace) -> int:
    spec, params, _ = _load(args)
    cert = check_certificate(spec, params.eta, params.rho, params.k)
    status = "holds" if cert.holds else "FAILS"
    print(
        f"certificate {status}: lhs = 2*eta + ws + L_u*rho + k = {cert.lhs} "
        f"vs gap theta2 - theta1 = {cert.gap}"
    )
    print(f"  eta={cert.eta} rho={cert.rho} k={cert.k} ws={cert.ws} tv={cert.tv} L_u={cert.L_u}")
    return EXIT_YES if cert.holds else EXIT_NO


def cmd_synthesize(args: argparse.Namespace) -> int:
    started = now_stamp()
    imdp, ident = read_imdp(args.imdp)
    if ident is None:
        ident = "unknown"
    prop = parse_property(args.prop)
    known = frozenset().union(*imdp.labels)
    check_props_known(prop, known)

    result = interval_value_iteration(imdp, prop, tol=args.tol, max_iter=args.max_iter)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    verdicts: list[str | None] = []
    for s in range(1, imdp.num_states + 1):
        _, v = satisfaction_interval(result, s)
        verdicts.append(v)
    write_policy(result.policy, out / "policy.txt", ident)
    write_results(
        out / "results.json",
        ident,
        str(prop),
        result.p_lo.tolist(),
        result.p_hi.tolist(),
        verdicts,
        result.iterations,
        result.residual,
    )

    code = EXIT_YES
    if args.q0 is not None:
        if not 1 <= args.q0 <= imdp.num_states:
            print(f"error: q0 must be in 1..{imdp.num_states}", file=sys.stderr)
            return EXIT_USAGE
        interval, v = satisfaction_interval(result, args.q0)
        msg = f"state {args.q0}: p in [{interval.lo}, {interval.hi}]"
        if v is not None:
            msg += f", verdict {v}"
            code = {"yes": EXIT_YES, "no": EXIT_NO, "unknown": EXIT_UNKNOWN}[v]
        print(msg)

    manifest = RunManifest(
        config_path=str(args.imdp),
        config_sha256=ident,
        subcommand="synthesize",
        provenance_hash=ident,
        params={"property": str(prop), "tol": args.tol, "max_iter": args.max_iter},
        started_at=started,
        finished_at=now_stamp(),
    )
    write_manifest(manifest, out / "synthesize.manifest.json")
    return code


def cmd_simulate(args: argparse.Namespace) -> int:
    started = now_stamp()
    spec, params, digest = _load(args)
    ident = pipeline_identity(digest, params.eta, params.rho, params.k)

    policy, policy_ident = read_policy(args.policy)
    if policy_ident is not None and policy_ident != ident:
        raise ManifestMismatch(ident, policy_ident, str(args.policy))

    interval_doc = None
    if args.results is not None:
        doc = read_results(args.results)
        if doc.get("manifest") not in (None, ident):
            raise ManifestMismatch(ident, str(doc.get("manifest")), str(args.results))
        interval_doc = doc

    if args.n < 1:
        print("error: --n must be at least 1", file=sys.stderr)
        return EXIT_USAGE

    prop = parse_property(args.prop)
    part = build_partition(spec, params.eta)
    grid = build_control_grid(spec, params.rho)
    if len(policy) != part.num_states:
        raise ManifestMismatch(ident, f"policy over {len(policy)} states", str(args.policy))
    ctrl = Controller(partition=part, grid=grid, policy=policy)
    check_props_known(prop, spec.all_props)

    if args.x0 is not None:
        x0 = _parse_x0(args.x0)
        q0 = part.locate(x0)
    elif args.q0 is not None:
        q0 = args.q0
        if not 1 <= q0 <= part.num_cells:
            print(f"error: q0 must be in 1..{part.num_cells}", file=sys.stderr)
            return EXIT_USAGE
        x0 = part.cell_center(q0)
    else:
        print("error: give either --x0 or --q0", file=sys.stderr)
        return EXIT_USAGE

    horizon = args.horizon if args.horizon is not None else prop.horizon
    if horizon is None:
        print("error: unbounded property needs an explicit --horizon", file=sys.stderr)
        return EXIT_USAGE

    xi_dir = _parse_x0(args.xi_direction) if args.xi_direction else None
    est = monte_carlo(
        spec, ctrl, x0, prop, args.n, args.seed, args.xi_mode, xi_dir, horizon=horizon
    )

    report: dict = {
        "manifest": ident,
        "property": str(prop),
        "N": est.N,
        "seed": est.seed,
        "xi_mode": args.xi_mode,
        "x0": list(x0),
        "q0": q0,
        "horizon": horizon,
        "truncated": est.truncated,
        "successes": est.successes,
        "p_emp": est.p_emp,
        "ci": [est.ci_lo, est.ci_hi],
    }
    code = EXIT_YES
    if interval_doc is not None:
        state_rec = next(
            (r for r in interval_doc["states"] if r["state"] == q0), None
        )
        if state_rec is None:
            print(f"error: state {q0} not present in results file", file=sys.stderr)
            return EXIT_USAGE
        from .intervals import Interval

        iv = Interval(state_rec["p_lo"], state_rec["p_hi"])
        v = soundness_check(est, iv)
        report["interval"] = [iv.lo, iv.hi]
        report["verdict"] = v
        code = {"pass": EXIT_YES, "fail": EXIT_NO, "inconclusive": EXIT_UNKNOWN}[v]
        print(
            f"simulate: p_emp {est.p_emp} ci [{est.ci_lo}, {est.ci_hi}] "
            f"vs interval [{iv.lo}, {iv.hi}] -> {v}"
        )
    else:
        report["interval"] = None
        report["verdict"] = None
        print(f"simulate: p_emp {est.p_emp} ci [{est.ci_lo}, {est.ci_hi}]")

    write_report(args.out, report)

    if args.traj_csv:
        rows = []
        for i in range(est.N):
            rng = trajectory_rng(est.seed, i)
            traj = run_trajectory(spec, ctrl, x0, horizon, rng, args.xi_mode, xi_dir)
            rows.append((i, evaluate_property(traj, part, prop), traj.stop_index))
        write_trajectory_csv(args.traj_csv, rows)

    manifest = RunManifest(
        config_path=str(args.config),
        config_sha256=digest,
        subcommand="simulate",
        provenance_hash=ident,
        params={
            "eta": params.eta,
            "rho": params.rho,
            "k": params.k,
            "property": str(prop),
            "N": args.n,
            "seed": args.seed,
            "xi_mode": args.xi_mode,
            "horizon": horizon,
        },
        started_at=started,
        finished_at=now_stamp(),
    )
    write_manifest(manifest, Path(args.out).with_suffix(".manifest.json"))
    return code


def cmd_heatmap(args: argparse.Namespace) -> int:
    spec, params, digest = _load(args)
    ident = pipeline_identity(digest, params.eta, params.rho, params.k)
    doc = read_results(args.results)
    if doc.get("manifest") not in (None, ident):
        raise ManifestMismatch(ident, str(doc.get("manifest")), str(args.results))
    policy, policy_ident = read_policy(args.policy)
    if policy_ident is not None and policy_ident != ident:
        raise ManifestMismatch(ident, policy_ident, str(args.policy))
    part = build_partition(spec, params.eta)
    states = sorted(doc["states"], key=lambda r: r["state"])
    p_lo = [r["p_lo"] for r in states]
    p_hi = [r["p_hi"] for r in states]
    write_heatmap(args.out, part, p_lo, p_hi, policy)
    print(f"heatmap: wrote {part.num_cells} rows to {args.out}")
    return EXIT_YES


def cmd_pipeline(args: argparse.Namespace) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    abs_args = argparse.Namespace(
        config=args.config,
        eta=args.eta,
        rho=args.rho,
        k=args.k,
        out_dir=args.out_dir,
        workers=args.workers,
    )
    code = cmd_abstract(abs_args)
    if code > EXIT_NO:
        return code

    syn_args = argparse.Namespace(
        imdp=str(out / "abstraction.imdp"),
        prop=args.prop,
        out_dir=args.out_dir,
        q0=args.q0,
        tol=1e-9,
        max_iter=100_000,
    )
    syn_code = cmd_synthesize(syn_args)

    sim_args = argparse.Namespace(
        config=args.config,
        eta=args.eta,
        rho=args.rho,
        k=args.k,
        policy=str(out / "policy.txt"),
        results=str(out / "results.json"),
        prop=args.prop,
        n=args.n,
        seed=args.seed,
        xi_mode=args.xi_mode,
        xi_direction=None,
        q0=args.q0 if args.q0 is not None else 1,
        x0=None,
        horizon=args.horizon,
        out=str(out / "report.json"),
        traj_csv=None,
    )
    sim_code = cmd_simulate(sim_args)
    return max(syn_code, sim_code)


_COMMANDS = {
    "abstract": cmd_abstract,
    "certify": cmd_certify,
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
    "heatmap": cmd_heatmap,
    "pipeline": cmd_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    except (ConfigError, CertificateError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ManifestMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
