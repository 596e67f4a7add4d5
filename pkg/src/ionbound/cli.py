"""Command-line entry point: ``ionbound <command> ...``."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io, plotting
from .hydro import CFLError
from .vlasov import StepSizeError
from .scenario import PRESETS, ConfigError, load, preset

log = logging.getLogger("ionbound")

EXIT_CONFIG = 2
EXIT_ABORTED = 3


def _outdir(args, name):
    base = Path(args.out) if args.out else io.output_root()
    d = base / name
    d.mkdir(parents=True, exist_ok=True)
    return d


def _specs(args):
    specs = [load(p) for p in args.config]
    specs += [preset(name) for name in args.preset]
    if not specs:
        raise ConfigError("config", "give at least one config file or --preset")
    if args.T_final is not None:
        specs = [s.with_overrides(T_final=args.T_final) for s in specs]
    return specs


def _run_one(spec, args):
    from .simulate import run, summary

    result = run(spec)
    out = _outdir(args, spec.name)
    io.write_records_csv(out / f"{spec.name}.csv", result.records, result.certificate)
    doc = summary(result)
    if not args.no_plots:
        doc["figures"] = [p.name for p in plotting.plot_run(result, out, spec.name)]
    io.write_json(out / f"{spec.name}.json", doc)
    status = "aborted" if result.aborted else result.certificate.verdict
    print(f"{spec.name}: {status}; energy drift {doc['energy_drift']:.3e}, "
          f"mass drift {doc['mass_drift']:.3e} -> {out}")
    return result


def cmd_run(args):
    specs = _specs(args)
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(lambda s: _run_one(s, args), specs))
    return EXIT_ABORTED if any(r.aborted for r in results) else 0


def cmd_verify_inequalities(args):
    from .kernel import ll1_sweep, ll2_grid_sweep, nu_sweep

    report = {"seed": args.seed}
    m, v, _ = ll1_sweep(args.samples, seed=args.seed)
    report["ll1"] = {"pairs": args.samples, "min_rel_margin": m, "violations": v}
    radii = np.geomspace(args.r_min, args.r_max, args.grid)
    m, v, _, _ = ll2_grid_sweep(radii, args.order)
    report["ll2"] = {"grid": args.grid, "order": args.order, "min_rel_margin": m, "violations": v}
    report["nu"] = {}
    for nu in (2, 3, 4, 5):
        m, v = nu_sweep(nu, args.nu_samples, seed=args.seed + nu)
        report["nu"][str(nu)] = {"pairs": args.nu_samples, "min_margin": m, "violations": v}
    total = report["ll1"]["violations"] + report["ll2"]["violations"] + sum(
        r["violations"] for r in report["nu"].values())
    report["violations"] = total
    io.write_json(_outdir(args, "inequalities") / "inequalities.json", report)
    for key in ("ll1", "ll2"):
        print(f"{key}: violations {report[key]['violations']}, min margin {report[key]['min_rel_margin']:.3e}")
    for nu, r in report["nu"].items():
        print(f"nu={nu}: violations {r['violations']}, min margin {r['min_margin']:.3e}")
    return 0 if total == 0 else 1


def cmd_tf_ground_state(args):
    from .groundstate import solve_tf_atom

    out = _outdir(args, "tf-ground-state")
    states, rows = [], []
    for Z in args.Z:
        s = solve_tf_atom(Z)
        states.append(s)
        with open(out / f"rho_tf_Z{Z:g}.csv", "w") as fh:
            fh.write("r,rho_tf\n")
            for row in s.to_rows():
                fh.write(f"{row['r']!r},{row['rho_tf']!r}\n")
        rows.append({"Z": Z, "energy": s.energy, "energy_grid": s.energy_grid,
                     "energy_direct": s.energy_direct, "charge": s.charge, "slope": s.slope,
                     "alpha": s.alpha, "direct_iterations": s.direct_iterations})
        print(f"Z={Z:g}: E={s.energy:.8f} direct={s.energy_direct:.8f} N={s.charge:.6f}")
    report = {"states": rows}
    if len(args.Z) > 1:
        e = np.array([-r["energy_direct"] for r in rows])
        report["scaling_exponent"] = float(np.polyfit(np.log(args.Z), np.log(e), 1)[0])
        print(f"scaling exponent {report['scaling_exponent']:.5f}")
    if not args.no_plots:
        plotting.plot_tf_ground_states(states, out / "rho_tf.png")
    io.write_json(out / "tf_ground_state.json", report)
    return 0


def cmd_alpha_n(args):
    from .kernel import estimate_alpha_N

    recs = []
    for n in args.n:
        est = estimate_alpha_N(n, restarts=args.restarts, seed=args.seed)
        recs.append(est.to_record())
        print(f"n={n}: alpha_n <= {est.value:.8f} (converged: {est.converged})")
    io.write_json(_outdir(args, "alpha-n") / "alpha_n.json", {"seed": args.seed, "estimates": recs})
    return 0


def cmd_converge(args):
    from .simulate import converge

    reports = {}
    for spec in _specs(args):
        rep = converge(spec, levels=tuple(args.levels))
        reports[spec.name] = rep
        out = _outdir(args, f"{spec.name}-converge")
        io.write_json(out / "converge.json", rep)
        if not args.no_plots:
            plotting.plot_convergence(rep, out / "converge.png")
        orders = ", ".join("nan" if math.isnan(o) else f"{o:.2f}" for o in rep["orders"])
        print(f"{spec.name}: energy drift {rep['energy_drift']}, orders [{orders}]")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="ionbound", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help=f"output root (default ${io.OUTPUT_ENV} or ./runs)")
        sp.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    def scenarios(sp):
        sp.add_argument("config", nargs="*", help="JSON scenario files")
        sp.add_argument("--preset", action="append", default=[], choices=sorted(PRESETS))
        sp.add_argument("--T-final", dest="T_final", type=float, help="override T_final")

    sp = sub.add_parser("run", help="run scenarios and write CSV, JSON and figures")
    scenarios(sp)
    common(sp)
    sp.add_argument("--jobs", type=int, default=1, help="scenarios run concurrently")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("verify-inequalities", help="Monte-Carlo and grid sweeps of the pair inequalities")
    common(sp)
    sp.add_argument("--samples", type=int, default=1_000_000)
    sp.add_argument("--nu-samples", type=int, default=100_000)
    sp.add_argument("--grid", type=int, default=50)
    sp.add_argument("--order", type=int, default=64)
    sp.add_argument("--r-min", type=float, default=0.01)
    sp.add_argument("--r-max", type=float, default=100.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_verify_inequalities)

    sp = sub.add_parser("tf-ground-state", help="neutral Thomas-Fermi atoms")
    common(sp)
    sp.add_argument("--Z", type=float, nargs="+", default=[1.0, 2.0, 4.0, 8.0])
    sp.set_defaults(func=cmd_tf_ground_state)

    sp = sub.add_parser("alpha-n", help="upper bounds on alpha_N by multistart search")
    common(sp)
    sp.add_argument("--n", type=int, nargs="+", default=[2])
    sp.add_argument("--restarts", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_alpha_n)

    sp = sub.add_parser("converge", help="energy drift under refinement")
    scenarios(sp)
    common(sp)
    sp.add_argument("--levels", type=int, nargs="+", default=[-1, 0])
    sp.set_defaults(func=cmd_converge)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepSizeError, CFLError) as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_ABORTED


if __name__ == "__main__":
    sys.exit(main())
