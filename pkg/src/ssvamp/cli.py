"""Command line harness.

Subcommands run the main experiments (decoding sweeps, state evolution,
potential curves, threshold tables, asymptotic quantities, spectrum checks)
and write CSV or JSON artifacts plus a reproducibility manifest.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

import argparse
import csv
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from ._backend import backend_name
from .codec import (hard_decision, mse_per_section, sample_message,
                    section_error_rate, to_signal, transmit)
from .operators import EnsembleSpec, sample_operator
from .potential import (capacity, compute_thresholds, find_maxima,
                        r_it_inf, r_vamp_inf, spectral_criterion_gap)
from .spectra import (SpectraError, discrete_tri_model, gaussian_model,
                      row_orthogonal_model)
from .state_evolution import run_se, sample_batch, se_params
from .vamp import VampConfig, decode

OUT_DIR_ENV = "SSVAMP_OUT_DIR"

MATRIX_ENSEMBLES = ("gaussian", "row-orthogonal", "discrete", "dct-proxy")
# the proxy shares the row-orthogonal spectrum; asymptotic commands map it back
SPECTRUM_OF = {"dct-proxy": "row-orthogonal"}

_MODEL_FACTORY = {
    "gaussian": gaussian_model,
    "row-orthogonal": row_orthogonal_model,
    "discrete": discrete_tri_model,
}


class ConfigError(Exception):
    pass


def _spectrum_kind(ensemble):
    return SPECTRUM_OF.get(ensemble, ensemble)


def _out_path(args, default_name):
    if args.out:
        return args.out
    base = os.environ.get(OUT_DIR_ENV, ".")
    return os.path.join(base, default_name)


def _write_manifest(path, args, extra=None):
    manifest = {
        "version": __version__,
        "backend": backend_name(),
        "command": args.command,
        "argv": sys.argv[1:],
        "config": {k: v for k, v in vars(args).items()
                   if k not in ("func", "command") and v is not None},
        "written": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    if extra:
        manifest.update(extra)
    mpath = path + ".manifest.json"
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return mpath


def _write_rows(path, fmt, fieldnames, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=fieldnames)
            w.writeheader()
            w.writerows(rows)
    else:
        with open(path, "w") as fh:
            json.dump(rows, fh, indent=2)


def _trial_seeds(master_seed, trials):
    # counter-based split: child i gets SeedSequence(master, i)
    return [int(np.random.SeedSequence([master_seed, i]).generate_state(1)[0])
            for i in range(trials)]


def _rate_grid(args):
    if args.R is not None:
        return [args.R]
    if args.R_min is None or args.R_max is None:
        raise ConfigError("need --R or both --R-min and --R-max")
    steps = args.R_steps or 10
    if steps < 1 or args.R_min > args.R_max:
        raise ConfigError("empty rate sweep")
    return list(np.linspace(args.R_min, args.R_max, steps))


# -- subcommands -----------------------------------------------------------


def cmd_decode(args):
    rates = _rate_grid(args)
    seeds = _trial_seeds(args.seed, args.trials)
    rows = []
    per_iter = []
    for R in rates:
        finals = []
        sers = []
        for t, s in enumerate(seeds):
            spec = EnsembleSpec(args.ensemble, L=args.L, B=args.B, R=R,
                                snr=args.snr, seed=s)
            op = sample_operator(spec)
            msg = sample_message(args.L, args.B, s + 1)
            x = to_signal(msg)
            y = transmit(op, x, args.snr, s + 2)
            res = decode(op, y.y, args.snr, args.L, args.B,
                         VampConfig(max_iter=args.max_iter), truth=msg)
            est = hard_decision(res.xhat, args.L, args.B)
            ser = section_error_rate(msg, est)
            mse = mse_per_section(x, res.xhat, args.L)
            finals.append(mse)
            sers.append(ser)
            rows.append({"R": R, "trial": t, "seed": s, "ser": ser,
                         "mse": mse, "iterations": res.iterations,
                         "converged": res.converged,
                         "unstable": res.unstable})
            for k, e in enumerate(res.mse_trajectory):
                per_iter.append({"R": R, "trial": t, "iter": k, "mse": e,
                                 "ser": res.ser_trajectory[k]})
        m, s_ = float(np.mean(sers)), float(np.std(sers) / math.sqrt(len(sers)))
        print(f"R={R:.4f}  mean SER={m:.3e} (stderr {s_:.1e})  "
              f"mean MSE={np.mean(finals):.3e}")
    path = _out_path(args, f"decode_{args.ensemble}_B{args.B}.{args.format}")
    _write_rows(path, args.format,
                ["R", "trial", "seed", "ser", "mse", "iterations",
                 "converged", "unstable"], rows)
    iter_path = os.path.splitext(path)[0] + f"_trajectories.{args.format}"
    _write_rows(iter_path, args.format, ["R", "trial", "iter", "mse", "ser"],
                per_iter)
    _write_manifest(path, args, {"trial_seeds": seeds})
    print(f"wrote {path}, {iter_path}")
    return 0


def cmd_se(args):
    kind = _spectrum_kind(args.ensemble)
    rows = []
    for R in _rate_grid(args):
        params = se_params(kind, args.B, args.snr, R,
                           mc_samples=args.mc_samples, seed=args.seed)
        traj = run_se(params, sample_batch(params))
        for t, e in enumerate(traj.es):
            rows.append({"R": R, "iter": t, "E": e})
        print(f"R={R:.4f}  E*={traj.fixed_point:.3e}  "
              f"converged={traj.converged} in {len(traj.es) - 1} iters")
    path = _out_path(args, f"se_{kind}_B{args.B}.{args.format}")
    _write_rows(path, args.format, ["R", "iter", "E"], rows)
    _write_manifest(path, args)
    print(f"wrote {path}")
    return 0


def cmd_potential(args):
    kind = _spectrum_kind(args.ensemble)
    rows = []
    for R in _rate_grid(args):
        params = se_params(kind, args.B, args.snr, R,
                           mc_samples=args.mc_samples, seed=args.seed)
        curve = find_maxima(params, args.grid_size, sample_batch(params))
        for e, phi, err in zip(curve.es, curve.phis, curve.stderrs):
            rows.append({"R": R, "E": e, "phi": phi, "stderr": err})
        tops = ", ".join(f"({e:.4g}, {p:.6g})" for e, p in curve.maxima)
        print(f"R={R:.4f}  maxima: {tops}")
    path = _out_path(args, f"potential_{kind}_B{args.B}.{args.format}")
    _write_rows(path, args.format, ["R", "E", "phi", "stderr"], rows)
    _write_manifest(path, args)
    print(f"wrote {path}")
    return 0


def cmd_thresholds(args):
    kind = _spectrum_kind(args.ensemble)
    bs = args.B_list or [args.B]
    rows = []
    for B in bs:
        th = compute_thresholds(B, args.snr, kind,
                                mc_samples=args.mc_samples, seed=args.seed)
        row = {"ensemble": kind, "B": B, "snr": args.snr,
               "r_vamp": th.r_vamp, "r_it": th.r_it,
               "capacity": capacity(args.snr), "no_gap": th.no_gap}
        rows.append(row)
        print(f"B={B}: R_VAMP={th.r_vamp:.4f}  R_IT={th.r_it:.4f}  "
              f"C={row['capacity']:.4f}")
    path = _out_path(args, f"thresholds_{kind}.{args.format}")
    _write_rows(path, args.format,
                ["ensemble", "B", "snr", "r_vamp", "r_it", "capacity",
                 "no_gap"], rows)
    _write_manifest(path, args)
    print(f"wrote {path}")
    return 0


def cmd_asymptotic(args):
    rows = []
    for name, factory in _MODEL_FACTORY.items():
        model = factory(0.5)
        rv, ri = r_vamp_inf(args.snr, model), r_it_inf(args.snr, model)
        it_gap, vamp_gap = spectral_criterion_gap(args.snr, model)
        rows.append({"ensemble": name, "snr": args.snr,
                     "r_vamp_inf": rv, "r_it_inf": ri,
                     "capacity": capacity(args.snr),
                     "r_it_deficit": it_gap, "r_vamp_deficit": vamp_gap})
        print(f"{name:15s} R_VAMP(inf)={rv:.5f}  R_IT(inf)={ri:.5f}  "
              f"deficits=({it_gap:.4g}, {vamp_gap:.4g})")
    path = _out_path(args, "asymptotic.%s" % args.format)
    _write_rows(path, args.format,
                ["ensemble", "snr", "r_vamp_inf", "r_it_inf", "capacity",
                 "r_it_deficit", "r_vamp_deficit"], rows)
    _write_manifest(path, args)
    print(f"wrote {path}")
    return 0


def cmd_spectrum_check(args):
    spec = EnsembleSpec(args.ensemble, L=args.L, B=args.B, R=args.R or 1.0,
                        snr=args.snr, seed=args.seed)
    op = sample_operator(spec)
    lam = np.sort(op.spectrum())
    kind = _spectrum_kind(args.ensemble)
    model = _MODEL_FACTORY[kind](spec.alpha)
    rows = [{"index": i, "eigenvalue": float(v)} for i, v in enumerate(lam)]
    mean = float(lam.mean())
    print(f"{args.ensemble}: {lam.size} eigenvalues, mean={mean:.6f} "
          f"(model alpha={model.alpha:.6f})")
    path = _out_path(args, f"spectrum_{args.ensemble}.{args.format}")
    _write_rows(path, args.format, ["index", "eigenvalue"], rows)
    _write_manifest(path, args, {"empirical_mean": mean})
    print(f"wrote {path}")
    if abs(mean - model.alpha) > 0.05:
        print("empirical mean deviates from the power constraint", file=sys.stderr)
        return 3
    return 0


# -- schema validation -----------------------------------------------------


def load_schema(name):
    path = os.path.join(os.path.dirname(__file__), "schemas",
                        name + ".schema.json")
    with open(path) as fh:
        return json.load(fh)


def validate_document(doc, schema, where="$"):
    """Check a document against the subset of JSON Schema our files use.

    Raises ValueError on the first violation.
    """
    kind = schema.get("type")
    checks = {"array": list, "object": dict, "string": str, "boolean": bool,
              "integer": int, "number": (int, float)}
    if kind and not isinstance(doc, checks[kind]) or isinstance(doc, bool) \
            and kind in ("integer", "number"):
        raise ValueError(f"{where}: expected {kind}, got {type(doc).__name__}")
    if "enum" in schema and doc not in schema["enum"]:
        raise ValueError(f"{where}: {doc!r} not in {schema['enum']}")
    if isinstance(doc, (int, float)) and not isinstance(doc, bool):
        if "minimum" in schema and doc < schema["minimum"]:
            raise ValueError(f"{where}: {doc} < minimum {schema['minimum']}")
        if "exclusiveMinimum" in schema and doc <= schema["exclusiveMinimum"]:
            raise ValueError(f"{where}: {doc} <= {schema['exclusiveMinimum']}")
    if kind == "array":
        for i, item in enumerate(doc):
            validate_document(item, schema.get("items", {}), f"{where}[{i}]")
    if kind == "object":
        for key in schema.get("required", ()):
            if key not in doc:
                raise ValueError(f"{where}: missing required key {key!r}")
        for key, sub in schema.get("properties", {}).items():
            if key in doc:
                validate_document(doc[key], sub, f"{where}.{key}")


# -- argument parsing ------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(
        prog="ssvamp",
        description="Sparse superposition codes with rotational invariant "
                    "coding matrices: decoding, state evolution, potentials "
                    "and thresholds.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, need_L=False):
        sp.add_argument("--ensemble", choices=MATRIX_ENSEMBLES,
                        default="row-orthogonal")
        if need_L:
            sp.add_argument("--L", type=int, default=1024)
        sp.add_argument("--B", type=int, default=4)
        sp.add_argument("--R", type=float, default=None)
        sp.add_argument("--R-min", dest="R_min", type=float, default=None)
        sp.add_argument("--R-max", dest="R_max", type=float, default=None)
        sp.add_argument("--R-steps", dest="R_steps", type=int, default=None)
        sp.add_argument("--snr", type=float, default=15.0)
        sp.add_argument("--mc-samples", dest="mc_samples", type=int,
                        default=100_000)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=None,
                        help="cap worker threads (numerics are deterministic "
                             "either way)")
        sp.add_argument("--out", default=None)
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    d = sub.add_parser("decode", help="encode/transmit/decode trials")
    common(d, need_L=True)
    d.add_argument("--trials", type=int, default=10)
    d.add_argument("--max-iter", dest="max_iter", type=int, default=50)
    d.set_defaults(func=cmd_decode)

    s = sub.add_parser("se", help="state evolution recursion")
    common(s)
    s.set_defaults(func=cmd_se)

    q = sub.add_parser("potential", help="replica potential curve")
    common(q)
    q.add_argument("--grid-size", dest="grid_size", type=int, default=256)
    q.set_defaults(func=cmd_potential)

    t = sub.add_parser("thresholds", help="R_VAMP / R_IT table")
    common(t)
    t.add_argument("--B-list", dest="B_list", type=int, nargs="+",
                   default=None)
    t.set_defaults(func=cmd_thresholds)

    a = sub.add_parser("asymptotic", help="B -> infinity quantities")
    common(a)
    a.set_defaults(func=cmd_asymptotic)

    c = sub.add_parser("spectrum-check",
                       help="sampled operator spectrum vs model")
    common(c, need_L=True)
    c.set_defaults(func=cmd_spectrum_check)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None):
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(args.threads))
    try:
        _validate(args)
        return args.func(args)
    except (ConfigError, SpectraError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


def _validate(args):
    if getattr(args, "L", 1) < 1:
        raise ConfigError("L must be positive")
    if args.B < 2 or args.B & (args.B - 1):
        raise ConfigError("B must be a power of two >= 2")
    if args.snr <= 0:
        raise ConfigError("snr must be positive")
    if getattr(args, "trials", 1) < 1:
        raise ConfigError("trials must be positive")
    if getattr(args, "mc_samples", 1) < 2:
        raise ConfigError("mc_samples must be at least 2")
    for r in ([args.R] if args.R is not None else []):
        if r <= 0:
            raise ConfigError("R must be positive")


if __name__ == "__main__":
    sys.exit(main())
