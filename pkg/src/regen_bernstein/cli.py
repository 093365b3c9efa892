"""Command-line entry point: simulate | bounds | variance | verify | oracle.

Runs are config-driven and reproducible: JSON config plus flag
overrides (flags win), a master seed from --seed, the config, or
REGEN_BERNSTEIN_SEED (in that order, default 0), and deterministic
atomic outputs with no timestamps. Exit codes: 0 success, 1 validation
error, 2 guard violation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from ._backend import BACKEND_ENV, backend_choice
from ._rng import TAG_PATH, TAG_SPLIT, stream_description, substream
from .bounds import EVALUATORS, BernsteinParams, BoundValue, thm_bi, thm_bi2
from .chain_models import load_chain, make_chain, resolve_functional
from .errors import GuardError
from .split_regen import (simulate_split, trajectory_summary,
                          trajectory_to_csv, write_json)
from .variance import (sigma_inf_from_excursions, sigma_mrv_batch,
                       sigma_mrv_cov_series, sigma_mrv_exact,
                       sigma_mrv_regenerative)
from .verify import (collect_excursions, exact_tail, report_to_dict,
                     run_verification, tail_curve_to_dict, write_curves_csv)

_FORMULAS_DEFAULT = ("thm_bi", "thm_bi2", "thm_sbi")


# ---------------------------------------------------------------------------
# option plumbing
# ---------------------------------------------------------------------------


def _parse_value(text: str):
    low = text.strip().lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text.strip()


def _load_config(path):
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


def _opt(args, cfg, key, default=None):
    """Flag value if given, else config value, else default."""
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    return cfg.get(key, default)


def _resolve_seed(args, cfg) -> int:
    if args.seed is not None:
        return int(args.seed)
    if "seed" in cfg:
        return int(cfg["seed"])
    env = os.environ.get("REGEN_BERNSTEIN_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"REGEN_BERNSTEIN_SEED must be an integer, got {env!r}")
    return 0


def _resolve_backend(args, cfg):
    requested = _opt(args, cfg, "backend")
    if requested is not None and requested not in ("auto", "numba", "numpy"):
        raise ValueError(f"unknown backend {requested!r}")
    if requested in ("numba", "numpy"):
        return requested
    return None  # defer to the environment resolution in the kernels


def _build_chain(args, cfg):
    chain_cfg = cfg.get("chain", {})
    if isinstance(chain_cfg, str):
        chain_cfg = {"name": chain_cfg}
    path = getattr(args, "chain_file", None) or chain_cfg.get("path")
    if path:
        return load_chain(path)
    name = getattr(args, "chain", None) or chain_cfg.get("name")
    if not name:
        raise ValueError("no chain given: pass --chain NAME, --chain-file "
                         "PATH, or a chain entry in the config")
    params = {k: v for k, v in chain_cfg.items() if k not in ("name", "path")}
    for key in ("a", "b", "delta", "precision"):
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    try:
        return make_chain(name, **params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for chain {name!r}: {exc}")


def _functional_spec(args, cfg):
    spec = _opt(args, cfg, "f", "indicator_centered")
    if isinstance(spec, dict) and "values" in spec:
        return np.asarray(spec["values"], dtype=np.float64)
    return spec


def _build_grid(args, cfg, n: int) -> np.ndarray:
    spec = getattr(args, "t_grid", None)
    if spec is None:
        spec = cfg.get("t_grid")
    if spec is not None:
        if isinstance(spec, str):
            values = [float(x) for x in spec.split(",") if x.strip()]
        else:
            values = [float(x) for x in spec]
        if not values:
            raise ValueError("empty t grid")
        return np.asarray(values, dtype=np.float64)
    t_max = float(_opt(args, cfg, "t_max", 3.0 * math.sqrt(max(n, 1))))
    points = int(_opt(args, cfg, "t_points", 50))
    if t_max <= 0.0 or points < 1:
        raise ValueError("t grid needs t_max > 0 and at least one point")
    return np.linspace(0.0, t_max, points)


def _out_path(out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _base_metadata(command: str, seed: int, backend) -> dict:
    return {
        "command": command,
        "seed": int(seed),
        "rng": stream_description(seed),
        "backend": backend if backend is not None else backend_choice(),
        "backend_env": BACKEND_ENV,
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args, cfg):
    chain = _build_chain(args, cfg)
    n = _opt(args, cfg, "n")
    if n is None:
        raise ValueError("simulate needs a horizon: pass --n")
    seed = _resolve_seed(args, cfg)
    backend = _resolve_backend(args, cfg)
    init = _opt(args, cfg, "init", "pi")
    extend = bool(getattr(args, "extend", False) or cfg.get("extend", False))
    f_spec = _opt(args, cfg, "f")
    rng = substream(seed, TAG_SPLIT, 0)
    traj = simulate_split(chain, init, int(n), rng,
                          extend_to_regeneration=extend, backend=backend)
    f_eval = None
    if f_spec is not None:
        fspec = resolve_functional(chain, f_spec)
        f_eval = fspec.values if fspec.values is not None else fspec.fn
    payload = _base_metadata("simulate", seed, backend)
    payload.update({
        "chain": chain.label(),
        "n": int(n),
        "init": str(init),
        "extend": extend,
        "summary": trajectory_summary(traj, f_eval),
    })
    out = _opt(args, cfg, "out")
    if out:
        trajectory_to_csv(traj, _out_path(out, "trajectory.csv"))
        write_json(payload, _out_path(out, "summary.json"))
    return payload, None


def _bounds_param_bundle(kv: dict) -> BernsteinParams:
    names = ("a", "b", "c", "d", "alpha", "sigma2_mrv", "delta", "pi_C", "m")
    missing = [name for name in names if name not in kv]
    if missing:
        raise ValueError(f"missing parameters {missing} for the bundle bound")
    fields = {name: kv.pop(name) for name in names}
    for opt_name in ("D", "f_sup"):
        if opt_name in kv:
            fields[opt_name] = kv.pop(opt_name)
    return BernsteinParams(**fields)


def cmd_bounds(args, cfg):
    formula = args.formula or cfg.get("formula")
    if not formula:
        raise ValueError("bounds needs a formula name")
    kv = dict(cfg.get("args", {}))
    for item in args.pairs:
        if "=" not in item:
            raise ValueError(f"expected key=value, got {item!r}")
        key, _, raw = item.partition("=")
        kv[key.strip()] = _parse_value(raw)
    shown_args = dict(sorted(kv.items()))
    if formula in ("thm_bi", "thm_bi2"):
        params = _bounds_param_bundle(kv)
        n = kv.pop("n", None)
        t = kv.pop("t", None)
        if n is None or t is None:
            raise ValueError(f"{formula} needs n and t")
        if formula == "thm_bi":
            result = thm_bi(params, n, t)
        else:
            result = thm_bi2(params, n, kv.pop("p", 2.0 / 3.0), t)
        if kv:
            raise ValueError(f"unknown arguments {sorted(kv)} for {formula}")
    else:
        fn = EVALUATORS.get(formula)
        if fn is None:
            choices = sorted(set(EVALUATORS) | {"thm_bi", "thm_bi2"})
            raise ValueError(f"unknown formula {formula!r}; choose from {choices}")
        try:
            result = fn(**kv)
        except TypeError as exc:
            raise ValueError(f"bad arguments for {formula}: {exc}")
    payload = {
        "command": "bounds",
        "formula": formula,
        "args": shown_args,
    }
    if isinstance(result, BoundValue):
        payload.update({"value": float(result), "raw": result.raw,
                        "flags": list(result.flags)})
    elif isinstance(result, tuple):
        payload["value"] = [float(v) for v in result]
    else:
        payload["value"] = float(result)
    out = _opt(args, cfg, "out")
    if out:
        write_json(payload, _out_path(out, "bounds.json"))
    csv_text = None
    if _opt(args, cfg, "format") == "csv":
        value = payload["value"]
        values = value if isinstance(value, list) else [value]
        csv_text = "formula,value\n" + "\n".join(
            f"{formula},{v!r}" for v in values) + "\n"
    return payload, csv_text


def _estimate_dict(est) -> dict:
    return {
        "kind": est.kind,
        "value": est.value,
        "se": est.se,
        "n_samples": est.n_samples,
        "raw_value": est.raw_value,
        "detail": est.detail,
    }


def cmd_variance(args, cfg):
    chain = _build_chain(args, cfg)
    f_spec = _functional_spec(args, cfg)
    method = _opt(args, cfg, "method", "exact")
    seed = _resolve_seed(args, cfg)
    backend = _resolve_backend(args, cfg)
    payload = _base_metadata("variance", seed, backend)
    payload.update({"chain": chain.label(), "method": method})
    fspec = resolve_functional(chain, f_spec)
    payload["functional"] = fspec.name
    if method == "exact":
        payload["value"] = sigma_mrv_exact(chain, fspec)
    elif method == "cov-series":
        payload["value"] = sigma_mrv_cov_series(chain, fspec)
    elif method == "regenerative":
        n_regen = int(_opt(args, cfg, "n_regen", 20000))
        chi, gaps = collect_excursions(chain, fspec, n_regen, seed,
                                       backend=backend)
        payload["estimate"] = _estimate_dict(sigma_mrv_regenerative(chi, gaps))
        payload["excursion_variance"] = _estimate_dict(
            sigma_inf_from_excursions(chi))
        payload["n_regen"] = n_regen
    elif method == "batch":
        n = _opt(args, cfg, "n")
        if n is None:
            raise ValueError("batch variance needs a series length: pass --n")
        n = int(n)
        x0 = _opt(args, cfg, "x0")
        if x0 is None:
            if chain.is_finite:
                x0 = int(np.flatnonzero(np.asarray(
                    chain.minorization.small_set, dtype=bool))[0])
            else:
                x0 = 0.0
        batch_length = _opt(args, cfg, "batch_length")
        if batch_length is None:
            batch_length = max(1, int(round(math.sqrt(n) / 2.0)))
        from .chain_models import sample_path
        states = sample_path(chain, x0, n, substream(seed, TAG_PATH, 0),
                             backend=backend)
        values = (fspec.values[np.asarray(states, dtype=np.int64)]
                  if fspec.values is not None
                  else np.asarray(fspec.fn(np.asarray(states, dtype=np.float64))))
        payload["estimate"] = _estimate_dict(
            sigma_mrv_batch(values, int(batch_length)))
        payload.update({"n": n, "batch_length": int(batch_length)})
    else:
        raise ValueError(f"unknown variance method {method!r}; choose from "
                         "exact, cov-series, regenerative, batch")
    out = _opt(args, cfg, "out")
    if out:
        write_json(payload, _out_path(out, "variance.json"))
    csv_text = None
    if _opt(args, cfg, "format") == "csv":
        if "value" in payload:
            csv_text = f"method,value\n{method},{payload['value']!r}\n"
        else:
            est = payload["estimate"]
            csv_text = ("method,value,se\n"
                        f"{method},{est['value']!r},{est['se']!r}\n")
    return payload, csv_text


def cmd_verify(args, cfg):
    chain = _build_chain(args, cfg)
    f_spec = _functional_spec(args, cfg)
    n = _opt(args, cfg, "n")
    if n is None:
        raise ValueError("verify needs a horizon: pass --n")
    n = int(n)
    seed = _resolve_seed(args, cfg)
    backend = _resolve_backend(args, cfg)
    grid = _build_grid(args, cfg, n)
    formulas = _opt(args, cfg, "formulas", None)
    if formulas is None:
        formulas = _FORMULAS_DEFAULT
    elif isinstance(formulas, str):
        formulas = tuple(x.strip() for x in formulas.split(",") if x.strip())
    else:
        formulas = tuple(formulas)
    fit_options = {}
    for key in ("safety", "n_excursions", "n_first_blocks"):
        value = _opt(args, cfg, key)
        if value is not None:
            fit_options[key] = value
    exact = bool(getattr(args, "exact", False) or cfg.get("exact", False))
    structure = bool(getattr(args, "structure", False)
                     or cfg.get("structure", False))
    report = run_verification(
        chain, f_spec, n=n, t_grid=grid, seed=seed,
        init=_opt(args, cfg, "init", "pi"),
        replicas=int(_opt(args, cfg, "replicas", 100000)),
        formulas=formulas, z=float(_opt(args, cfg, "z", 3.0)),
        exact=exact, x0=_opt(args, cfg, "x0"),
        p=float(_opt(args, cfg, "p", 2.0 / 3.0)),
        alpha=float(_opt(args, cfg, "alpha", 1.0)),
        threads=int(_opt(args, cfg, "threads", 1)),
        backend=backend, fit_options=fit_options, structure=structure)
    payload = dict(_base_metadata("verify", seed, backend))
    payload.update(report_to_dict(report))
    out = _opt(args, cfg, "out")
    if out:
        write_json(payload, _out_path(out, "report.json"))
        write_curves_csv(report, _out_path(out, "curves.csv"))
    csv_text = None
    if _opt(args, cfg, "format") == "csv":
        names = sorted(report.curves)
        lines = ["t,estimate,se," + ",".join(f"bound_{x}" for x in names)]
        tail = report.tail
        for j in range(len(tail)):
            row = [repr(float(tail.t[j])), repr(float(tail.estimate[j])),
                   "" if tail.se is None else repr(float(tail.se[j]))]
            row.extend(repr(float(report.curves[x].values[j])) for x in names)
            lines.append(",".join(row))
        csv_text = "\n".join(lines) + "\n"
    return payload, csv_text


def cmd_oracle(args, cfg):
    chain = _build_chain(args, cfg)
    f_spec = _functional_spec(args, cfg)
    n = _opt(args, cfg, "n")
    if n is None:
        raise ValueError("oracle needs a horizon: pass --n")
    n = int(n)
    seed = _resolve_seed(args, cfg)
    grid = _build_grid(args, cfg, n)
    x0 = _opt(args, cfg, "x0")
    if x0 is None:
        if not chain.is_finite:
            raise ValueError("exact tails need a finite chain")
        x0 = int(np.flatnonzero(np.asarray(
            chain.minorization.small_set, dtype=bool))[0])
    tail = exact_tail(chain, f_spec, int(x0), n, grid)
    payload = {
        "command": "oracle",
        "chain": chain.label(),
        "functional": resolve_functional(chain, f_spec).name,
        "x0": int(x0),
        "n": n,
        "seed": int(seed),
        "tail": tail_curve_to_dict(tail),
    }
    out = _opt(args, cfg, "out")
    csv_text = "t,estimate\n" + "".join(
        f"{float(tj)!r},{float(pj)!r}\n"
        for tj, pj in zip(tail.t, tail.estimate))
    if out:
        write_json(payload, _out_path(out, "oracle.json"))
    if _opt(args, cfg, "format") != "csv":
        csv_text = None
    return payload, csv_text


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--seed", type=int,
                        help="master seed (fallback: config, then "
                             "REGEN_BERNSTEIN_SEED, then 0)")
    common.add_argument("--replicas", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--out", help="output directory for report files")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--backend", choices=("auto", "numba", "numpy"))

    chain_opts = argparse.ArgumentParser(add_help=False)
    chain_opts.add_argument("--chain", help="built-in chain name")
    chain_opts.add_argument("--chain-file", help="chain JSON file")
    chain_opts.add_argument("--a", type=float)
    chain_opts.add_argument("--b", type=float)
    chain_opts.add_argument("--delta", type=float)
    chain_opts.add_argument("--precision", type=int)
    chain_opts.add_argument("--f", help="functional name")

    grid_opts = argparse.ArgumentParser(add_help=False)
    grid_opts.add_argument("--t-grid", help="comma-separated t values")
    grid_opts.add_argument("--t-max", type=float)
    grid_opts.add_argument("--t-points", type=int)

    parser = argparse.ArgumentParser(
        prog="regen-bernstein",
        description="Regenerative simulation and concentration-bound "
                    "verification for Markov chains")
    sub = parser.add_subparsers(dest="command")

    p_sim = sub.add_parser("simulate", parents=[common, chain_opts],
                           help="simulate the split chain")
    p_sim.add_argument("--n", type=int)
    p_sim.add_argument("--init", type=_parse_value)
    p_sim.add_argument("--extend", action="store_true",
                       help="extend to the first regeneration covering n")

    p_bounds = sub.add_parser("bounds", parents=[common],
                              help="evaluate a closed-form bound")
    p_bounds.add_argument("formula", nargs="?")
    p_bounds.add_argument("pairs", nargs="*", metavar="key=value")

    p_var = sub.add_parser("variance", parents=[common, chain_opts],
                           help="asymptotic variance estimates")
    p_var.add_argument("--method",
                       choices=("exact", "cov-series", "regenerative", "batch"))
    p_var.add_argument("--n", type=int)
    p_var.add_argument("--n-regen", type=int)
    p_var.add_argument("--batch-length", type=int)
    p_var.add_argument("--x0", type=_parse_value)

    p_verify = sub.add_parser("verify", parents=[common, chain_opts, grid_opts],
                              help="tail estimation and bound domination")
    p_verify.add_argument("--n", type=int)
    p_verify.add_argument("--init", type=_parse_value)
    p_verify.add_argument("--exact", action="store_true",
                          help="exact enumeration instead of Monte Carlo")
    p_verify.add_argument("--x0", type=_parse_value)
    p_verify.add_argument("--formulas", help="comma-separated bound names")
    p_verify.add_argument("--z", type=float)
    p_verify.add_argument("--p", type=float)
    p_verify.add_argument("--alpha", type=float)
    p_verify.add_argument("--safety", type=float)
    p_verify.add_argument("--n-excursions", type=int)
    p_verify.add_argument("--n-first-blocks", type=int)
    p_verify.add_argument("--structure", action="store_true",
                          help="attach block-structure test results")

    p_oracle = sub.add_parser("oracle", parents=[common, chain_opts, grid_opts],
                              help="exact tails on small finite chains")
    p_oracle.add_argument("--n", type=int)
    p_oracle.add_argument("--x0", type=_parse_value)

    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "bounds": cmd_bounds,
    "variance": cmd_variance,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; that is a validation error here
        return 0 if (exc.code or 0) == 0 else 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        cfg = _load_config(args.config)
        payload, csv_text = _COMMANDS[args.command](args, cfg)
    except GuardError as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if csv_text is not None:
        sys.stdout.write(csv_text)
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
