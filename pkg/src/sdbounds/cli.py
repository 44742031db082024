"""Command-line front end.

Subcommands ``gen``, ``params``, ``sweep`` and ``verify`` read a JSON config
(``--config``), use ``--seed`` as the single source of randomness, and write
to ``--out``. Exit codes: 0 ok, 1 invariant failure, 2 invalid input,
3 generation failure, 4 infeasible parameters, 5 non-convergence.
"""

import argparse
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import concentration, kalman, oracles, symmat
from .ensemble import SensorPool, expected_info, rho_min
from .errors import (
    GenerationFailed,
    InfeasibleParameters,
    InvalidInput,
    NoConvergence,
    SdBoundsError,
)
from .harness import (
    ExperimentConfig,
    Instance,
    build_fig1_instance,
    resolve_distribution,
    run_coverage,
    sweep_gamma,
    sweep_zeta,
    write_sweep_csv,
)

EXIT_OK, EXIT_INVARIANT, EXIT_INPUT, EXIT_GENERATION, EXIT_INFEASIBLE, EXIT_NUMERIC = range(6)

_num = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "d": _pos_int,
        "eta": _pos_int,
        "gamma": _pos_int,
        "gammas": {"type": "array", "items": _pos_int, "minItems": 1},
        "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "zetas": {"type": "array", "items": _num, "minItems": 1},
        "sigma2": {"type": "number", "exclusiveMinimum": 0},
        "q_scale": {"type": "number", "exclusiveMinimum": 0},
        "trials": _pos_int,
        "distribution": {
            "oneOf": [
                {"enum": ["uniform", "min_rho"]},
                {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
            ]
        },
        "mode": {"enum": ["fig1", "zeta", "gamma"]},
    },
}


def load_config(path):
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except (OSError, json.JSONDecodeError, jsonschema.ValidationError) as exc:
        raise InvalidInput(f"bad config {path}: {getattr(exc, 'message', exc)}") from exc
    return cfg


def _experiment(cfg, args):
    return ExperimentConfig(
        d=cfg.get("d", 3), eta=cfg.get("eta", 420), gamma=cfg.get("gamma", 240),
        gammas=tuple(cfg.get("gammas", ())), delta=cfg.get("delta", 0.05),
        zetas=tuple(cfg.get("zetas", (0.0,))), sigma2=cfg.get("sigma2", 0.5),
        q_scale=cfg.get("q_scale", 0.5), trials=cfg.get("trials", 2000), seed=args.seed,
        distribution=cfg.get("distribution", "uniform"), threads=args.threads,
    )


def _instance(cfg, args):
    if args.instance:
        root = Path(args.instance)
        try:
            system = kalman.LtiSystem.from_json((root / "system.json").read_text())
            pool = SensorPool.from_json((root / "pool.json").read_text())
        except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"cannot read instance from {root}: {exc}") from exc
        if system.d != pool.d:
            raise InvalidInput(f"system has d={system.d}, pool has d={pool.d}")
        return Instance(system, pool, 0)
    return build_fig1_instance(args.seed, cfg.get("d", 3), cfg.get("eta", 420),
                               cfg.get("sigma2", 0.5), cfg.get("q_scale", 0.5))


def _emit(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v))


def cmd_gen(args):
    cfg = load_config(args.config)
    inst = _instance(cfg, argparse.Namespace(**{**vars(args), "instance": None}))
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "system.json").write_text(json.dumps(inst.system.to_dict(), indent=2) + "\n")
    (out / "pool.json").write_text(json.dumps(inst.pool.to_dict(), indent=2) + "\n")
    print(f"wrote {out / 'system.json'} and {out / 'pool.json'} "
          f"(d={inst.pool.d}, eta={inst.pool.eta}, rejections={inst.rejections})")
    return EXIT_OK


def params_report(pool, p, gamma, delta, zetas):
    """Parameter solutions for both bounds; infeasibility is reported, not raised."""
    ez = expected_info(pool, p)
    rho = rho_min(pool, p)
    d = pool.d
    rep = {"rho": rho, "gamma": gamma, "delta": delta, "d": d,
           "kappa_aw": concentration.sample_complexity_aw(d, delta, rho),
           "lambda_min_ez": float(symmat.min_eig(ez))}
    try:
        rep["epsilon_aw"] = concentration.solve_epsilon_aw(d, delta, gamma, rho)
        rep["feasible_aw"] = True
    except InfeasibleParameters as exc:
        rep.update(epsilon_aw=None, feasible_aw=False, reason_aw=type(exc).__name__,
                   detail_aw=str(exc))
    per = []
    for z in zetas:
        row = {"zeta": z}
        try:
            eps = concentration.solve_epsilon_gen(d, delta, gamma, rho, z)
            r = concentration.r_factor(rho, z)
            row.update(epsilon_gen=eps, r=r, feasible_gen=True,
                       kappa_gen=concentration.sample_complexity_gen(d, delta, rho, z),
                       nontriviality_threshold=concentration.nontriviality_threshold(d, delta, rho, z),
                       lower_trivial=(1.0 - r * eps) <= 0)
        except InfeasibleParameters as exc:
            row.update(epsilon_gen=None, feasible_gen=False, reason_gen=type(exc).__name__,
                       detail_gen=str(exc))
        per.append(row)
    rep.update(per[0])
    rep["per_zeta"] = per
    return rep


def cmd_params(args):
    cfg = load_config(args.config)
    inst = _instance(cfg, args)
    p = resolve_distribution(inst.pool, cfg.get("distribution", "uniform"))
    rep = params_report(inst.pool, p, cfg.get("gamma", 240), cfg.get("delta", 0.05),
                        list(cfg.get("zetas", [0.0])))
    _emit(rep, args.out)
    if not all(row["feasible_gen"] for row in rep["per_zeta"]):
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_sweep(args):
    cfg = load_config(args.config)
    inst = _instance(cfg, args)
    exp = _experiment(cfg, args)
    mode = cfg.get("mode", "gamma" if "gammas" in cfg else "zeta")
    rows = sweep_gamma(exp, inst) if mode == "gamma" else sweep_zeta(exp, inst)
    text = write_sweep_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    feasible = [r for r in rows if r.lam_U_gen is not None]
    best = min(feasible, key=lambda r: r.lam_U_gen) if feasible else None
    summary = f"sweep[{mode}]: {len(rows)} rows"
    if best is not None:
        summary += f"; tightest lam_U_gen={best.lam_U_gen:.6g} at gamma={best.gamma}, zeta={best.zeta}"
    print(summary, file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def oracle_suite(pool, p, rho, seed=0, n=20):
    """Run the appendix oracles on the instance plus ``n`` randomized instances each."""
    rng = np.random.default_rng(seed)
    d = pool.d
    results = {}

    def rand_psd(k):
        G = rng.standard_normal((k, d))
        return G.T @ G / k

    results["exp_identity"] = all(oracles.exp_identity_check(rand_psd(d + 1)) for _ in range(n))
    sandwich = []
    for _ in range(n):
        X = symmat.sym(rng.standard_normal((d, d)))
        sandwich.append(oracles.exp_sandwich_check(X / max(1.0, symmat.spectral_norm(X))))
    results["exp_sandwich"] = all(sandwich)
    dists = []
    for _ in range(n):
        k = int(rng.integers(1, 6))
        Y = np.stack([rand_psd(int(rng.integers(1, d + 1))) for _ in range(k)])
        dists.append(oracles.FiniteDist.make(Y, rng.dirichlet(np.ones(k))))
    results["centered_norm"] = all(
        oracles.centered_norm_check(D, float(symmat.max_eig(D.support).max()) + 1e-12) for D in dists)
    res = oracles.whitening_residuals(pool, p)
    results["whitening"] = max(res.values()) <= 1e-9
    results["mgf_bound"] = all(oracles.mgf_bound_check(pool, p, rho, z, lam)
                               for z in (0.0, 0.5, 1.0) for lam in np.linspace(0, 1, 11))
    return results


def cmd_verify(args):
    cfg = load_config(args.config)
    inst = _instance(cfg, args)
    exp = _experiment(cfg, args)
    p = resolve_distribution(inst.pool, exp.distribution)
    rho = rho_min(inst.pool, p)
    checks = {}
    checks.update({f"oracle_{k}": v for k, v in oracle_suite(inst.pool, p, rho, args.seed).items()})
    checks["detectable_each_sensor"] = all(kalman.detectability_check(inst.system.A, c)
                                           for c in inst.pool.C)
    rep = run_coverage(exp, inst)
    thr = rep.threshold
    checks["coverage_valid_run"] = rep.valid
    checks["coverage_aw_two_sided"] = rep.aw.freq_two_sided >= thr
    checks["coverage_aw_ss"] = rep.aw.freq_ss >= thr
    checks["implication_aw"] = rep.aw.implication_violations == 0
    for g in rep.gen:
        tag = f"zeta={g.zeta:g}"
        checks[f"coverage_gen_lower[{tag}]"] = g.freq_lower >= thr
        checks[f"coverage_gen_upper[{tag}]"] = g.freq_upper >= thr
        checks[f"coverage_gen_ss_lower[{tag}]"] = g.freq_ss_lower >= thr
        if g.freq_ss_upper is not None:
            checks[f"coverage_gen_ss_upper[{tag}]"] = g.freq_ss_upper >= thr
        checks[f"implication_gen[{tag}]"] = g.implication_violations == 0
    checks = {k: bool(v) for k, v in checks.items()}
    out = {"passed": all(checks.values()), "checks": checks, "coverage": rep.to_dict()}
    _emit(out, args.out)
    return EXIT_OK if out["passed"] else EXIT_INVARIANT


COMMANDS = {"gen": cmd_gen, "params": cmd_params, "sweep": cmd_sweep, "verify": cmd_verify}


def build_parser():
    parser = argparse.ArgumentParser(prog="sdbounds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="output path (directory for gen)")
        sp.add_argument("--seed", type=int, default=1, help="top-level seed (default 1)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for trials")
        if name != "gen":
            sp.add_argument("--instance", help="directory holding system.json and pool.json")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except InvalidInput as exc:
        _report(exc, EXIT_INPUT)
        return EXIT_INPUT
    except GenerationFailed as exc:
        _report(exc, EXIT_GENERATION)
        return EXIT_GENERATION
    except InfeasibleParameters as exc:
        _report(exc, EXIT_INFEASIBLE)
        return EXIT_INFEASIBLE
    except NoConvergence as exc:
        _report(exc, EXIT_NUMERIC)
        return EXIT_NUMERIC
    except SdBoundsError as exc:
        _report(exc, EXIT_INVARIANT)
        return EXIT_INVARIANT


def _report(exc, code):
    json.dump({"error": type(exc).__name__, "message": str(exc), "exit_code": code}, sys.stderr)
    sys.stderr.write("\n")


if __name__ == "__main__":
    sys.exit(main())
