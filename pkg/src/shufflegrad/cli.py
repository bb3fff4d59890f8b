"""Command-line front end for reproducible experiments.

Subcommands: ``gen``, ``sgd``, ``svrg``, ``dist``, ``verify``,
``rademacher``.  Tabular traces are written as CSV, verification
summaries as JSON; every output file embeds the resolved configuration
and the package version, so feeding the same flags back reproduces the
file byte for byte.  Exit codes: 0 success, 1 runtime failure, 2 usage
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .datagen import GenSpec, generate, load, save
from .distributed import comm_cost_report, run_distributed_svrg
from .errors import ShufflegradError
from .problem import Dataset, RidgeProblem
from .rng import Rng
from .sampling import RESHUFFLE_EACH_EPOCH, SINGLE_SHUFFLE, WITH_REPLACEMENT
from .sgd import (
    FixedStep,
    InverseSqrtStep,
    SGDConfig,
    StronglyConvexStep,
    average_suboptimality_over_seeds,
    suboptimality_decomposition_check,
)
from .svrg import SVRGConfig, epoch_decrease_ratio, recommended_params, run_svrg_over_streams
from .verify import (
    ConcentrationSpec,
    FiniteVectorClass,
    LinearBallClass,
    RademacherSpec,
    central_band_peak,
    contraction_check,
    linear_ball_bound,
    matrix_concentration_check,
    permutation_identity_check,
    product_class_check,
    rademacher_estimate,
    sqrt_sum_bound_scan,
)

SAMPLER_FLAGS = {
    "no-replacement": SINGLE_SHUFFLE,
    "with-replacement": WITH_REPLACEMENT,
    "reshuffle": RESHUFFLE_EACH_EPOCH,
}

CSV_SCHEMAS = {
    "sgd": "sgd-trace-v1:t,mean_subopt,se",
    "svrg": "svrg-trace-v1:epoch,mean_subopt,se,mean_max_subopt",
    "dist": "dist-trace-v1:epoch,subopt,max_subopt",
}


def _config_line(args: argparse.Namespace, command: str) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    cfg["command"] = command
    cfg["artifact_version"] = __version__
    return cfg


def _emit(args, command: str, columns: list[str], rows, extra: dict | None = None):
    cfg = _config_line(args, command)
    print(f"resolved config: {json.dumps(cfg, sort_keys=True)}")
    if args.format == "json" or command in ("verify", "rademacher"):
        doc = {
            "config": cfg,
            "schema": CSV_SCHEMAS.get(command, f"{command}-v1"),
            "results": extra if rows is None else {
                "columns": columns,
                "rows": [[_jsonable(v) for v in row] for row in rows],
                **(extra or {}),
            },
        }
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    else:
        lines = [
            f"# shufflegrad {__version__}\n",
            f"# schema: {CSV_SCHEMAS.get(command, command)}\n",
            f"# config: {json.dumps(cfg, sort_keys=True)}\n",
        ]
        if extra:
            lines.append(f"# summary: {json.dumps(extra, sort_keys=True)}\n")
        lines.append(",".join(columns) + "\n")
        for row in rows:
            lines.append(",".join(_render(v) for v in row) + "\n")
        text = "".join(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)


def _render(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _load_problem(args) -> RidgeProblem:
    dataset = load(args.data, normalize=args.normalize)
    return RidgeProblem(dataset, alpha=args.reg)


def _cmd_gen(args) -> int:
    spec = GenSpec(
        m=args.m,
        d=args.d,
        spectrum=args.spectrum,
        decay=args.decay,
        noise=args.noise,
        signal_norm=args.signal_norm,
        seed=args.seed,
    )
    dataset = generate(spec)
    print(f"resolved config: {json.dumps(_config_line(args, 'gen'), sort_keys=True)}")
    if not args.out:
        print("gen requires --out <path>", file=sys.stderr)
        return 1
    save(dataset, args.out)
    print(f"wrote {args.out} ({dataset.m} points, dimension {dataset.d})")
    return 0


def _step_rule(args, problem):
    if args.steps == "strongly-convex":
        return StronglyConvexStep(problem.strong_convexity)
    if args.steps == "fixed":
        return FixedStep(args.eta)
    return InverseSqrtStep(args.eta)


def _cmd_sgd(args) -> int:
    problem = _load_problem(args)
    radius = args.radius if args.radius else 2.0 * max(1.0, float(np.linalg.norm(problem.wstar)))
    args.radius = radius
    config = SGDConfig(
        n_steps=args.T,
        step_rule=_step_rule(args, problem),
        radius=radius,
        sampler=SAMPLER_FLAGS[args.sampler],
        seed=args.seed,
    )
    summary = average_suboptimality_over_seeds(
        problem, config, n_seeds=args.seeds, n_jobs=args.threads
    )
    se = summary.stderr
    rows = [
        (t + 1, float(summary.mean[t]), None if se is None else float(se[t]))
        for t in range(args.T)
    ]
    _emit(args, "sgd", ["t", "mean_subopt", "se"], rows)
    return 0


def _auto_params(args, problem):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        params = recommended_params(problem, args.eps, args.c)
    for warning in caught:
        print(f"warning: {warning.message}")
    print(
        f"auto params: eta={params.step_size} T={params.epoch_len} "
        f"S={params.n_epochs} (single-shuffle rule needs m >= 2*S*T = {params.m_required})"
    )
    return params


def _cmd_svrg(args) -> int:
    code = _check_epoch_flags(args)
    if code:
        return code
    problem = _load_problem(args)
    if args.auto_params:
        params = _auto_params(args, problem)
        eta, T, S = params.step_size, params.epoch_len, params.n_epochs
        args.eta, args.T, args.S = eta, T, S
    else:
        eta, T, S = args.eta, args.T, args.S
    config = SVRGConfig(
        step_size=eta, epoch_len=T, n_epochs=S,
        sampler=SAMPLER_FLAGS[args.sampler], seed=args.seed,
    )
    traces = run_svrg_over_streams(problem, config, args.seeds, n_jobs=args.threads)
    sub = np.stack([t.suboptimality for t in traces])
    worst = np.stack([t.max_suboptimality for t in traces])
    mean = sub.mean(axis=0)
    se = sub.std(axis=0, ddof=1) / np.sqrt(args.seeds) if args.seeds > 1 else None
    rows = [
        (s + 1, float(mean[s]), None if se is None else float(se[s]), float(worst.mean(axis=0)[s]))
        for s in range(S)
    ]
    extra = {}
    if S >= 2:
        ratios = np.stack([epoch_decrease_ratio(t) for t in traces])
        extra["mean_decrease_ratio"] = float(ratios.mean())
    _emit(args, "svrg", ["epoch", "mean_subopt", "se", "mean_max_subopt"], rows, extra)
    return 0


def _check_epoch_flags(args) -> int:
    """Usage validation shared by svrg and dist; returns 2 on misuse."""
    if args.auto_params:
        if args.eps is None:
            print("--auto-params requires --eps", file=sys.stderr)
            return 2
    elif args.T is None or args.S is None:
        print("need --T and --S, or --auto-params with --eps", file=sys.stderr)
        return 2
    return 0


def _cmd_dist(args) -> int:
    code = _check_epoch_flags(args)
    if code:
        return code
    problem = _load_problem(args)
    if args.auto_params:
        params = _auto_params(args, problem)
        eta, T, S = params.step_size, params.epoch_len, params.n_epochs
        args.eta, args.T, args.S = eta, T, S
    else:
        eta, T, S = args.eta, args.T, args.S
    config = SVRGConfig(step_size=eta, epoch_len=T, n_epochs=S, seed=args.seed)
    trace, log = run_distributed_svrg(problem, args.k, config)
    report = comm_cost_report(
        log, problem.d,
        suboptimality=np.concatenate([[trace.initial_suboptimality], trace.suboptimality]),
    )
    rows = [
        (s + 1, float(trace.suboptimality[s]), float(trace.max_suboptimality[s]))
        for s in range(S)
    ]
    extra = {
        "rounds": report.rounds,
        "floats_moved": report.floats_moved,
        "rounds_per_decade": report.rounds_per_decade,
    }
    _emit(args, "dist", ["epoch", "subopt", "max_subopt"], rows, extra)
    return 0


def _random_ridge(m: int, d: int, seed: int, alpha: float = 0.25) -> RidgeProblem:
    rng = Rng(seed, 777)
    X = rng.normal(m * d).reshape(m, d)
    X /= np.linalg.norm(X, axis=1).max()
    y = np.clip(0.5 * rng.normal(m), -1.0, 1.0)
    return RidgeProblem(Dataset(X, y), alpha=alpha)


def _verify_key(args) -> dict:
    m = args.m or 5
    problem = _random_ridge(m, 2, args.seed)
    gaps = []
    for rule_id in range(args.rules):
        step = 0.05 + 0.4 * Rng(args.seed, rule_id).uniform(1)[0]

        def rule(prefix, _p=problem, _s=step):
            w = np.zeros(_p.d)
            for idx in prefix:
                w = w - _s * _p.point_gradient(idx, w)
            return _p.point_losses(w)

        for t in range(1, m + 1):
            lhs, rhs = permutation_identity_check(m, t, rule)
            gaps.append(abs(lhs - rhs))
    worst = max(gaps)
    print(f"max |lhs - rhs| over {args.rules} rules and all t: {worst:.3e}")
    return {"max_abs_gap": worst, "m": m, "rules": args.rules}


def _verify_theorem1(args) -> dict:
    m = args.m or 5
    problem = _random_ridge(m, 2, args.seed)
    worst = 0.0
    for T in range(1, m + 1):
        config = SGDConfig(
            n_steps=T,
            step_rule=StronglyConvexStep(problem.strong_convexity),
            radius=2.0 * max(1.0, float(np.linalg.norm(problem.wstar))),
        )
        res = suboptimality_decomposition_check(problem, config)
        worst = max(worst, abs(res.lhs - res.regret_term - res.prefix_suffix_term))
    print(f"max |lhs - (regret + prefix/suffix)| over T=1..{m}: {worst:.3e}")
    return {"max_abs_gap": worst, "m": m}


def _verify_rademacher_linear(args) -> dict:
    m = args.m or 100
    half = m // 2
    rng = Rng(args.seed, 99)
    X = rng.normal(m * 8).reshape(m, 8)
    X /= np.linalg.norm(X, axis=1)[:, None]
    spec = RademacherSpec(LinearBallClass(X, 1.0), (half, m - half), args.mc, seed=args.seed)
    est = rademacher_estimate(spec)
    bound = linear_ball_bound(1.0, (half, m - half))
    ok = est.value <= bound + 3 * est.stderr
    print(f"estimate {est.value:.4f} +- {est.stderr:.4f} vs bound {bound:.4f}: {'ok' if ok else 'VIOLATION'}")
    return {"estimate": est.value, "stderr": est.stderr, "bound": bound, "holds": ok}


def _verify_contraction(args) -> dict:
    rng = Rng(args.seed, 55)
    cls = FiniteVectorClass(rng.normal(12).reshape(3, 4))
    cmp = contraction_check(cls, [lambda z: 0.5 * z] * 4, 0.5, (2, 2), args.mc, seed=args.seed)
    print(f"lhs {cmp.lhs.value:.4f} rhs {cmp.rhs.value:.4f} gap {cmp.gap:.2e} holds: {cmp.within_noise()}")
    return {"lhs": cmp.lhs.value, "rhs": cmp.rhs.value, "gap": cmp.gap,
            "gap_stderr": cmp.gap_stderr, "holds": cmp.within_noise()}


def _verify_product(args) -> dict:
    rng = Rng(args.seed, 56)
    cv = FiniteVectorClass(rng.normal(12).reshape(2, 6))
    cs = FiniteVectorClass(rng.normal(12).reshape(2, 6))
    cmp = product_class_check(cv, cs, (3, 3), args.mc, seed=args.seed)
    print(f"lhs {cmp.lhs.value:.4f} rhs {cmp.rhs.value:.4f} holds: {cmp.within_noise()}")
    return {"lhs": cmp.lhs.value, "rhs": cmp.rhs.value, "gap": cmp.gap,
            "gap_stderr": cmp.gap_stderr, "holds": cmp.within_noise()}


def _verify_matrix(args) -> dict:
    m = args.m or 200
    d = 5
    rng = Rng(args.seed, 57)
    X = rng.normal(m * d).reshape(m, d)
    X /= np.linalg.norm(X, axis=1)[:, None]
    spec = ConcentrationSpec(X, 0.0, args.alpha, args.trials, seed=args.seed)
    res = matrix_concentration_check(spec)
    print(
        f"violation rate {res.violation_rate:.4f} vs bound {min(1.0, res.bound):.4f}; "
        f"central-band peak deviation {central_band_peak(res.max_deviation_profile):.4f}"
    )
    return {
        "violation_rate": res.violation_rate,
        "bound": res.bound,
        "gamma": res.gamma,
        "central_band_peak": central_band_peak(res.max_deviation_profile),
    }


def _verify_appendix_sum(args) -> dict:
    worst = sqrt_sum_bound_scan(args.m_max)
    print(f"worst ratio over m <= {args.m_max}: {worst:.6f} (bound 1)")
    return {"worst_ratio": worst, "m_max": args.m_max}


VERIFY_DISPATCH = {
    "key": _verify_key,
    "theorem1": _verify_theorem1,
    "rademacher-linear": _verify_rademacher_linear,
    "contraction": _verify_contraction,
    "product": _verify_product,
    "matrix": _verify_matrix,
    "appendix-sum": _verify_appendix_sum,
}


def _cmd_verify(args) -> int:
    results = VERIFY_DISPATCH[args.lemma](args)
    _emit(args, "verify", [], None, extra=results)
    return 0


def _cmd_rademacher(args) -> int:
    if args.cls == "linear-ball":
        if args.data:
            X = load(args.data, normalize=args.normalize).X
        else:
            rng = Rng(args.seed, 98)
            X = rng.normal(args.m * args.d).reshape(args.m, args.d)
            X /= np.linalg.norm(X, axis=1)[:, None]
        cls = LinearBallClass(X, args.radius)
        bound = linear_ball_bound(args.radius, (args.s, args.u))
    else:
        with open(args.vectors) as fh:
            cls = FiniteVectorClass(np.array(json.load(fh), dtype=float))
        bound = None
    spec = RademacherSpec(cls, (args.s, args.u), args.mc, seed=args.seed)
    est = rademacher_estimate(spec)
    print(f"estimate {est.value:.6f} +- {est.stderr:.6f}")
    results = {"estimate": est.value, "stderr": est.stderr, "mc_samples": est.n_samples}
    if bound is not None:
        results["closed_form_bound"] = bound
    _emit(args, "rademacher", [], None, extra=results)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shufflegrad",
        description="Without-replacement stochastic gradient experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def shared(p):
        p.add_argument("--seed", type=int, default=0, help="base RNG seed")
        p.add_argument("--out", type=str, default=None, help="output file path")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker threads for multi-seed runs")
        p.add_argument("--format", choices=["csv", "json"], default="csv")

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    shared(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--spectrum", choices=["uniform", "geometric"], default="uniform")
    p.add_argument("--decay", type=float, default=0.5)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--signal-norm", type=float, default=1.0, dest="signal_norm")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("sgd", help="projected SGD suboptimality trace")
    shared(p)
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--reg", type=float, default=0.1, help="ridge weight")
    p.add_argument("--sampler", choices=sorted(SAMPLER_FLAGS), default="no-replacement")
    p.add_argument("--steps", choices=["strongly-convex", "fixed", "inverse-sqrt"],
                   default="strongly-convex")
    p.add_argument("--eta", type=float, default=0.1, help="step size for fixed/inverse-sqrt")
    p.add_argument("--T", type=int, required=True, dest="T")
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--radius", type=float, default=None)
    p.set_defaults(func=_cmd_sgd)

    p = sub.add_parser("svrg", help="variance-reduced epochs")
    shared(p)
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--reg", type=float, default=0.1)
    p.add_argument("--sampler", choices=sorted(SAMPLER_FLAGS), default="no-replacement")
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--T", type=int, default=None, dest="T")
    p.add_argument("--S", type=int, default=None, dest="S")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--c", type=float, default=10.0)
    p.add_argument("--auto-params", action="store_true", dest="auto_params")
    p.add_argument("--seeds", type=int, default=1)
    p.set_defaults(func=_cmd_svrg)

    p = sub.add_parser("dist", help="simulated distributed run")
    shared(p)
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--reg", type=float, default=0.1)
    p.add_argument("--k", type=int, required=True, help="number of machines")
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--T", type=int, default=None, dest="T")
    p.add_argument("--S", type=int, default=None, dest="S")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--c", type=float, default=10.0)
    p.add_argument("--auto-params", action="store_true", dest="auto_params")
    p.set_defaults(func=_cmd_dist)

    p = sub.add_parser("verify", help="run a verification oracle")
    shared(p)
    p.add_argument("--lemma", choices=sorted(VERIFY_DISPATCH), required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--rules", type=int, default=10)
    p.add_argument("--mc", type=int, default=10000)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--alpha", type=float, default=12.0)
    p.add_argument("--m-max", type=int, default=2000, dest="m_max")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("rademacher", help="Monte-Carlo complexity estimate")
    shared(p)
    p.add_argument("--class", choices=["linear-ball", "finite"], default="linear-ball",
                   dest="cls")
    p.add_argument("--data", type=str, default=None)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--vectors", type=str, default=None, help="JSON file for the finite class")
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--s", type=int, default=50)
    p.add_argument("--u", type=int, default=50)
    p.add_argument("--mc", type=int, default=10000)
    p.set_defaults(func=_cmd_rademacher)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ShufflegradError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
