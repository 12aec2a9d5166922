"""Command-line front end.

Exit codes: 0 success, 1 a verification check failed, 2 bad parameters,
3 I/O or format error, 4 a required artifact (e.g. the secret sidecar) is missing.
"""

import argparse
import json
import math
import sys
from pathlib import Path

from . import _accel
from .dataset_io import DatasetFormatError, MissingSecretError, read_dataset, read_manifest, read_secret, secret_path_for, write_dataset
from .instance import CLWEParams, EmbeddingSpec, MixtureParams, generate_mixture, generate_null, secret_for_seed
from .samplers import ParameterError, default_alpha, default_delta

EXIT_OK, EXIT_CHECK, EXIT_PARAM, EXIT_IO, EXIT_MISSING = 0, 1, 2, 3, 4


def _add_params(ap):
    g = ap.add_argument_group("instance parameters")
    g.add_argument("--n", type=int, default=16)
    g.add_argument("--gamma", type=float, help="default 2 sqrt(n)")
    g.add_argument("--beta", type=float, help="CLWE noise width, default 1/n")
    g.add_argument("--delta", type=float, help="rejection width, default sqrt(3) beta")
    g.add_argument("--alpha", type=float, help="truncation radius, default gamma / (10 (gamma^2 + out_beta^2))")
    g.add_argument("--c-plus", type=float, default=0.0)
    g.add_argument("--c-minus", type=float, default=0.5)
    g.add_argument("--form", choices=("closed", "conditional"), default="closed")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=int, default=1)


def resolve(args):
    """Materialise every default so the run can be reproduced from its output alone."""
    n = args.n
    gamma = args.gamma if args.gamma is not None else 2 * math.sqrt(n)
    beta = args.beta if args.beta is not None else 1.0 / n
    delta = args.delta if args.delta is not None else default_delta(beta)
    out_beta = math.hypot(beta, delta)
    alpha = args.alpha if args.alpha is not None else default_alpha(gamma, out_beta)
    cfg = {
        "n": n, "gamma": gamma, "beta": beta, "delta": delta, "out_beta": out_beta,
        "alpha": alpha, "c_plus": args.c_plus, "c_minus": args.c_minus, "form": args.form,
        "seed": args.seed, "threads": args.threads, "backend": _accel.backend_name(),
    }
    for key in ("subcommand", "mode", "m", "d", "tau", "source", "deg", "trials", "learner", "quick"):
        if hasattr(args, key):
            cfg[key] = getattr(args, key)
    return cfg


def mixture_from_config(cfg, w=None):
    w = secret_for_seed(cfg["n"], cfg["seed"]) if w is None else w
    base = CLWEParams(cfg["n"], cfg["gamma"], cfg["beta"], w)
    return MixtureParams(base, cfg["out_beta"], cfg["alpha"], cfg["c_plus"], cfg["c_minus"], cfg["form"])


def _emit_config(cfg):
    print("config " + json.dumps(cfg, sort_keys=True))


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


def cmd_generate(args):
    cfg = resolve(args)
    _emit_config(cfg)
    if cfg["gamma"] < 2 * math.sqrt(cfg["n"]):
        _warn(f"gamma = {cfg['gamma']:.6g} is below 2 sqrt(n) = {2 * math.sqrt(cfg['n']):.6g}")
    if args.mode == "null":
        ds = generate_null(cfg["n"], args.m, cfg["seed"], args.threads)
    else:
        p = mixture_from_config(cfg)
        if args.unsafe:
            if p.margin() <= 0:
                _warn("interval families overlap; generating anyway (--unsafe)")
        else:
            p.check_disjoint()
        ds = generate_mixture(p, args.m, cfg["seed"], args.threads, source=args.source, check=not args.unsafe)
    # thread count and backend never change the bytes, so keep them out of the file
    ds.manifest.extra["run_config"] = {k: v for k, v in cfg.items() if k not in ("threads", "backend")}
    write_dataset(ds, args.out, secret=not args.blind)
    print(f"wrote {args.out} ({ds.manifest.mode}, m={ds.manifest.m}, n={ds.manifest.n})")
    print(f"manifest sha256 {ds.manifest.digest()}")
    return EXIT_OK


def _load_params(args):
    """Parameters and secret either from a dataset (needs the sidecar) or from flags."""
    if args.dataset:
        man = read_manifest(args.dataset)
        if man.mode != "planted":
            raise ParameterError("the oracle needs a planted dataset")
        w = read_secret(secret_path_for(args.dataset), man)
        cfg = dict(man.extra.get("run_config", {}))
        cfg.update(n=man.n, gamma=man.gamma, beta=man.beta, out_beta=man.out_beta, alpha=man.alpha,
                   c_plus=man.c_plus, c_minus=man.c_minus, form=man.form, seed=man.seed)
        return cfg, mixture_from_config(cfg, w)
    cfg = resolve(args)
    return cfg, mixture_from_config(cfg)


def cmd_oracle(args):
    from .oracle import ltf_weights, oracle_error_bound, oracle_error_exact, oracle_for, save_oracle

    cfg, p = _load_params(args)
    cfg["d"] = args.d
    _emit_config(cfg)
    o = oracle_for(p, args.d)
    exact = oracle_error_exact(p, args.d)
    bound = oracle_error_bound(p, args.d)
    print(f"oracle degree {o.degree}, roots in [{o.roots[0]:.6g}, {o.roots[-1]:.6g}]")
    print(f"exact error {exact:.6e}  tail bound exp(-pi d^2/S^2) = {bound:.6e}")
    if args.out:
        save_oracle(o, args.out)
        print(f"wrote {args.out}")
    if args.export_ltf:
        deg = args.deg if args.deg is not None else o.degree
        try:
            spec = EmbeddingSpec(p.n, deg)
        except ValueError as exc:
            raise ParameterError(str(exc)) from exc
        lw = ltf_weights(o, spec)
        doc = lw.to_dict()
        doc["oracle"] = o.to_dict()
        Path(args.export_ltf).write_text(json.dumps(doc, sort_keys=True))
        print(f"wrote {args.export_ltf} ({spec.M} weights, degree {deg})")
    return EXIT_OK


def cmd_verify(args):
    from .verify import DEFAULT_GRID, SECTIONS, verify_all

    cfg = {"subcommand": "verify", "quick": args.quick, "seed": args.seed, "threads": args.threads,
           "backend": _accel.backend_name()}
    grid = DEFAULT_GRID
    if args.grid:
        grid = json.loads(Path(args.grid).read_text())
    sections = tuple(args.sections.split(",")) if args.sections else None
    if sections:
        unknown = set(sections) - set(SECTIONS) - {"grid"}
        if unknown:
            raise ParameterError(f"unknown sections {sorted(unknown)}")
    cfg["sections"] = list(sections or SECTIONS)
    _emit_config(cfg)
    rep = verify_all(grid, quick=args.quick, seed=args.seed, threads=args.threads, only=sections)
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: measured {c.measured:.6g} ({c.claimed})")
    if args.report:
        Path(args.report).write_text(rep.to_json())
        print(f"wrote {args.report}")
    print("all checks passed" if rep.passed else f"{len(rep.failed())} check(s) failed")
    return EXIT_OK if rep.passed else EXIT_CHECK


def _learner(args, p):
    from .learners import FixedHypothesis, LearnerSpec
    from .oracle import classify, load_oracle, oracle_for

    if args.oracle:
        o = load_oracle(args.oracle)
        return FixedHypothesis(lambda X: classify(o, X))
    if args.learner == "oracle":
        o = oracle_for(p, args.d)
        return FixedHypothesis(lambda X: classify(o, X))
    return LearnerSpec(args.learner, epochs=args.epochs, seed=args.seed)


def cmd_distinguish(args):
    from .harness import DistinguisherConfig, advantage_report, hoeffding_distinguisher

    cfg = resolve(args)
    _emit_config(cfg)
    p = mixture_from_config(cfg)
    if args.learner == "oracle" and not args.oracle and args.dataset:
        man = read_manifest(args.dataset)
        if man.mode == "planted":
            p = mixture_from_config(cfg, read_secret(secret_path_for(args.dataset), man))
    dcfg = DistinguisherConfig(args.tau, 0.5, _learner(args, p))
    out = {"config": cfg}
    if args.dataset:
        res = hoeffding_distinguisher(dcfg, read_dataset(args.dataset))
        print(f"verdict {res.verdict}: err {res.error:.6f}, |err - 1/2| = {res.margin:.6f} vs tau/2 = {args.tau / 2:.6g}")
        print(f"hoeffding failure bound {res.failure_bound:.3e} (m_test={res.m_test})")
        if res.warning:
            _warn(res.warning)
        out["result"] = res.to_dict()
    if args.trials:
        make_p = lambda s: generate_mixture(p, args.m, s, args.threads)
        make_n = lambda s: generate_null(p.n, args.m, s, args.threads)
        dist = lambda ds: hoeffding_distinguisher(dcfg, ds).verdict
        rep = advantage_report(dist, args.trials, args.seed, make_p, make_n)
        lo, hi = rep.interval
        print(f"advantage {rep.advantage:.4f}, 95% interval [{lo:.4f}, {hi:.4f}] over {rep.trials} trials")
        out["advantage"] = rep.to_dict()
    if not args.dataset and not args.trials:
        raise ParameterError("give --dataset, --trials, or both")
    if args.report:
        Path(args.report).write_text(json.dumps(out, sort_keys=True, indent=1, default=str))
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="clwe-hardness", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="subcommand", required=True)

    g = sub.add_parser("generate", help="write a planted or null dataset")
    _add_params(g)
    g.add_argument("--mode", choices=("planted", "null"), default="planted")
    g.add_argument("--m", type=int, default=100_000)
    g.add_argument("--source", choices=("direct", "reduction"), default="direct")
    g.add_argument("--out", required=True)
    g.add_argument("--blind", action="store_true", help="do not write the secret sidecar")
    g.add_argument("--unsafe", action="store_true", help="skip the disjointness precondition")
    g.set_defaults(func=cmd_generate)

    o = sub.add_parser("oracle", help="build the planted classifier and print its exact error")
    _add_params(o)
    o.add_argument("--dataset", help="take parameters and secret from a dataset and its sidecar")
    o.add_argument("--d", type=int, default=8)
    o.add_argument("--out", help="oracle JSON path")
    o.add_argument("--export-ltf", metavar="PATH", help="write lifted halfspace weights")
    o.add_argument("--deg", type=int, help="embedding degree for --export-ltf (default 4d)")
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("verify", help="run the verification suite")
    v.add_argument("--report", help="JSON report path")
    v.add_argument("--quick", action="store_true")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--threads", type=int, default=1)
    v.add_argument("--grid", help="JSON list of parameter points")
    v.add_argument("--sections", help="comma-separated subset of sections")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("distinguish", help="learner-to-distinguisher experiment")
    _add_params(d)
    d.add_argument("--dataset")
    d.add_argument("--oracle", help="oracle JSON to use as the learner")
    d.add_argument("--learner", default="perceptron",
                   choices=("perceptron", "averaged_perceptron", "logistic_gd", "poly_kernel_perceptron", "oracle"))
    d.add_argument("--epochs", type=int, default=5)
    d.add_argument("--d", type=int, default=8)
    d.add_argument("--tau", type=float, default=0.1)
    d.add_argument("--m", type=int, default=100_000)
    d.add_argument("--trials", type=int, default=0)
    d.add_argument("--report")
    d.set_defaults(func=cmd_distinguish)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MissingSecretError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (DatasetFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING if isinstance(exc, FileNotFoundError) else EXIT_IO
    except (ParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
