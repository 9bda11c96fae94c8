"""Command-line entry point: ``ripsrecon <subcommand> ...``.

Outputs are JSON reports on stdout (or ``-o``) and CSV tables for sweeps.
The exit code is 0 iff the command's overall check passes.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .complex import FlagComplex, rips_complex
from .experiments import (
    ExperimentConfig,
    Report,
    latschev_sample,
    run_closeness_check,
    run_latschev,
    run_reconstruction,
    run_stability,
    run_sweeps,
    write_csv,
)
from .geometry import (
    SHAPES,
    FiniteMetricSpace,
    euclidean_metric,
    load_cloud,
    make_shape,
    perturb,
    sample_shape,
    save_cloud,
)
from .homology import betti_numbers, connected_components
from .invariants import (
    Correspondence,
    check_eps_R_closeness,
    check_jung_euclidean,
    critical_function_estimate,
    distortion,
    gh_diameter_lower_bound,
    hausdorff_distance,
    max_distortion_pair,
)
from .pathmetric import DisconnectedGraph, path_metric
from .report import CheckReport, dump_json


def _param(text: str):
    key, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key, float(val)


def _emit(obj, out) -> None:
    text = dump_json(obj)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _load_corr(path, nA, nB) -> Correspondence:
    if path is None:
        if nA != nB:
            raise SystemExit("spaces differ in size; pass --corr pairs.csv")
        return Correspondence.diagonal(nA)
    pairs = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    return Correspondence(pairs, nA, nB)


def cmd_sample(a) -> int:
    shape = make_shape(a.shape, **dict(a.param))
    cloud, _ = sample_shape(shape, a.n, mode=a.mode, seed=a.seed)
    save_cloud(cloud, a.output)
    return 0


def cmd_perturb(a) -> int:
    save_cloud(perturb(load_cloud(a.cloud), a.eta, seed=a.seed), a.output)
    return 0


def cmd_metric(a) -> int:
    cloud = load_cloud(a.cloud)
    if a.kind == "euclidean":
        m = euclidean_metric(cloud)
    else:
        if a.epsilon is None:
            raise SystemExit("path metric needs --epsilon")
        try:
            m = path_metric(cloud, a.epsilon)
        except DisconnectedGraph as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    m.save(a.output)
    return 0


def cmd_rips(a) -> int:
    cx = rips_complex(FiniteMetricSpace.load(a.metric), a.beta, a.max_dim)
    cx.save(a.output)
    print(json.dumps({"counts": cx.counts}))
    return 0


def cmd_betti(a) -> int:
    cx = FlagComplex.load(a.complex)
    prof = betti_numbers(cx, a.up_to)
    out = prof.to_dict()
    out["components"] = connected_components(cx)
    if a.expect:
        out["expected"] = a.expect
        out["pass"] = list(prof.betti) == a.expect
    _emit(out, a.output)
    return 0 if out.get("pass", True) else 1


def cmd_hausdorff(a) -> int:
    A, B = load_cloud(a.a), load_cloud(a.b)
    value = hausdorff_distance(A, B)
    rep = CheckReport("hausdorff", value, bound=a.bound,
                      passed=True if a.bound is None else value < a.bound)
    _emit(rep.to_dict(), a.output)
    return 0 if rep.passed else 1


def cmd_distortion(a) -> int:
    dA, dB = FiniteMetricSpace.load(a.a), FiniteMetricSpace.load(a.b)
    corr = _load_corr(a.corr, dA.n, dB.n)
    dis = distortion(corr, dA, dB)
    _, (k1, k2) = max_distortion_pair(corr, dA, dB)
    witness = (corr.pairs[k1].tolist(), corr.pairs[k2].tolist())
    rep = CheckReport("distortion", dis, bound=a.bound, witness_pair=witness,
                      passed=True if a.bound is None else dis <= a.bound,
                      details={"gh_upper_bound": 0.5 * dis, "gh_lower_bound": gh_diameter_lower_bound(dA, dB)})
    _emit(rep.to_dict(), a.output)
    return 0 if rep.passed else 1


def cmd_closeness(a) -> int:
    dA, dB = FiniteMetricSpace.load(a.a), FiniteMetricSpace.load(a.b)
    rep = check_eps_R_closeness(_load_corr(a.corr, dA.n, dB.n), dA, dB, a.eps, a.R)
    _emit(rep.to_dict(), a.output)
    return 0 if rep.passed else 1


def cmd_jung(a) -> int:
    rep = check_jung_euclidean(load_cloud(a.cloud))
    _emit(rep.to_dict(), a.output)
    return 0 if rep.passed else 1


def cmd_mureach(a) -> int:
    est = critical_function_estimate(load_cloud(a.cloud), a.d, n_probe=a.n_probe, seed=a.seed, mu=a.mu)
    _emit(est, a.output)
    return 0


def _pipeline(obj: dict) -> Report:
    kind = obj.get("kind", "reconstruction")
    if kind == "reconstruction":
        return run_reconstruction(ExperimentConfig.from_dict(obj))
    if kind == "closeness":
        return run_closeness_check(ExperimentConfig.from_dict(obj))
    if kind == "stability":
        return run_stability(ExperimentConfig.from_dict(obj["x"]), ExperimentConfig.from_dict(obj["x_prime"]))
    if kind == "latschev":
        shape = make_shape(obj["shape"], **obj.get("shape_params", {}))
        xi = obj.get("xi", 1 / 14)
        beta = obj["beta"]
        if "metric_path" in obj:
            d_S = FiniteMetricSpace.load(obj["metric_path"])
            corr = None
            if "correspondence_path" in obj:
                corr = _load_corr(obj["correspondence_path"], obj["n_net"], d_S.n)
        else:
            d_S, corr = latschev_sample(shape, obj["n_net"], obj.get("variant", "self"), xi, beta,
                                        seed=obj.get("seed", 0), stride=obj.get("stride", 2))
        return run_latschev(shape, obj["n_net"], d_S, corr, xi=xi, beta=beta, max_dim=obj.get("max_dim", 2))
    raise SystemExit(f"unknown pipeline kind {kind!r}")


def cmd_pipeline(a) -> int:
    rep = _pipeline(json.loads(Path(a.config).read_text()))
    _emit(rep.to_dict(runtimes=not a.no_runtimes), a.output)
    print(f"{rep.kind}: {rep.status}", file=sys.stderr)
    return 0 if rep.passed else 1


def cmd_sweep(a) -> int:
    shape = make_shape(a.shape, **dict(a.param))
    res = run_sweeps(a.kind, shape, a.n, eps_list=a.eps or (), R_list=a.R or (),
                     d_values=a.d or (), n_probe=a.n_probe, seed=a.seed, mu=a.mu)
    write_csv(res["rows"], a.output or sys.stdout)
    print(json.dumps(res["summary"], sort_keys=True), file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ripsrecon", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="sample a built-in shape")
    s.add_argument("--shape", choices=sorted(SHAPES), required=True)
    s.add_argument("--param", type=_param, action="append", default=[], help="shape parameter, e.g. r=1")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--mode", choices=["grid", "uniform"], default="grid")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("perturb", help="add bounded uniform noise")
    s.add_argument("cloud")
    s.add_argument("--eta", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_perturb)

    s = sub.add_parser("metric", help="distance matrix of a cloud (.csv or .bin)")
    s.add_argument("cloud")
    s.add_argument("kind", choices=["euclidean", "path"])
    s.add_argument("--epsilon", type=float)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_metric)

    s = sub.add_parser("rips", help="Vietoris-Rips complex of a metric")
    s.add_argument("metric")
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--max-dim", type=int, default=2)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_rips)

    s = sub.add_parser("betti", help="Betti numbers of a complex file")
    s.add_argument("complex")
    s.add_argument("--up-to", type=int)
    s.add_argument("--expect", type=int, nargs="+")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_betti)

    s = sub.add_parser("hausdorff", help="Hausdorff distance of two clouds")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--bound", type=float)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_hausdorff)

    for name, fn in (("distortion", cmd_distortion), ("closeness", cmd_closeness)):
        s = sub.add_parser(name, help=f"{name} of a correspondence between two metrics")
        s.add_argument("a")
        s.add_argument("b")
        s.add_argument("--corr", help="CSV of index pairs; defaults to the diagonal")
        if name == "distortion":
            s.add_argument("--bound", type=float)
        else:
            s.add_argument("--eps", type=float, required=True)
            s.add_argument("--R", type=float, required=True)
        s.add_argument("-o", "--output")
        s.set_defaults(func=fn)

    s = sub.add_parser("jung", help="Jung and 4/3 diameter bounds for a Euclidean cloud")
    s.add_argument("cloud")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_jung)

    s = sub.add_parser("mureach", help="critical-function estimates of a cloud")
    s.add_argument("cloud")
    s.add_argument("--d", type=float, nargs="+", required=True)
    s.add_argument("--n-probe", type=int, default=2000)
    s.add_argument("--mu", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_mureach)

    s = sub.add_parser("pipeline", help="run a JSON-configured pipeline")
    s.add_argument("--config", required=True)
    s.add_argument("--no-runtimes", action="store_true", help="omit timing fields for byte-stable output")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("sweep", help="convergence, distortion or mu_reach table")
    s.add_argument("--kind", choices=["convergence", "distortion", "mu_reach"], required=True)
    s.add_argument("--shape", choices=sorted(SHAPES), default="circle")
    s.add_argument("--param", type=_param, action="append", default=[])
    s.add_argument("--n", type=int, default=2000)
    s.add_argument("--eps", type=float, nargs="+")
    s.add_argument("--R", type=float, nargs="+")
    s.add_argument("--d", type=float, nargs="+")
    s.add_argument("--n-probe", type=int, default=2000)
    s.add_argument("--mu", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
