"""End-to-end pipelines: sample, perturb, relax the metric, build Rips, certify.

Every pipeline returns a :class:`Report`.  A report passes only when every
hypothesis check passes *and* the observed Betti profile equals the shape's
expected one; failed hypotheses are recorded rather than raised so the
pipelines double as falsification sweeps.  Matching Betti numbers are a
necessary condition for homotopy equivalence, so reports say "Betti-certified".
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .complex import rips_complex
from .geometry import (
    FiniteMetricSpace,
    PointCloud,
    ShapeDescriptor,
    grid_hausdorff_bound,
    make_shape,
    perturb,
    rng_stream,
    sample_shape,
)
from .homology import betti_numbers, connected_components
from .invariants import (
    Correspondence,
    check_eps_R_closeness,
    critical_function_estimate,
    distortion,
    hausdorff_correspondence,
    hausdorff_distance,
    large_scale_distortion,
)
from .pathmetric import DisconnectedGraph, convergence_sweep, path_metric
from .report import CheckReport, dump_json

CERT_LABEL = "Betti-certified"
XI_DEFAULT = 1 / 14


@dataclass
class ExperimentConfig:
    shape: str = "circle"
    shape_params: dict = field(default_factory=dict)
    n_ref: int = 2000
    n_sample: int = 1000
    sample_mode: str = "grid"
    xi: float = XI_DEFAULT
    beta: float = 0.6
    epsilon: float = 0.1
    noise: float = 0.0
    seed: int = 0
    max_dim: int = 2
    n_hausdorff: int = 200_000
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {k: v for k, v in obj.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)

    def make_shape(self) -> ShapeDescriptor:
        return make_shape(self.shape, **self.shape_params)

    def hypothesis_checks(self, shape: ShapeDescriptor) -> list[CheckReport]:
        """Checks on the parameters alone, before any sampling."""
        xi, beta, eps = self.xi, self.beta, self.epsilon
        beta_cap = shape.delta_cap / (1 + 2 * xi)
        return [
            CheckReport("xi_range", xi, bound=1 / 14, passed=0 < xi <= 1 / 14 + 1e-15,
                        details={"requires": "0 < xi <= 1/14"}),
            CheckReport("beta_below_delta_cap", beta, bound=beta_cap, passed=0 < beta < beta_cap,
                        details={"delta_cap": shape.delta_cap, "requires": "beta < delta_cap / (1 + 2 xi)"}),
            CheckReport("epsilon_at_most_beta", eps, bound=beta, passed=0 < eps <= beta),
            CheckReport("noise_budget", self.noise, bound=0.5 * xi * eps, passed=self.noise < 0.5 * xi * eps,
                        details={"requires": "noise < xi * epsilon / 2"}),
        ]


@dataclass
class Report:
    kind: str
    config: dict
    checks: list = field(default_factory=list)
    betti_observed: list | None = None
    betti_expected: list | None = None
    components: int | None = None
    extras: dict = field(default_factory=dict)
    runtimes: dict = field(default_factory=dict)

    @property
    def hypotheses_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def betti_match(self) -> bool:
        if self.kind == "closeness":
            return True  # metric certificate only, no homology step
        return self.betti_observed is not None and self.betti_observed == self.betti_expected

    @property
    def passed(self) -> bool:
        return self.hypotheses_pass and self.betti_match

    @property
    def status(self) -> str:
        if not self.hypotheses_pass:
            failed = [c.quantity for c in self.checks if not c.passed]
            return "hypothesis-fail: " + ", ".join(failed)
        if self.kind == "closeness":
            return "closeness-certified"
        return CERT_LABEL if self.betti_match else "betti-mismatch"

    def failed_checks(self) -> list[str]:
        return [c.quantity for c in self.checks if not c.passed]

    def to_dict(self, runtimes: bool = True) -> dict:
        out = {
            "kind": self.kind,
            "config": self.config,
            "checks": [c.to_dict() for c in self.checks],
            "betti_observed": self.betti_observed,
            "betti_expected": self.betti_expected,
            "components": self.components,
            "status": self.status,
            "certification": self.status if self.passed else None,
            "pass": self.passed,
            "extras": self.extras,
        }
        if runtimes:
            out["runtimes"] = self.runtimes
        return out

    def to_json(self, runtimes: bool = True) -> str:
        return dump_json(self.to_dict(runtimes=runtimes))

    def save(self, path):
        dump_json(self.to_dict(), path)


class _Timer:
    def __init__(self, sink: dict):
        self.sink = sink

    def __call__(self, name):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.sink[name] = round(time.perf_counter() - self.t0, 4)

        return _Ctx()


def _expected(shape: ShapeDescriptor, up_to: int) -> list[int]:
    exp = list(shape.expected_betti)[: up_to + 1]
    return exp + [0] * (up_to + 1 - len(exp))


def _betti(metric: FiniteMetricSpace, beta: float, max_dim: int):
    cx = rips_complex(metric, beta, max_dim)
    prof = betti_numbers(cx, max(max_dim - 1, 0))
    return cx, prof


def hausdorff_check(shape: ShapeDescriptor, S: PointCloud, budget: float, n_dense: int) -> CheckReport:
    """Certified upper bound on d_H(shape, S): distance to a dense grid plus its spacing bound."""
    dense, _ = sample_shape(shape, n_dense, mode="grid")
    to_dense = hausdorff_distance(dense, S)
    bound = to_dense + grid_hausdorff_bound(shape, n_dense)
    return CheckReport("hausdorff_to_shape", bound, bound=budget, passed=bound < budget,
                       details={"to_dense_grid": to_dense, "dense_grid_size": n_dense,
                                "requires": "d_H(X, S) < xi * epsilon / 2"})


def distortion_check(shape, ref_params, epsilon, xi, beta) -> CheckReport:
    R = 2 * xi * beta
    bound = 1 + xi / (1 + xi)
    try:
        value, w = large_scale_distortion(shape, ref_params, epsilon, R, return_witness=True)
    except DisconnectedGraph as exc:
        return CheckReport("large_scale_distortion", math.inf, bound=bound, passed=False,
                           details={"error": str(exc), "R": R, "epsilon": epsilon})
    return CheckReport("large_scale_distortion", value, bound=bound, witness_pair=w,
                       passed=value <= bound, details={"R": R, "epsilon": epsilon})


def build_sample(config: ExperimentConfig, shape: ShapeDescriptor):
    clean, params = sample_shape(shape, config.n_sample, mode=config.sample_mode, seed=config.seed)
    return perturb(clean, config.noise, seed=config.seed), params


def run_reconstruction(config: ExperimentConfig) -> Report:
    """Rips complex of the epsilon-path metric of a noisy sample, certified by Betti numbers."""
    shape = config.make_shape()
    rep = Report("reconstruction", config.to_dict())
    clock = _Timer(rep.runtimes)
    rep.checks.extend(config.hypothesis_checks(shape))
    with clock("distortion_check"):
        _, ref_params = sample_shape(shape, config.n_ref, mode="grid")
        rep.checks.append(distortion_check(shape, ref_params, config.epsilon, config.xi, config.beta))
    with clock("sample"):
        S, _ = build_sample(config, shape)
        rep.checks.append(hausdorff_check(shape, S, 0.5 * config.xi * config.epsilon, config.n_hausdorff))
    try:
        with clock("path_metric"):
            d_eps = path_metric(S, config.epsilon)
    except DisconnectedGraph as exc:
        rep.checks.append(CheckReport("path_metric_connected", 0.0, passed=False, details={"error": str(exc)}))
        return rep
    with clock("rips"):
        cx = rips_complex(d_eps, config.beta, config.max_dim)
    with clock("homology"):
        prof = betti_numbers(cx, max(config.max_dim - 1, 0))
    rep.betti_observed = list(prof.betti)
    rep.betti_expected = _expected(shape, prof.certified_up_to)
    rep.components = connected_components(cx)
    rep.extras.update({"simplex_counts": cx.counts, "euler_truncated": prof.euler,
                       "certified_up_to": prof.certified_up_to})
    if config.output_dir:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        S.to_csv(out / "sample.csv")
        d_eps.save(out / "path_metric.bin")
        cx.save(out / "complex.txt")
        (out / "betti.json").write_text(prof.to_json())
        rep.save(out / "report.json")
    return rep


def run_closeness_check(config: ExperimentConfig) -> Report:
    """(xi beta, beta)-closeness between the shape's intrinsic metric on a reference
    grid and the epsilon-path metric of the sample, through the Hausdorff correspondence."""
    shape = config.make_shape()
    rep = Report("closeness", config.to_dict())
    clock = _Timer(rep.runtimes)
    rep.checks.extend(config.hypothesis_checks(shape))
    xi, beta, eps = config.xi, config.beta, config.epsilon
    ref, ref_params = sample_shape(shape, config.n_ref, mode="grid")
    with clock("distortion_check"):
        rep.checks.append(distortion_check(shape, ref_params, eps, xi, beta))
    S, _ = build_sample(config, shape)
    with clock("correspondence"):
        try:
            corr = hausdorff_correspondence(ref, S, 0.5 * xi * eps)
        except ValueError as exc:
            rep.checks.append(CheckReport("hausdorff_correspondence", hausdorff_distance(ref, S),
                                          bound=0.5 * xi * eps, passed=False, details={"error": str(exc)}))
            return rep
    with clock("closeness"):
        d_L = shape.intrinsic_matrix(ref_params)
        d_eps = path_metric(S, eps)
        chk = check_eps_R_closeness(corr, d_L, d_eps, xi * beta, beta)
    rep.checks.append(chk)
    rep.extras.update({"correspondence_size": len(corr), "max_gap": chk.value, "gap_bound": 2 * xi * beta})
    return rep


def _param_correspondence(n1: int, n2: int) -> Correspondence:
    """Match grid indices by relative arclength position, covering both sides."""
    a = np.arange(n1)
    b = np.arange(n2)
    pairs = np.concatenate([
        np.stack([a, np.rint(a * n2 / n1).astype(int) % n2], axis=1),
        np.stack([np.rint(b * n1 / n2).astype(int) % n1, b], axis=1),
    ])
    return Correspondence(np.unique(pairs, axis=0), n1, n2)


def run_latschev(shape: ShapeDescriptor, n_net: int, d_S: FiniteMetricSpace,
                 corr: Correspondence | None = None, xi: float = XI_DEFAULT,
                 beta: float = 0.6, max_dim: int = 2) -> Report:
    """Rips complex of an arbitrary finite metric close to a grid net of ``shape``."""
    rep = Report("latschev", {"shape": shape.id, "shape_params": shape.params, "n_net": n_net,
                              "n_S": d_S.n, "xi": xi, "beta": beta, "max_dim": max_dim})
    clock = _Timer(rep.runtimes)
    _, net_params = sample_shape(shape, n_net, mode="grid")
    d_X = shape.intrinsic_matrix(net_params)
    if corr is None:
        corr = Correspondence.diagonal(n_net) if d_S.n == n_net else _param_correspondence(n_net, d_S.n)
    beta_cap = shape.delta_cap / (1 + 2 * xi)
    rep.checks.append(CheckReport("xi_range", xi, bound=1 / 14, passed=0 < xi <= 1 / 14 + 1e-15))
    rep.checks.append(CheckReport("beta_below_delta_cap", beta, bound=beta_cap, passed=0 < beta < beta_cap))
    with clock("closeness"):
        close = check_eps_R_closeness(corr, d_X, d_S, xi * beta, beta)
        gh_upper = 0.5 * distortion(corr, d_X, d_S)
    close.details["gh_upper_bound"] = gh_upper
    close.details["gh_route_pass"] = gh_upper < xi * beta
    rep.checks.append(close)
    with clock("rips_homology"):
        cx, prof = _betti(d_S, beta, max_dim)
    rep.betti_observed = list(prof.betti)
    rep.betti_expected = _expected(shape, prof.certified_up_to)
    rep.components = connected_components(cx)
    rep.extras["simplex_counts"] = cx.counts
    return rep


def latschev_sample(shape: ShapeDescriptor, n_net: int, variant: str, xi: float, beta: float,
                    seed: int = 0, stride: int = 2):
    """Finite metrics ``(d_S, corr)`` near the grid net: ``self``, ``jitter`` (net points
    slid along the curve by less than ``xi beta / 2``) or ``subnet`` (every ``stride``-th point)."""
    _, net_params = sample_shape(shape, n_net, mode="grid")
    if variant == "self":
        return shape.intrinsic_matrix(net_params), Correspondence.diagonal(n_net)
    if variant == "jitter":
        rng = rng_stream(seed, "jitter")
        shift = rng.uniform(-0.5, 0.5, n_net) * xi * beta * 0.999
        params = np.mod(net_params + shift, shape.total_length) if shape.closed else \
            np.clip(net_params + shift, 0, shape.total_length)
        return shape.intrinsic_matrix(params), Correspondence.diagonal(n_net)
    if variant == "subnet":
        keep = np.arange(0, n_net, stride)
        d_S = shape.intrinsic_matrix(net_params[keep])
        d_X = shape.intrinsic_matrix(net_params)
        nearest = np.argmin(d_X.d[:, keep], axis=1)
        pairs = np.stack([np.arange(n_net), nearest], axis=1)
        return d_S, Correspondence(pairs, n_net, len(keep))
    raise ValueError(f"unknown Latschev sample variant {variant!r}")


def run_stability(config_x: ExperimentConfig, config_y: ExperimentConfig,
                  corr: Correspondence | None = None) -> Report:
    """Compare Rips homology of two shapes' intrinsic grid nets after certifying closeness."""
    X, Y = config_x.make_shape(), config_y.make_shape()
    xi, beta = config_x.xi, config_x.beta
    rep = Report("stability", {"x": config_x.to_dict(), "x_prime": config_y.to_dict()})
    clock = _Timer(rep.runtimes)
    _, px = sample_shape(X, config_x.n_ref, mode="grid")
    _, py = sample_shape(Y, config_y.n_ref, mode="grid")
    dX, dY = X.intrinsic_matrix(px), Y.intrinsic_matrix(py)
    if corr is None:
        corr = _param_correspondence(dX.n, dY.n)
    beta_cap = min(X.delta_cap, Y.delta_cap) / (1 + 2 * xi)
    rep.checks.append(CheckReport("xi_range", xi, bound=1 / 14, passed=0 < xi <= 1 / 14 + 1e-15))
    rep.checks.append(CheckReport("beta_below_delta_cap", beta, bound=beta_cap, passed=0 < beta < beta_cap))
    with clock("closeness"):
        rep.checks.append(check_eps_R_closeness(corr, dX, dY, xi * beta, beta))
    with clock("rips_homology"):
        cx, bx = _betti(dX, beta, config_x.max_dim)
        cy, by = _betti(dY, beta, config_y.max_dim)
    rep.betti_observed = list(bx.betti)
    rep.betti_expected = list(by.betti)
    rep.components = connected_components(cx)
    rep.extras.update({
        "betti_x": list(bx.betti), "betti_x_prime": list(by.betti),
        "expected_x": _expected(X, bx.certified_up_to), "expected_x_prime": _expected(Y, by.certified_up_to),
    })
    return rep


# ---------------------------------------------------------------------------
# sweeps


def _monotone(values, increasing: bool, strict: bool) -> bool:
    vals = [v for v in values if v is not None]
    pairs = list(zip(vals, vals[1:]))
    if increasing:
        return all(b > a if strict else b >= a for a, b in pairs)
    return all(b < a if strict else b <= a for a, b in pairs)


def run_sweeps(kind: str, shape: ShapeDescriptor, n: int, *, eps_list=(), R_list=(),
               d_values=(), n_probe: int = 2000, seed: int = 0, mu: float | None = None) -> dict:
    """Per-cell tables for the convergence, distortion and mu-reach sweeps.

    Cells that fail (e.g. a disconnected epsilon-graph) record the error and
    the sweep continues.  ``summary`` holds the monotonicity verdicts.
    """
    if kind == "convergence":
        rows = [dict(r, shape=shape.id, n=n) for r in convergence_sweep(shape, n, eps_list)]
        summary = {"strictly_decreasing": _monotone([r["sup_error"] for r in rows], False, True)}
    elif kind == "distortion":
        _, params = sample_shape(shape, n, mode="grid")
        rows = []
        for R in R_list:
            for eps in eps_list:
                row = {"shape": shape.id, "n": n, "epsilon": float(eps), "R": float(R)}
                try:
                    row["distortion"] = large_scale_distortion(shape, params, eps, R)
                    row["error"] = None
                except (DisconnectedGraph, ValueError) as exc:
                    row["distortion"], row["error"] = None, str(exc)
                rows.append(row)
        summary = {}
        for R in R_list:
            col = [r["distortion"] for r in rows if r["R"] == float(R)]
            summary[f"R={R:g}"] = {
                "non_increasing_as_eps_shrinks": _monotone(col, False, False)
                if list(eps_list) == sorted(eps_list, reverse=True) else None,
                "min": min((v for v in col if v is not None), default=None),
            }
    elif kind == "mu_reach":
        cloud, _ = sample_shape(shape, n, mode="grid")
        est = critical_function_estimate(cloud, d_values, n_probe=n_probe, seed=seed, mu=mu)
        rows = [{"shape": shape.id, "n": n, "d": r["d"], "chi_estimate": r["chi_estimate"],
                 "n_valid": r["n_valid"]} for r in est["rows"]]
        summary = {"r_mu_upper": est["r_mu_upper"], "mu": mu,
                   "decreasing_as_d_shrinks": _monotone([r["chi_estimate"] for r in rows], False, True)
                   if list(d_values) == sorted(d_values, reverse=True) else None}
    else:
        raise ValueError(f"unknown sweep kind {kind!r}")
    return {"kind": kind, "rows": rows, "summary": summary}


def write_csv(rows: list[dict], dest):
    """Write sweep rows to a path or an open text stream; nested fields are dropped."""
    keys: list[str] = []
    for r in rows:
        keys.extend(k for k in r if k not in keys and not isinstance(r[k], (list, dict)))

    def _write(fh):
        w = csv.DictWriter(fh, fieldnames=keys, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in keys})

    if hasattr(dest, "write"):
        _write(dest)
    else:
        with open(dest, "w", newline="") as fh:
            _write(fh)
