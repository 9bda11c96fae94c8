"""Convergence, distortion and mu-reach tables as CSV under results/."""
import json
from pathlib import Path

from ripsrecon.experiments import run_sweeps, write_csv
from ripsrecon.geometry import make_shape

root = Path(__file__).resolve().parents[1]
out = root / "results"
out.mkdir(exist_ok=True)
eps = [0.4, 0.2, 0.1, 0.05]
depths = [0.1, 0.05, 0.02, 0.01]
jobs = {
    "convergence_circle": ("convergence", "circle", 2000, dict(eps_list=eps)),
    "distortion_circle": ("distortion", "circle", 2000, dict(eps_list=eps, R_list=[0.1, 2 / 14 * 0.6])),
    "distortion_ninja_star": ("distortion", "ninja_star", 2000, dict(eps_list=eps, R_list=[2 / 14 * 0.6, 0.5])),
    "mu_reach_ninja_star": ("mu_reach", "ninja_star", 2000, dict(d_values=depths, mu=0.1)),
    "mu_reach_circle": ("mu_reach", "circle", 2000, dict(d_values=depths, mu=0.1)),
}
for name, (kind, shape, n, kw) in jobs.items():
    res = run_sweeps(kind, make_shape(shape), n, **kw)
    write_csv(res["rows"], out / f"{name}.csv")
    print(f"{name:24s} {json.dumps(res['summary'], sort_keys=True)}")
