"""Run every JSON config in configs/ and write reports under results/.

    python3 scripts/run_pipelines.py [config names...]
"""
import json
import sys
from pathlib import Path

from ripsrecon.cli import _pipeline

root = Path(__file__).resolve().parents[1]
out = root / "results"
out.mkdir(exist_ok=True)
names = sys.argv[1:] or sorted(p.stem for p in (root / "configs").glob("*.json"))
for name in names:
    rep = _pipeline(json.loads((root / "configs" / f"{name}.json").read_text()))
    rep.save(out / f"{name}.json")
    print(f"{name:32s} {rep.status:45s} betti={rep.betti_observed} expected={rep.betti_expected}")
