import json

import numpy as np
import pytest

from ripsrecon.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_end_to_end_commands(tmp_path, capsys):
    c, p = tmp_path / "c.csv", tmp_path / "p.csv"
    assert run(capsys, "sample", "--shape", "circle", "--param", "r=1", "--n", 80, "-o", c)[0] == 0
    assert run(capsys, "perturb", c, "--eta", 0.001, "--seed", 2, "-o", p)[0] == 0
    m = tmp_path / "m.bin"
    assert run(capsys, "metric", p, "path", "--epsilon", 0.2, "-o", m)[0] == 0
    cx = tmp_path / "cx.txt"
    code, out = run(capsys, "rips", m, "--beta", 0.5, "-o", cx)
    assert code == 0 and json.loads(out.out)["counts"][0] == 80
    code, out = run(capsys, "betti", cx, "--expect", 1, 1)
    assert code == 0 and json.loads(out.out)["betti"] == [1, 1]
    assert run(capsys, "betti", cx, "--expect", 1, 2)[0] == 1

    code, out = run(capsys, "hausdorff", c, p, "--bound", 0.001)
    assert code == 0 and json.loads(out.out)["value"] < 0.001
    assert run(capsys, "hausdorff", c, p, "--bound", 1e-9)[0] == 1

    e = tmp_path / "e.csv"
    assert run(capsys, "metric", c, "euclidean", "-o", e)[0] == 0
    code, out = run(capsys, "distortion", e, m)
    rep = json.loads(out.out)
    assert code == 0 and rep["details"]["gh_upper_bound"] == pytest.approx(rep["value"] / 2)
    assert run(capsys, "closeness", e, m, "--eps", 0.05, "--R", 0.5)[0] == 0
    assert run(capsys, "closeness", e, m, "--eps", 0.0001, "--R", 0.5)[0] == 1
    code, out = run(capsys, "jung", p)
    assert code == 0 and json.loads(out.out)["pass"]
    code, out = run(capsys, "mureach", c, "--d", 0.1, 0.05, "--n-probe", 100, "--mu", 0.5)
    assert code == 0 and len(json.loads(out.out)["rows"]) == 2


def test_disconnected_metric_exit_code(tmp_path, capsys):
    c = tmp_path / "c.csv"
    run(capsys, "sample", "--shape", "segment", "--n", 3, "-o", c)
    code, out = run(capsys, "metric", c, "path", "--epsilon", 0.1, "-o", tmp_path / "m.bin")
    assert code == 1 and "components" in out.err


def test_explicit_correspondence(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    np.savetxt(a, [[0, 1], [1, 0]], delimiter=",")
    np.savetxt(b, [[0]], delimiter=",")
    corr = tmp_path / "corr.csv"
    np.savetxt(corr, [[0, 0], [1, 0]], delimiter=",", fmt="%d")
    code, out = run(capsys, "distortion", a, b, "--corr", corr)
    assert json.loads(out.out)["value"] == 1.0
    with pytest.raises(SystemExit):
        main(["distortion", str(a), str(b)])


def test_pipeline_and_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "lat.json"
    cfg.write_text(json.dumps({"kind": "latschev", "shape": "circle", "n_net": 200, "beta": 0.6,
                               "variant": "jitter", "seed": 4}))
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    assert run(capsys, "pipeline", "--config", cfg, "--no-runtimes", "-o", out1)[0] == 0
    assert run(capsys, "pipeline", "--config", cfg, "--no-runtimes", "-o", out2)[0] == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert json.loads(out1.read_text())["certification"] == "Betti-certified"

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "reconstruction", "shape": "circle", "n_ref": 200, "n_sample": 100,
                               "beta": 1.0, "epsilon": 0.3, "n_hausdorff": 2000}))
    code, out = run(capsys, "pipeline", "--config", bad)
    assert code == 1 and "hypothesis-fail" in out.err


def test_pipeline_with_external_metric(tmp_path, capsys):
    from ripsrecon.experiments import latschev_sample
    from ripsrecon.geometry import make_shape

    d_S, _ = latschev_sample(make_shape("circle"), 150, "self", 1 / 14, 0.6)
    d_S.save(tmp_path / "s.csv")
    cfg = tmp_path / "ext.json"
    cfg.write_text(json.dumps({"kind": "latschev", "shape": "circle", "n_net": 150, "beta": 0.6,
                               "metric_path": str(tmp_path / "s.csv")}))
    assert run(capsys, "pipeline", "--config", cfg)[0] == 0


def test_sweep_writes_csv(tmp_path, capsys):
    out = tmp_path / "conv.csv"
    code, cap = run(capsys, "sweep", "--kind", "convergence", "--n", 200, "--eps", 0.4, 0.2, "-o", out)
    assert code == 0 and json.loads(cap.err)["strictly_decreasing"]
    assert out.read_text().splitlines()[0].startswith("epsilon,sup_error")
    code, cap = run(capsys, "sweep", "--kind", "mu_reach", "--shape", "circle", "--n", 300,
                    "--d", 0.1, "--n-probe", 50)
    assert code == 0 and cap.out.startswith("shape,n,d,chi_estimate")


def test_bad_param_syntax(capsys):
    with pytest.raises(SystemExit):
        main(["sample", "--shape", "circle", "--param", "r1", "--n", "3", "-o", "x.csv"])
