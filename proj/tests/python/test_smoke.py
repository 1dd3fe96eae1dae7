import json
import math
from pathlib import Path

import numpy as np
import pytest

import ommap


def test_kl_closed_form():
    for s in (0.1, 0.5, 2.0, 10.0):
        assert ommap.kl_gaussians(s) == pytest.approx(0.5 * (1 / s - 1 + math.log(s)), abs=1e-14)
        assert ommap.kl_gaussians_quadrature(s) == pytest.approx(ommap.kl_gaussians(s), abs=1e-8)


def test_spike_and_mixture():
    assert ommap.spike_mode(math.inf) == pytest.approx(1.0, abs=1e-8)
    assert abs(ommap.spike_mode(50.0) * 50.0 - 1.0) < 0.1
    assert ommap.mixture_mode(0.05) == pytest.approx(5.0, abs=1e-3)
    assert ommap.mixture_mode(-0.05) == pytest.approx(-5.0, abs=1e-3)


def test_counterexamples():
    assert ommap.liminf_only_log2_delta_ratios(5) == [-1.0, -2.0, -3.0, -4.0, -5.0]
    d1, ds = ommap.crosses_om_difference("l1"), ommap.crosses_om_difference("sup")
    assert abs(d1) == pytest.approx(math.log(math.sqrt(2.0)), abs=1e-12)
    assert d1 * ds < 0
    with pytest.raises(ValueError):
        ommap.crosses_om_difference("l2")


def test_map_solvers():
    g = ommap.map_gaussian([0.0], [1.0], np.array([[1.0]]), [1.0], [2.0])
    assert g["point"][0] == pytest.approx(1.0, abs=1e-14)
    b = ommap.map_besov(1.0, 1, 1.0, np.array([[1.0]]), [1.0], [2.0], tol=1e-12)
    assert b["point"][0] == pytest.approx(1.0, abs=1e-8)
    assert b["converged"]
    assert ommap.besov_gamma(1.0, 1, 1.0, 4) == pytest.approx([k ** -0.5 for k in range(1, 5)])


def test_run_config(tmp_path):
    cfg = {
        "kind": "map_solve",
        "problem": {
            "prior": {"type": "gaussian", "mean": [0.0], "eigenvalues": [1.0]},
            "observation": {"matrix": [[1.0]], "data": [2.0], "noise_cov": [1.0]},
        },
    }
    ommap.validate_config(cfg)
    r = ommap.run_config(cfg, out=str(tmp_path / "run"))
    assert r["kind"] == "map_solve"
    saved = json.loads((tmp_path / "run" / "results.json").read_text())
    assert saved["results"]["map"][0] == pytest.approx(1.0)
    with pytest.raises(ommap.ConfigError):
        ommap.validate_config({"problem": {}})


def test_reproduce(tmp_path):
    assert set(ommap.figure_ids()) == {"fig1a", "fig1b", "figB1", "figB3"}
    files = ommap.reproduce_figure("fig1b", str(tmp_path))
    header = (tmp_path / files[0]).read_text().splitlines()[0]
    assert header.count(",") == 5
