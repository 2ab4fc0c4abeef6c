import math

import pytest

import bspde

HEAT_CONFIG = """
operator.name = heat
triple.name = sobolev
terminal.kind = deterministic
terminal.coeffs = 1.0, 0.5
grid.T = 0.03125
grid.steps = 8
solver.paths = 64
solver.d_u = 2
solver.galerkin_n = 4
check.samples = 256
seed = 7
"""


def test_version():
    assert bspde.__version__ == "0.1.0"


def test_config_roundtrip_is_lossless():
    canonical = bspde.config_roundtrip(HEAT_CONFIG)
    assert "operator.name = heat" in canonical
    assert bspde.config_roundtrip(canonical) == canonical


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown key"):
        bspde.config_roundtrip("grid.dt = 0.5\n")


def test_solve_summary_matches_terminal_energy():
    summary = bspde.solve_summary(HEAT_CONFIG)
    # The terminal layer is deterministic, so the peak V-energy is the
    # payload's: 1^2 (1 + pi^2) + 0.5^2 (1 + 4 pi^2).
    expected = (1 + math.pi**2) + 0.25 * (1 + 4 * math.pi**2)
    assert summary["sup_v_sq"] == pytest.approx(expected, rel=1e-2)
    assert summary["fire_fraction"] == 0.0
    assert summary["ridge_fallback"] is False
    assert summary["picard_max_iters"] >= 1


def test_check_operator_all_pass():
    reports = bspde.check_operator(HEAT_CONFIG)
    names = [r["condition"] for r in reports]
    assert names == ["H0", "H1", "H2", "H3", "H4", "C2", "C3", "C4"]
    for r in reports:
        assert r["passed"], r["summary"]
        assert r["samples"] > 0


def test_gn_ratio_scale_invariant():
    coeffs = [1.0, -0.5, 0.25, 0.125]
    base = bspde.gn_ratio(coeffs, 4.0)
    scaled = bspde.gn_ratio([831.7 * c for c in coeffs], 4.0)
    assert scaled == pytest.approx(base, abs=1e-10, rel=1e-10)
