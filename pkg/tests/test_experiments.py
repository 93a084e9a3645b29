import csv
import io
import math

import pytest

from stablecond import experiments as ex

QUICK = ex.Budget.quick()


def regrade(row, n_se):
    """Recompute a verdict from the CSV row alone."""
    if row["reference"] == "":
        return "info"
    est, ref = float(row["estimate"]), float(row["reference"])
    if row["tolerance"]:
        bound = float(row["tolerance"])
    else:
        bound = n_se * math.hypot(float(row["std_error"]), float(row["ref_std_error"] or 0))
    return "pass" if abs(est - ref) <= bound else "fail"


@pytest.fixture(scope="module")
def feller_report():
    return ex.exp_feller_entrance(budget=QUICK, seed=5)


def test_csv_schema(feller_report):
    rows = list(csv.DictReader(io.StringIO(feller_report.to_csv())))
    assert tuple(rows[0].keys()) == ex.CSV_COLUMNS
    assert ex.CSV_COLUMNS[:10] == ("experiment", "alpha", "rho", "x", "t", "dt", "n", "estimate", "std_error", "verdict")
    assert len(rows) == len(feller_report.cells)


def test_verdicts_recomputable(feller_report):
    for row in csv.DictReader(io.StringIO(feller_report.to_csv())):
        v = regrade(row, feller_report.n_se)
        assert row["verdict"] == v or (row["verdict"] == "info" and v != "info")


def test_deterministic(feller_report):
    again = ex.exp_feller_entrance(budget=QUICK, seed=5)
    assert again.to_csv() == feller_report.to_csv()
    other = ex.exp_feller_entrance(budget=QUICK, seed=6)
    assert other.to_csv() != feller_report.to_csv()


def test_constant_functional_cells_exact(feller_report):
    for c in feller_report.cells:
        if c.cell.endswith("Z=const1"):
            assert c.estimate == pytest.approx(1.0)


def test_summary(feller_report):
    s = feller_report.summary()
    assert s["seed"] == 5 and s["chunks"] == QUICK.chunks and s["passed"] == feller_report.passed
    assert sum(s["cells"].values()) == len(feller_report.cells)


def test_cell_grading():
    c = ex.Cell("e", "c", 1.5, 0.5, 1.0, 1.0, 0.01, 10, 1.05, 0.01, reference=1.0, ref_std_error=0.0)
    assert c.grade(3.0).verdict == "fail" and c.grade(6.0).verdict == "pass"
    c.tolerance = 0.1
    assert c.grade(3.0).verdict == "pass"
    c.graded = False
    assert c.grade(3.0).verdict == "info"


def test_monotone_helper():
    ok, _ = ex._monotone([(0.1, 0.01), (0.05, 0.01), (0.06, 0.01)], 3.0)
    assert ok
    ok, _ = ex._monotone([(0.01, 0.001), (0.05, 0.001)], 3.0)
    assert not ok


def test_budget_validation():
    with pytest.raises(ValueError):
        ex.Budget(chunks=1)
    with pytest.raises(ValueError):
        ex.Budget(dt_ladder=())
    assert ex.Budget().finest_dt == 4e-4


def test_quick_martingale_structure():
    rep = ex.exp_martingale(["avoid_origin"], grid=[(1.5, 0.5)], budget=QUICK, seed=1)
    assert len(rep.cells) == 3 * 2 * len(QUICK.dt_ladder)
    assert {c.verdict for c in rep.cells if c.dt != QUICK.finest_dt} == {"info"}
    assert any(ch.name.startswith("monotone-in-gap") for ch in rep.checks)


def test_quick_longtime():
    rep = ex.exp_long_time(T_ladder=(2.0, 8.0), c_grid=(1.0,), budget=QUICK, seed=2)
    cells = rep.find(cell="both-sides c=1")
    assert [c.t for c in cells] == [2.0, 8.0] and all(0 <= c.estimate <= 1 for c in cells)
    const = rep.find(cell="sign constant")
    assert all(c.estimate == pytest.approx(1.0) for c in const)


def test_quick_brownian():
    rep = ex.exp_brownian_checks(budget=QUICK, seed=3, oversample=2)
    names = {c.name for c in rep.checks}
    assert {"meander endpoint Rayleigh KS", "Bessel(3) endpoint KS", "W_times |endpoint| Bessel(3) KS"} <= names


def test_resolvent_report():
    rep = ex.exp_resolvent(alphas=(1.5,), qs=(1.0,))
    assert rep.passed and len(rep.cells) == 3
