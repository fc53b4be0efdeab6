import numpy as np
import pandas as pd
import pytest

from vxcomplexity.errors import CollinearityError, ValidationError
from vxcomplexity.iot import AuxiliarySeries
from vxcomplexity.panel import (
    FD_DYNAMIC_TERMS,
    WITHIN_FE_TERMS,
    PanelDataset,
    build_panel,
    fit_fd_dynamic,
    fit_fe,
    fit_within_fe,
    growth_pairs,
    render_table,
    scores_from_aux,
    stars,
    unconditional_correlation,
    within_transform,
)

from conftest import PANEL_BETAS, synthetic_panel, write_aux_csv
from oracles import hc1_explicit


@pytest.fixture(scope="module")
def dgp():
    aux, scores, _ = synthetic_panel(np.random.default_rng(7))
    return aux, scores


@pytest.fixture(scope="module")
def noisy_panel():
    aux, scores, _ = synthetic_panel(np.random.default_rng(11), sigma=0.02)
    return build_panel(aux, scores, "vxf")


def _lsdv_design(frame, terms):
    Dc = pd.get_dummies(frame["country"], drop_first=True, dtype=float).to_numpy()
    Dt = pd.get_dummies(frame["period"], drop_first=True, dtype=float).to_numpy()
    return np.column_stack([frame[list(terms)].to_numpy(float), np.ones(len(frame)), Dc, Dt])


def _two_country_aux(gdp_end=100.0):
    values = {}
    for c in ("AUS", "BRA"):
        for y in (2000, 2004):
            values[c, y] = {"gdp_pc": 100.0 if y == 2000 else gdp_end, "population": 10.0,
                            "capital": 50.0, "human_capital": 2.0, "ef": 1.5, "eci": 0.2}
    return AuxiliarySeries(values)


def test_constant_income_gives_zero_growth():
    panel = build_panel(_two_country_aux(), None, "ef", periods=[(2000, 2004)])
    assert panel.frame["dy"].tolist() == [0.0, 0.0]
    assert panel.frame["n"].tolist() == [0.0, 0.0]


def test_doubling_income_gives_log_two():
    panel = build_panel(_two_country_aux(200.0), None, "ef", periods=[(2000, 2004)])
    np.testing.assert_allclose(panel.frame["dy"], np.log(2), rtol=1e-14)
    np.testing.assert_allclose(panel.frame["C_lag"], np.log(1.5))


def test_eci_enters_in_levels():
    panel = build_panel(_two_country_aux(), None, "eci", periods=[(2000, 2004)])
    assert panel.transform == "level"
    assert panel.frame["C_lag"].tolist() == [0.2, 0.2]


def test_scores_from_aux_rejects_vxf():
    assert scores_from_aux(_two_country_aux(), "ef")[2000]["AUS"] == 1.5
    with pytest.raises(ValidationError):
        scores_from_aux(_two_country_aux(), "vxf")


def test_excluded_countries_and_panel_size(dgp):
    aux, scores = dgp
    panel = build_panel(aux, scores, "vxf")
    assert panel.n_obs == 120 and panel.complete
    assert not {"LUX", "MLT", "TWN"} & set(panel.frame["country"])
    assert set(panel.frame["period"]) == {"2000-2004", "2005-2009", "2010-2014"}


def test_missing_endpoint_rejects_row_without_imputation(dgp):
    aux, scores = dgp
    values = {k: dict(v) for k, v in aux.values.items()}
    del values["DEU", 2009]["capital"]
    scores = {y: dict(s) for y, s in scores.items()}
    del scores[2000]["FRA"]
    panel = build_panel(AuxiliarySeries(values), scores, "vxf")
    assert panel.n_obs == 118 and not panel.complete
    assert {(r.country, r.period) for r in panel.rejected} == {("DEU", "2005-2009"), ("FRA", "2000-2004")}
    assert panel.missing_pairs() == [("DEU", 2009), ("FRA", 2000)]
    assert ("DEU", "2005-2009") not in set(zip(panel.frame["country"], panel.frame["period"]))


def test_dgp_recovery(dgp):
    aux, scores = dgp
    res = fit_fd_dynamic(build_panel(aux, scores, "vxf"))
    assert res.coefficients["dC"] == pytest.approx(0.300, abs=1e-3)
    for term, beta in PANEL_BETAS.items():
        assert res.coefficients[term] == pytest.approx(beta, abs=1e-3)
    assert res.n_obs == 120 and res.df_resid == 120 - 49
    assert res.spec == "first-differenced-dynamic" and res.fixed_effects == ("individual", "time")


def test_within_model_dimensions(dgp):
    aux, scores = dgp
    res = fit_within_fe(build_panel(aux, scores, "vxf"))
    assert set(res.coefficients) == set(WITHIN_FE_TERMS)
    assert res.df_resid == 120 - 46


def test_duplicated_rows_leave_estimates_unchanged(noisy_panel):
    doubled = PanelDataset(pd.concat([noisy_panel.frame, noisy_panel.frame], ignore_index=True), "vxf", "log")
    a = fit_fd_dynamic(noisy_panel)
    b = fit_fd_dynamic(doubled)
    for term in FD_DYNAMIC_TERMS:
        assert b.coefficients[term] == pytest.approx(a.coefficients[term], rel=1e-9, abs=1e-12)


def test_lsdv_and_within_agree(noisy_panel):
    a = fit_fd_dynamic(noisy_panel, method="lsdv")
    b = fit_fd_dynamic(noisy_panel, method="within")
    for term in FD_DYNAMIC_TERMS:
        assert abs(a.coefficients[term] - b.coefficients[term]) < 1e-10
        assert abs(a.robust_se[term] - b.robust_se[term]) < 1e-10
    assert a.r2 == pytest.approx(b.r2, abs=1e-12)


def test_within_route_on_unbalanced_panel(noisy_panel):
    frame = noisy_panel.frame.drop(index=[0, 5, 17]).reset_index(drop=True)
    panel = PanelDataset(frame, "vxf", "log")
    a = fit_fd_dynamic(panel, method="lsdv")
    b = fit_fd_dynamic(panel, method="within")
    for term in FD_DYNAMIC_TERMS:
        assert abs(a.coefficients[term] - b.coefficients[term]) < 1e-10


def test_hc1_matches_explicit_sandwich(noisy_panel):
    res = fit_fd_dynamic(noisy_panel)
    X = _lsdv_design(noisy_panel.frame, FD_DYNAMIC_TERMS)
    cov = hc1_explicit(X, res.residuals)
    se = np.sqrt(np.diag(cov))[: len(FD_DYNAMIC_TERMS)]
    np.testing.assert_allclose([res.robust_se[t] for t in FD_DYNAMIC_TERMS], se, rtol=1e-10)


@pytest.mark.parametrize("cov_type", ["HC0", "HC1", "HC2", "HC3"])
def test_robust_se_match_statsmodels(noisy_panel, cov_type):
    sm = pytest.importorskip("statsmodels.api")
    X = _lsdv_design(noisy_panel.frame, FD_DYNAMIC_TERMS)
    ref = sm.OLS(noisy_panel.frame["dy"].to_numpy(), X).fit(cov_type=cov_type, use_t=True)
    res = fit_fd_dynamic(noisy_panel, cov_type=cov_type)
    p = len(FD_DYNAMIC_TERMS)
    np.testing.assert_allclose([res.coefficients[t] for t in FD_DYNAMIC_TERMS], ref.params[:p], rtol=1e-9)
    np.testing.assert_allclose([res.robust_se[t] for t in FD_DYNAMIC_TERMS], ref.bse[:p], rtol=1e-9)
    np.testing.assert_allclose([res.pvalues[t] for t in FD_DYNAMIC_TERMS], ref.pvalues[:p], rtol=1e-6, atol=1e-12)
    assert res.r2_overall == pytest.approx(ref.rsquared, abs=1e-10)


def test_residuals_orthogonal_to_design(noisy_panel):
    res = fit_fd_dynamic(noisy_panel)
    X = _lsdv_design(noisy_panel.frame, FD_DYNAMIC_TERMS)
    assert np.max(np.abs(X.T @ res.residuals)) < 1e-9


def test_r2_invariant_to_base_country(noisy_panel):
    a = fit_fd_dynamic(noisy_panel)
    b = fit_fd_dynamic(noisy_panel, base_country="USA")
    assert a.r2 == pytest.approx(b.r2, abs=1e-12)
    assert a.coefficients["dC"] == pytest.approx(b.coefficients["dC"], abs=1e-12)


def test_within_r2_definition(noisy_panel):
    res = fit_fd_dynamic(noisy_panel)
    w = within_transform(noisy_panel.frame, ["dy"])["dy"].to_numpy()
    assert res.r2 == pytest.approx(1 - res.residuals @ res.residuals / (w @ w), abs=1e-12)
    assert res.adj_r2 == pytest.approx(1 - (1 - res.r2) * 119 / 71, abs=1e-12)


def test_collinear_regressor_is_named(noisy_panel):
    frame = noisy_panel.frame.assign(dK=2 * noisy_panel.frame["n"])
    with pytest.raises(CollinearityError) as err:
        fit_fd_dynamic(PanelDataset(frame, "vxf", "log"))
    assert err.value.details["columns"] == ["dK"]
    # a regressor that only varies by country is absorbed by the country effects
    const = noisy_panel.frame.groupby("country")["H_lag"].transform("first")
    with pytest.raises(CollinearityError) as err:
        fit_fd_dynamic(PanelDataset(noisy_panel.frame.assign(H_lag=const), "vxf", "log"))
    assert err.value.details["columns"] == ["H_lag"]


def test_bad_cov_type(noisy_panel):
    with pytest.raises(ValidationError):
        fit_fe(noisy_panel, FD_DYNAMIC_TERMS, "x", cov_type="HC9")


def test_unconditional_correlation_linear():
    x = np.array([0.1, -0.2, 0.3, 0.05])
    slope, r2 = unconditional_correlation(0.5 + 2 * x, x)
    assert slope == pytest.approx(2.0) and r2 == pytest.approx(1.0)
    slope, r2 = unconditional_correlation({"A": 1.0, "B": 2.0, "C": 2.5, "D": 9.0},
                                          {"A": 1.0, "B": 3.0, "C": 2.0})
    assert 0 < r2 < 1
    with pytest.raises(ValidationError):
        unconditional_correlation([1, 2], [1, 2])
    with pytest.raises(ValidationError):
        unconditional_correlation([1, 2, 3], [1, 1, 1])


def test_growth_pairs_long_run(dgp):
    aux, scores = dgp
    pairs = growth_pairs(aux, scores, "vxf")
    assert len(pairs) == 40
    row = pairs[pairs["country"] == "DEU"].iloc[0]
    expected = np.log(aux.get("DEU", 2014, "gdp_pc")) - np.log(aux.get("DEU", 2000, "gdp_pc"))
    assert row["gdp_growth"] == pytest.approx(expected, rel=1e-14)
    assert row["metric_growth"] == pytest.approx(np.log(scores[2014]["DEU"] / scores[2000]["DEU"]), rel=1e-12)


def test_render_table(dgp, noisy_panel):
    text = render_table([fit_fd_dynamic(noisy_panel), fit_within_fe(noisy_panel)])
    assert "Δlog(VXF)" in text and "log(VXF)_t-4" in text
    assert "Observations" in text and "120" in text
    assert stars(0.001) == "***" and stars(0.03) == "**" and stars(0.07) == "*" and stars(0.5) == ""


def test_aux_file_round_trip(tmp_path, dgp):
    from vxcomplexity.iot import load_auxiliary
    aux, scores = dgp
    path = tmp_path / "aux.csv"
    write_aux_csv(aux, path)
    loaded = load_auxiliary(path)
    a = fit_fd_dynamic(build_panel(aux, scores, "vxf"))
    b = fit_fd_dynamic(build_panel(loaded, scores, "vxf"))
    assert a.coefficients == b.coefficients
