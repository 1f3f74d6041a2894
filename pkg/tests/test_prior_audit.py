import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from bdml.model_core import Cov2
from bdml.prior_audit import (TPriorParams, induced_alpha_prior,
                              prior_selection_bias, prior_snr_r2,
                              sb_dispersion_slope)
from bdml.sur import sample_invwishart2


class TestTPriorParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            TPriorParams(0.0, 0.0, 4.0)
        with pytest.raises(ValueError):
            TPriorParams(0.0, 1.0, 0.0)

    def test_rvs_moments(self):
        t = TPriorParams(1.0, 2.0, 10.0)
        draws = t.rvs(200000, np.random.default_rng(0))
        assert draws.mean() == pytest.approx(1.0, abs=0.02)
        # Var = scale^2 * df/(df-2)
        assert draws.var() == pytest.approx(4.0 * 10 / 8, rel=0.03)


class TestInducedAlphaPrior:
    def test_identity_scale(self):
        t = induced_alpha_prior(4.0, Cov2(1.0, 0.0, 1.0))
        assert (t.location, t.scale, t.df) == (0.0, 0.5, 4.0)

    def test_known_offdiagonal_case(self):
        t = induced_alpha_prior(5.0, Cov2(2.0, 1.0, 1.0))
        assert t.location == pytest.approx(1.0)
        assert t.scale == pytest.approx(1.0 / np.sqrt(5.0))
        assert t.df == 5.0

    def test_diagonal_gives_symmetric_prior(self):
        t = induced_alpha_prior(7.0, Cov2(3.0, 0.0, 2.0))
        assert t.location == 0.0

    def test_invalid_nu0(self):
        with pytest.raises(ValueError):
            induced_alpha_prior(0.0, Cov2(1.0, 0.0, 1.0))

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_transformed_invwishart_draws(self, seed):
        # random PD scale matrices; 2e5 draws per case keeps this quick, the
        # acceptance suite repeats one case at 1e6
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(2, 2))
        m = a @ a.T + 0.5 * np.eye(2)
        sigma0 = Cov2.from_matrix(m)
        nu0 = float(rng.uniform(3.0, 10.0))
        t = induced_alpha_prior(nu0, sigma0)
        draws = sample_invwishart2(nu0, sigma0, rng, size=200000)
        alpha = draws[:, 1] / draws[:, 2]
        ks = scipy.stats.kstest(alpha, t.cdf).statistic
        assert ks < 0.01


class TestPriorSelectionBias:
    def test_draw_floor(self):
        with pytest.raises(ValueError, match=">= 1000"):
            prior_selection_bias("naive", 10, draws=10)

    def test_unknown_model(self):
        with pytest.raises(ValueError, match="unknown model"):
            prior_selection_bias("ols", 10)

    def test_naive_dispersion_shrinks_with_p(self):
        sd10 = prior_selection_bias("naive", 10, draws=20000, seed=0).std()
        sd1000 = prior_selection_bias("naive", 1000, draws=20000, seed=0).std()
        assert sd1000 < sd10 / 5  # expect ~1/sqrt(100) = 1/10

    def test_bdml_dispersion_stable_with_p(self):
        sd10 = prior_selection_bias("bdml", 10, draws=20000, seed=0).std()
        sd1000 = prior_selection_bias("bdml", 1000, draws=20000, seed=0).std()
        assert 0.75 < sd1000 / sd10 < 1.33

    def test_slopes(self):
        ps = [10, 100, 1000]
        naive = [prior_selection_bias("naive", p, draws=30000, seed=1).std()
                 for p in ps]
        bdml = [prior_selection_bias("bdml", p, draws=30000, seed=1).std()
                for p in ps]
        slope_n, _ = sb_dispersion_slope(ps, naive)
        slope_b, _ = sb_dispersion_slope(ps, bdml)
        assert slope_n == pytest.approx(-0.5, abs=0.1)
        assert slope_b == pytest.approx(0.0, abs=0.1)

    def test_zero_gamma_limit_is_induced_t_prior(self):
        # with gamma forced to ~0 the bdml SB equals Sigma_12/Sigma_22
        sb = prior_selection_bias("bdml", 2, draws=100000, seed=2,
                                  tau_gamma=1e12, nu0=5.0,
                                  sigma0=Cov2(1.0, 0.0, 1.0))
        t = induced_alpha_prior(5.0, Cov2(1.0, 0.0, 1.0))
        ks = scipy.stats.kstest(sb, t.cdf).statistic
        assert ks < 0.02

    def test_diagonal_sigma_x(self):
        spec = np.full(20, 2.0)
        sd_scaled = prior_selection_bias("naive", 20, draws=50000, seed=3,
                                         sigma_x_spec=spec).std()
        sd_unit = prior_selection_bias("naive", 20, draws=50000, seed=3).std()
        assert sd_scaled != sd_unit

    def test_sigma_x_spec_validation(self):
        with pytest.raises(ValueError, match="length-p"):
            prior_selection_bias("naive", 10, sigma_x_spec=np.ones(5))


class TestPriorSnrR2:
    def test_plug_in_values(self):
        assert prior_snr_r2(100.0, 100, 1.0, 1.0) == (1.0, 0.5)
        snr, r2 = prior_snr_r2(100.0 / 3, 100, 1.0, 1.0)
        assert snr == pytest.approx(3.0)
        assert r2 == pytest.approx(0.75)

    @settings(max_examples=50, deadline=None)
    @given(tau=st.floats(0.01, 100), p=st.integers(1, 1000),
           nv=st.floats(0.01, 10), mu1=st.floats(0.01, 10))
    def test_r2_snr_identity(self, tau, p, nv, mu1):
        snr, r2 = prior_snr_r2(tau, p, nv, mu1)
        assert r2 == pytest.approx(snr / (1 + snr))

    def test_prior_predictive_signal_variance(self):
        # simulate coefficients from the ridge prior and check the implied
        # signal-to-noise ratio at p=500
        tau, p, nv = 250.0, 500, 1.0
        snr, _ = prior_snr_r2(tau, p, nv, 1.0)
        rng = np.random.default_rng(4)
        x = rng.standard_normal((4000, p))
        coef = rng.standard_normal(p) / np.sqrt(tau)
        emp = np.var(x @ coef) / nv
        assert emp == pytest.approx(snr, rel=0.1)

    def test_validation(self):
        with pytest.raises(ValueError):
            prior_snr_r2(0.0, 10, 1.0, 1.0)
