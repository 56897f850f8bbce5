#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>

#include "wtv/distributions.hpp"
#include "wtv/errors.hpp"
#include "wtv/spectral.hpp"

using wtv::GaussianMixture;
using wtv::MultiIndex;
using cd = std::complex<double>;

namespace {

GaussianMixture bimodal() {
    return wtv::blend(GaussianMixture::normal(-1.0, 0.6), GaussianMixture::normal(1.5, 0.9), 0.4);
}

GaussianMixture planar() {
    wtv::MixtureComponent c0{0.5, Eigen::Vector2d(0.3, -0.2), Eigen::Matrix2d{{0.8, 0.2}, {0.2, 0.6}}};
    wtv::MixtureComponent c1{0.5, Eigen::Vector2d(-0.4, 0.5), Eigen::Matrix2d{{1.1, -0.1}, {-0.1, 0.9}}};
    return GaussianMixture(2, {c0, c1});
}

wtv::GridSpec grid_for(const GaussianMixture& dist, std::size_t n) {
    return wtv::grid_from_box(wtv::auto_box(dist, 1e-14), n);
}

}  // namespace

TEST(MultiIndex, CountsAndMultinomials) {
    EXPECT_EQ(wtv::multi_indices(1, 4).size(), 1u);
    EXPECT_EQ(wtv::multi_indices(2, 4).size(), 5u);
    EXPECT_EQ(wtv::multi_indices(3, 4).size(), 15u);
    EXPECT_DOUBLE_EQ(wtv::multinomial(MultiIndex{2, 1, 1}), 12.0);
    double total = 0.0;
    for (const auto& a : wtv::multi_indices(3, 3)) total += wtv::multinomial(a);
    EXPECT_DOUBLE_EQ(total, 27.0);  // 3^3
}

TEST(CharFn, GridTransformMatchesClosedForm) {
    for (const auto& dist : {bimodal(), planar()}) {
        const auto spec = grid_for(dist, dist.dim() == 1 ? 1024 : 128);
        const auto phi = wtv::char_fn_grid(wtv::discretize(dist, spec));
        const auto exact = wtv::char_fn_on_grid(dist, spec);
        double worst = 0.0;
        for (std::size_t j = 0; j < phi.values.size(); ++j) worst = std::max(worst, std::abs(phi.values[j] - exact.values[j]));
        EXPECT_LT(worst, 1e-10);
        EXPECT_NEAR(std::abs(phi.values[phi.zero_index()] - 1.0), 0.0, 1e-12);
    }
}

TEST(CharFn, UnitFrequencyIsANode) {
    // A box of length 8 pi puts u = 1 on the dual grid.
    const double pi = std::acos(-1.0);
    const auto spec = wtv::make_grid_1d(-4.0 * pi, 4.0 * pi, 512);
    const auto dist = GaussianMixture::normal(0.5, 1.0);
    const auto phi = wtv::char_fn_grid(wtv::discretize(dist, spec));
    const std::size_t j = spec.n[0] / 2 + 4;
    ASSERT_NEAR(spec.frequency(0, j), 1.0, 1e-14);
    const cd expected = std::exp(cd(0.0, 0.5)) * std::exp(-0.5);
    EXPECT_NEAR(std::abs(phi.values[j] - expected), 0.0, 1e-12);
}

TEST(CharFn, InverseRoundTripIsExact) {
    const auto dist = planar();
    const auto f = wtv::discretize(dist, grid_for(dist, 64));
    const auto back = wtv::inverse_char_fn(wtv::char_fn_grid(f));
    for (std::size_t i = 0; i < back.values.size(); ++i) EXPECT_NEAR(back.values[i], f.values()[i], 1e-14);
}

TEST(CharFn, DerivativeMatchesFiniteDifferences) {
    const auto dist = planar();
    const double u[2] = {0.7, -0.4};
    const double h = 1e-4;
    for (const auto& alpha : {MultiIndex{1, 0, 0}, MultiIndex{0, 1, 0}, MultiIndex{1, 1, 0}, MultiIndex{2, 0, 0}}) {
        // Central differences of the closed form, one axis at a time.
        auto phi_at = [&](double dx, double dy) {
            const double v[2] = {u[0] + dx, u[1] + dy};
            return wtv::char_fn_analytic(dist, v);
        };
        cd fd;
        if (alpha == MultiIndex{1, 0, 0}) fd = (phi_at(h, 0) - phi_at(-h, 0)) / (2 * h);
        else if (alpha == MultiIndex{0, 1, 0}) fd = (phi_at(0, h) - phi_at(0, -h)) / (2 * h);
        else if (alpha == MultiIndex{1, 1, 0}) fd = (phi_at(h, h) - phi_at(h, -h) - phi_at(-h, h) + phi_at(-h, -h)) / (4 * h * h);
        else fd = (phi_at(h, 0) - 2.0 * phi_at(0, 0) + phi_at(-h, 0)) / (h * h);
        const cd exact = wtv::char_fn_derivative(dist, u, alpha);
        EXPECT_NEAR(std::abs(exact - fd), 0.0, 1e-6);
        EXPECT_NEAR(wtv::log_abs_char_fn_derivative(dist, u, alpha), std::log(std::abs(exact)), 1e-10);
    }
}

TEST(DensityDerivative, MatchesFiniteDifferences) {
    const auto dist = bimodal();
    const double h = 1e-3;
    for (double x : {-2.0, 0.1, 1.3}) {
        auto f = [&](double y) { return wtv::density_eval(dist, {&y, 1}); };
        const double d1 = (f(x + h) - f(x - h)) / (2 * h);
        const double d2 = (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
        EXPECT_NEAR(wtv::density_derivative_analytic(dist, {&x, 1}, MultiIndex{1, 0, 0}), d1, 1e-6);
        EXPECT_NEAR(wtv::density_derivative_analytic(dist, {&x, 1}, MultiIndex{2, 0, 0}), d2, 1e-5);
        const double v = wtv::density_derivative_analytic(dist, {&x, 1}, MultiIndex{3, 0, 0});
        EXPECT_NEAR(wtv::log_abs_density_derivative(dist, {&x, 1}, MultiIndex{3, 0, 0}), std::log(std::abs(v)), 1e-10);
    }
    // Far tails stay finite in log space where the value itself underflows.
    const double far = 80.0;
    EXPECT_TRUE(std::isfinite(wtv::log_abs_density_derivative(dist, {&far, 1}, MultiIndex{4, 0, 0})));
}

TEST(SpectralDerivative, DensitySideMatchesClosedForm) {
    const auto dist = planar();
    const auto spec = grid_for(dist, 128);
    const auto phi = wtv::char_fn_grid(wtv::discretize(dist, spec));
    for (const auto& alpha : {MultiIndex{1, 0, 0}, MultiIndex{1, 2, 0}}) {
        const auto g = wtv::spectral_density_derivative(phi, alpha);
        double worst = 0.0, peak = 0.0;
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            const auto x = spec.point(i);
            const double exact = wtv::density_derivative_analytic(dist, {x.data(), 2}, alpha);
            worst = std::max(worst, std::abs(g.values[i] - exact));
            peak = std::max(peak, std::abs(exact));
        }
        EXPECT_LT(worst, 1e-8 * peak);
    }
}

TEST(SpectralDerivative, FrequencySideMatchesClosedForm) {
    const auto dist = bimodal();
    const auto spec = grid_for(dist, 1024);
    const auto f = wtv::discretize(dist, spec);
    for (int k = 1; k <= 4; ++k) {
        const MultiIndex alpha{k, 0, 0};
        const auto g = wtv::spectral_char_derivative(f, alpha);
        double worst = 0.0;
        for (std::size_t j = 0; j < g.values.size(); ++j) {
            const double u = spec.frequency(0, j);
            worst = std::max(worst, std::abs(g.values[j] - wtv::char_fn_derivative(dist, {&u, 1}, alpha)));
        }
        EXPECT_LT(worst, 1e-9) << "k = " << k;
    }
}

TEST(DeltaP, ClosedFormIsSumOfPureDerivatives) {
    const auto dist = planar();
    const double u[2] = {0.4, 1.1};
    for (int p : {2, 4}) {
        const cd sum = wtv::char_fn_derivative(dist, u, MultiIndex{p, 0, 0}) + wtv::char_fn_derivative(dist, u, MultiIndex{0, p, 0});
        EXPECT_NEAR(std::abs(wtv::delta_p_analytic(dist, u, p) - sum), 0.0, 1e-13);
    }
    EXPECT_THROW(wtv::delta_p_analytic(dist, u, 3), wtv::PreconditionError);
}

TEST(DeltaP, GridMatchesClosedForm) {
    const auto dist = bimodal();
    const auto spec = grid_for(dist, 2048);
    const auto dp = wtv::delta_p_char(dist, spec, 2);
    double worst = 0.0;
    for (std::size_t j = 0; j < dp.values.size(); ++j) {
        const double u = spec.frequency(0, j);
        worst = std::max(worst, std::abs(dp.values[j] - wtv::delta_p_analytic(dist, {&u, 1}, 2)));
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Reconstruction, WeightedDifferenceInTwoDimensions) {
    const auto a = planar();
    const Eigen::Vector2d shift(0.3, -0.1);
    const auto b = wtv::translate(a, {shift.data(), 2});
    const auto spec = wtv::grid_from_box(wtv::auto_box(a, b, 1e-14), 128);
    const auto rec = wtv::weighted_diff_reconstruct(a, b, spec, 2);
    double worst = 0.0;
    for (std::size_t i = 0; i < rec.values.size(); ++i) {
        const auto x = spec.point(i);
        const double direct = (wtv::density_eval(a, {x.data(), 2}) - wtv::density_eval(b, {x.data(), 2})) *
                              (x[0] * x[0] + x[1] * x[1]);
        worst = std::max(worst, std::abs(rec.values[i] - direct));
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(PolyEnvelope, NumericalTablesAgreeWithClosedForm) {
    const auto dist = bimodal();
    const auto spec = grid_for(dist, 2048);
    const auto num_d = wtv::poly_envelope(wtv::discretize(dist, spec), 3, 5);
    const auto ana_d = wtv::poly_envelope_analytic(dist, spec, wtv::EnvelopeSide::Density, 3, 5);
    const auto num_f = wtv::poly_envelope(wtv::char_fn_grid(wtv::discretize(dist, spec)), 3, 5);
    const auto ana_f = wtv::poly_envelope_analytic(dist, spec, wtv::EnvelopeSide::Frequency, 3, 5);
    for (int k = 0; k <= 3; ++k) {
        for (int l = 0; l <= 5; ++l) {
            EXPECT_NEAR(num_d.at(k, l), ana_d.at(k, l), 1e-6 * ana_d.at(k, l));
            EXPECT_NEAR(num_f.at(k, l), ana_f.at(k, l), 1e-6 * ana_f.at(k, l));
        }
    }
    EXPECT_TRUE(num_d.empirical);
    EXPECT_EQ(num_f.side, wtv::EnvelopeSide::Frequency);
}

TEST(PolyEnvelope, NondecreasingInTheWeight) {
    const auto dist = planar();
    const auto t = wtv::poly_envelope(wtv::discretize(dist, grid_for(dist, 128)), 2, 4);
    for (int k = 0; k <= 2; ++k) {
        for (int l = 1; l <= 4; ++l) EXPECT_GE(t.at(k, l), t.at(k, l - 1));
    }
    EXPECT_THROW(t.at(3, 0), wtv::PreconditionError);
}

TEST(PolyEnvelope, UnresolvedSpectrumIsRejected) {
    // Narrow density on a coarse grid: |u|^K |phi| has not decayed at the dual edge.
    const auto dist = GaussianMixture::normal(0.0, 0.01);
    const auto spec = wtv::make_grid_1d(-8.0, 8.0, 64);
    EXPECT_THROW(wtv::poly_envelope(wtv::discretize(dist, spec), 2, 2), wtv::NumericalError);
}

TEST(PolyEnvelope, TruncatedBoxIsRejectedOnTheFrequencySide) {
    const auto dist = GaussianMixture::normal(0.0, 1.0);
    const auto spec = wtv::make_grid_1d(-4.0, 4.0, 256);
    EXPECT_THROW(wtv::poly_envelope(wtv::char_fn_on_grid(dist, spec), 4, 2), wtv::NumericalError);
}

TEST(PolyEnvelope, SumTablesIsEntrywise) {
    const auto dist = bimodal();
    const auto spec = grid_for(dist, 512);
    const auto a = wtv::poly_envelope_analytic(dist, spec, wtv::EnvelopeSide::Density, 1, 2);
    const auto s = wtv::sum_tables(a, a);
    for (int k = 0; k <= 1; ++k) {
        for (int l = 0; l <= 2; ++l) EXPECT_DOUBLE_EQ(s.at(k, l), 2.0 * a.at(k, l));
    }
}

TEST(ExpEnvelope, BoundsTheWeightedIntegral) {
    const auto dist = GaussianMixture::normal(0.0, 1.0);
    const auto spec = wtv::make_grid_1d(-20.0, 20.0, 1024);
    const auto table = wtv::exp_envelope(wtv::char_fn_on_grid(dist, spec), 2);
    ASSERT_EQ(table.entries.size(), 3u);
    using boost::math::quadrature::gauss_kronrod;
    for (int k = 0; k <= 2; ++k) {
        const auto& e = table.entries[static_cast<std::size_t>(k)];
        EXPECT_GT(e.r, 0.0);
        EXPECT_LT(e.slope, 0.0);
        const double oracle = 2.0 * gauss_kronrod<double, 61>::integrate(
                                        [&](double u) {
                                            return std::abs(wtv::char_fn_derivative(dist, {&u, 1}, MultiIndex{k, 0, 0})) *
                                                   std::exp(e.r * u);
                                        },
                                        0.0, 60.0, 15, 1e-13);
        EXPECT_GE(e.c, oracle * (1.0 - 1e-6)) << "k = " << k;
        EXPECT_LE(e.c, oracle * 1.05) << "k = " << k;
    }
}

TEST(ExpEnvelope, WiderLawDecaysFaster) {
    const auto spec = wtv::make_grid_1d(-40.0, 40.0, 2048);
    const auto narrow = wtv::exp_envelope_analytic(GaussianMixture::normal(0.0, 1.0), spec, 0);
    const auto wide = wtv::exp_envelope_analytic(GaussianMixture::normal(0.0, 4.0), spec, 0);
    // |phi| = exp(-sigma^2 u^2 / 2) falls off faster for the larger sigma.
    EXPECT_GT(wide.entries[0].r, narrow.entries[0].r);
}

TEST(ExpEnvelope, BandReachingTheEdgeIsAHypothesisFailure) {
    const auto dist = GaussianMixture::normal(0.0, 1e-4);
    const auto spec = wtv::make_grid_1d(-1.0, 1.0, 64);
    EXPECT_THROW(wtv::exp_envelope(wtv::char_fn_on_grid(dist, spec), 0), wtv::HypothesisError);
}

TEST(ExpEnvelope, CombineTakesMinRateAndSumConstant) {
    wtv::ExpEnvelopeTable a, b;
    a.entries = {{0.5, 2.0}, {0.4, 3.0}};
    b.entries = {{0.3, 1.0}, {0.6, 1.5}};
    const auto c = wtv::combine_exp(a, b);
    EXPECT_DOUBLE_EQ(c.entries[0].r, 0.3);
    EXPECT_DOUBLE_EQ(c.entries[0].c, 3.0);
    EXPECT_DOUBLE_EQ(c.entries[1].r, 0.4);
    EXPECT_DOUBLE_EQ(c.entries[1].c, 4.5);
}
