#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "brute_force_ot.hpp"
#include "wtv/distributions.hpp"
#include "wtv/errors.hpp"
#include "wtv/transport.hpp"

using wtv::AtomSet;
using wtv::GaussianMixture;

namespace {

AtomSet random_atoms(std::mt19937_64& rng, std::size_t n, std::size_t d, bool uniform_mass = false) {
    std::uniform_real_distribution<double> loc(-2.0, 2.0), w(0.2, 1.0);
    std::vector<double> x(n * d), m(n);
    for (auto& v : x) v = loc(rng);
    double total = 0.0;
    for (auto& v : m) total += (v = uniform_mass ? 1.0 : w(rng));
    for (auto& v : m) v /= total;
    return AtomSet(d, std::move(x), std::move(m));
}

// W_q between equal-size, equal-mass 1-D sets: the monotone matching of sorted locations.
double sorted_matching_wq(const AtomSet& a, const AtomSet& b, double q) {
    std::vector<double> x(a.locations().begin(), a.locations().end());
    std::vector<double> y(b.locations().begin(), b.locations().end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i] - y[i]), q);
    return std::pow(s / static_cast<double>(x.size()), 1.0 / q);
}

double plan_cost(const wtv::TransportPlan& plan, double q) {
    double s = 0.0;
    for (std::size_t i = 0; i < plan.rows.size(); ++i) {
        for (std::size_t j = 0; j < plan.cols.size(); ++j) {
            double r = 0.0;
            for (std::size_t k = 0; k < plan.rows.dim(); ++k) {
                const double t = plan.rows.location(i)[k] - plan.cols.location(j)[k];
                r += t * t;
            }
            s += plan.mass(i, j) * std::pow(std::sqrt(r), q);
        }
    }
    return s;
}

}  // namespace

TEST(DistanceMethod, TagsRoundTrip) {
    for (auto m : {wtv::DistanceMethod::QuantileQuadrature, wtv::DistanceMethod::ExactOt, wtv::DistanceMethod::EntropicOt,
                   wtv::DistanceMethod::GridQuadrature}) {
        EXPECT_EQ(wtv::distance_method_from_string(wtv::to_string(m)), m);
    }
    EXPECT_THROW(wtv::distance_method_from_string("simplex"), wtv::PreconditionError);
}

TEST(Wasserstein1d, GaussianClosedForm) {
    const double cases[][4] = {{0.0, 1.0, 0.0, 1.0}, {0.0, 1.0, 0.7, 1.0}, {0.0, 1.0, 0.0, 2.5},
                               {-1.0, 0.5, 2.0, 1.5}, {0.3, 1.0, 0.3, 1.001}};
    for (const auto& c : cases) {
        const auto a = GaussianMixture::normal(c[0], c[1] * c[1]);
        const auto b = GaussianMixture::normal(c[2], c[3] * c[3]);
        const double exact = std::hypot(c[0] - c[2], c[1] - c[3]);
        EXPECT_NEAR(wtv::wasserstein_1d(a, b, 2.0).value, exact, 1e-9);
    }
}

TEST(Wasserstein1d, TranslationDistanceIsTheShiftForEveryOrder) {
    const auto a = wtv::blend(GaussianMixture::normal(-1.0, 0.5), GaussianMixture::normal(1.0, 1.0), 0.3);
    const double shift = 0.25;
    const auto b = wtv::translate(a, {&shift, 1});
    for (double q : {1.5, 2.0, 3.0}) EXPECT_NEAR(wtv::wasserstein_1d(a, b, q).value, shift, 1e-8) << "q = " << q;
}

TEST(Wasserstein1d, RejectsOrderAtMostOneAndHigherDimensions) {
    const auto a = GaussianMixture::normal(0.0, 1.0);
    EXPECT_THROW(wtv::wasserstein_1d(a, a, 1.0), wtv::PreconditionError);
    EXPECT_THROW(wtv::wasserstein_1d(a, a, 0.5), wtv::PreconditionError);
    const auto planar = GaussianMixture::isotropic(Eigen::Vector2d::Zero(), 1.0);
    EXPECT_THROW(wtv::wasserstein_1d(planar, planar, 2.0), wtv::PreconditionError);
}

TEST(TotalVariation, ShiftedNormalsMatchCdf) {
    const boost::math::normal_distribution<double> z;
    for (double mu : {1e-3, 0.1, 1.0, 3.0}) {
        const double exact = 2.0 * (2.0 * boost::math::cdf(z, mu / 2.0) - 1.0);
        const auto r = wtv::tv_mass(GaussianMixture::normal(0.0, 1.0), GaussianMixture::normal(mu, 1.0));
        EXPECT_NEAR(r.value, exact, 1e-6 * exact) << "mu = " << mu;
        EXPECT_EQ(r.method, wtv::DistanceMethod::GridQuadrature);
    }
}

TEST(RhoP, MatchesAdaptiveQuadrature) {
    const auto a = GaussianMixture::normal(0.0, 1.0);
    const auto b = GaussianMixture::normal(0.4, 1.0);
    using boost::math::quadrature::gauss_kronrod;
    for (double p : {1.0, 2.0, 3.5}) {
        auto integrand = [&](double x) {
            return (1.0 + std::pow(std::abs(x), p)) * std::abs(wtv::density_eval(a, {&x, 1}) - wtv::density_eval(b, {&x, 1}));
        };
        // Split at the density crossing and at the kink of |x|^p.
        double oracle = 0.0;
        const double cuts[] = {-40.0, 0.0, 0.2, 40.0};
        for (int s = 0; s < 3; ++s) oracle += gauss_kronrod<double, 61>::integrate(integrand, cuts[s], cuts[s + 1], 15, 1e-14);
        EXPECT_NEAR(wtv::rho_p(a, b, p).value, oracle, 1e-6 * oracle) << "p = " << p;
    }
}

TEST(RhoP, ZeroWeightIsTotalVariation) {
    const auto a = GaussianMixture::normal(0.0, 1.0);
    const auto b = GaussianMixture::normal(0.0, 1.5);
    EXPECT_NEAR(wtv::rho_p(a, b, 0.0).value, wtv::tv_mass(a, b).value, 1e-12);
    EXPECT_GE(wtv::rho_p(a, b, 2.0).value, wtv::tv_mass(a, b).value);
}

TEST(RhoP, GridRouteAgreesWithAnalyticRoute) {
    const auto a = GaussianMixture::isotropic(Eigen::Vector2d::Zero(), 1.0);
    const Eigen::Vector2d shift(0.3, 0.1);
    const auto b = wtv::translate(a, {shift.data(), 2});
    const auto spec = wtv::grid_from_box(wtv::auto_box(a, b, 1e-14), 256);
    const auto grid = wtv::rho_p(wtv::discretize(a, spec), wtv::discretize(b, spec), 2.0);
    const auto exact = wtv::rho_p(a, b, 2.0);
    EXPECT_NEAR(grid.value, exact.value, 1e-5 * exact.value);
    EXPECT_THROW(wtv::rho_p(wtv::discretize(a, spec), wtv::discretize(a, wtv::grid_from_box(wtv::auto_box(a, 1e-14), 128)), 2.0),
                 wtv::PreconditionError);
}

TEST(ExactOt, MatchesExhaustiveVertexSearch) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + trial % 3, m = 2 + (trial / 3) % 4, d = 1 + trial % 2;
        const double q = trial % 4 == 0 ? 1.0 : 2.0;
        const auto a = random_atoms(rng, n, d), b = random_atoms(rng, m, d);
        const double oracle = wtv_test::brute_force_wq(a, b, q);
        EXPECT_NEAR(wtv::ot_exact(a, b, q).first.value, oracle, 1e-10) << "trial " << trial;
    }
}

TEST(ExactOt, PlanIsFeasibleAndAttainsTheValue) {
    std::mt19937_64 rng(11);
    const auto a = random_atoms(rng, 30, 2), b = random_atoms(rng, 25, 2);
    const auto [dist, plan] = wtv::ot_exact(a, b, 2.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            EXPECT_GE(plan.mass(i, j), -1e-15);
            row += plan.mass(i, j);
        }
        EXPECT_NEAR(row, a.mass(i), 1e-12);
    }
    for (std::size_t j = 0; j < b.size(); ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) col += plan.mass(i, j);
        EXPECT_NEAR(col, b.mass(j), 1e-12);
    }
    EXPECT_NEAR(std::sqrt(plan_cost(plan, 2.0)), dist.value, 1e-12);
}

TEST(ExactOt, OneDimensionalSetsFollowTheSortedMatching) {
    std::mt19937_64 rng(3);
    for (double q : {1.0, 1.5, 2.0, 3.0}) {
        const auto a = random_atoms(rng, 60, 1, true), b = random_atoms(rng, 60, 1, true);
        EXPECT_NEAR(wtv::ot_exact(a, b, q).first.value, sorted_matching_wq(a, b, q), 1e-11) << "q = " << q;
    }
}

TEST(ExactOt, MetricProperties) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t d = 1 + trial % 2;
        const auto a = random_atoms(rng, 12, d), b = random_atoms(rng, 9, d), c = random_atoms(rng, 15, d);
        const double ab = wtv::ot_exact(a, b, 2.0).first.value;
        EXPECT_NEAR(ab, wtv::ot_exact(b, a, 2.0).first.value, 1e-12);
        EXPECT_LE(ab, wtv::ot_exact(a, c, 2.0).first.value + wtv::ot_exact(c, b, 2.0).first.value + 1e-12);
        EXPECT_NEAR(wtv::ot_exact(a, a, 2.0).first.value, 0.0, 1e-12);
    }
}

TEST(ExactOt, RejectsBadInput) {
    std::mt19937_64 rng(1);
    const auto a = random_atoms(rng, 4, 1), b = random_atoms(rng, 4, 2);
    EXPECT_THROW(wtv::ot_exact(a, b, 2.0), wtv::PreconditionError);
    EXPECT_THROW(wtv::ot_exact(a, a, 0.5), wtv::PreconditionError);
}

TEST(EntropicOt, UpperBoundsAndApproachesTheExactValue) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 4; ++trial) {
        const std::size_t d = 1 + trial % 2;
        const auto a = random_atoms(rng, 20, d), b = random_atoms(rng, 24, d);
        const double exact = wtv::ot_exact(a, b, 2.0).first.value;
        const auto ent = wtv::ot_entropic(a, b, 2.0);
        EXPECT_EQ(ent.method, wtv::DistanceMethod::EntropicOt);
        EXPECT_GE(ent.value, exact * (1.0 - 1e-9));
        EXPECT_LE(ent.value, exact * 1.01);
        EXPECT_GE(ent.err, 0.0);
    }
}

TEST(EntropicOt, IdenticalSetsCostNothing) {
    // Well-separated atoms so the annealed plan concentrates on the diagonal.
    const AtomSet a(1, {-3.0, 0.0, 2.0, 5.0}, {0.1, 0.2, 0.3, 0.4});
    EXPECT_LE(wtv::ot_entropic(a, a, 2.0).value, 1e-6);
}

TEST(EntropicOt, RejectsMalformedSchedules) {
    std::mt19937_64 rng(2);
    const auto a = random_atoms(rng, 5, 1);
    wtv::SinkhornOptions opts;
    opts.schedule = {1e-2, 1e-1};
    EXPECT_THROW(wtv::ot_entropic(a, a, 2.0, opts), wtv::PreconditionError);
    opts.schedule = {};
    EXPECT_THROW(wtv::ot_entropic(a, a, 2.0, opts), wtv::PreconditionError);
}

TEST(FortetMourier, BoundedByTwoAndByW1) {
    const auto a = GaussianMixture::normal(0.0, 1.0);
    EXPECT_NEAR(wtv::fm_upper(a, GaussianMixture::normal(0.5, 1.0)).value, 0.5, 1e-8);
    EXPECT_DOUBLE_EQ(wtv::fm_upper(a, GaussianMixture::normal(10.0, 1.0)).value, 2.0);
    std::mt19937_64 rng(17);
    const auto x = random_atoms(rng, 40, 1, true), y = random_atoms(rng, 40, 1, true);
    EXPECT_NEAR(wtv::fm_upper(x, y).value, std::min(2.0, sorted_matching_wq(x, y, 1.0)), 1e-12);
}
