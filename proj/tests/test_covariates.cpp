#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "profreg/covariates.hpp"
#include "profreg/sampler.hpp"

using namespace profreg;

namespace {

Dataset continuousData(const std::vector<double>& x) {
    Dataset d;
    d.x.resize(Eigen::Index(x.size()), 1);
    for (std::size_t i = 0; i < x.size(); ++i) d.x(Eigen::Index(i), 0) = x[i];
    d.kinds = {CovariateKind::Continuous};
    d.nCategories = {0};
    d.w.resize(Eigen::Index(x.size()), 0);
    return d;
}

Dataset discreteData(const std::vector<int>& x, int k) {
    Dataset d;
    d.x.resize(Eigen::Index(x.size()), 1);
    for (std::size_t i = 0; i < x.size(); ++i) d.x(Eigen::Index(i), 0) = x[i];
    d.kinds = {CovariateKind::Discrete};
    d.nCategories = {k};
    d.w.resize(Eigen::Index(x.size()), 0);
    return d;
}

HyperParams gaussianPrior(double mu0, double sigma0, double r0, double kappa0) {
    HyperParams hp;
    hp.mu0 = Eigen::VectorXd::Constant(1, mu0);
    hp.Sigma0 = Eigen::MatrixXd::Constant(1, 1, sigma0);
    hp.R0 = Eigen::MatrixXd::Constant(1, 1, r0);
    hp.kappa0 = kappa0;
    return hp;
}

CovariateStats stats1(const std::vector<double>& xs) {
    CovariateStats s;
    s.nC = int(xs.size());
    s.sumX = Eigen::VectorXd::Zero(1);
    s.sumOuter = Eigen::MatrixXd::Zero(1, 1);
    for (double x : xs) {
        s.sumX[0] += x;
        s.sumOuter(0, 0) += x * x;
    }
    return s;
}

}  // namespace

TEST_CASE("gaussian log-likelihood") {
    const double l2pi = std::log(2 * std::numbers::pi);
    CHECK(gaussianLogLik(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)) ==
          doctest::Approx(-0.5 * l2pi));
    const Eigen::Vector2d mu(1, -2);
    CHECK(gaussianLogLik(mu, mu, Eigen::Matrix2d::Identity()) == doctest::Approx(-l2pi));

    // One coordinate missing: compare with the 2-D density integrated over that coordinate.
    Eigen::Matrix2d s;
    s << 2.0, 0.7, 0.7, 1.5;
    const Eigen::Vector2d m(0.3, -0.4);
    const double x0 = 1.1;
    const std::vector<std::uint8_t> mask{0, 1};
    const double marginal = gaussianLogLik(Eigen::Vector2d(x0, 123.0), mask, m, s);
    const double quad = oracle::integrate(
        [&](double x1) { return gaussianLogLik(Eigen::Vector2d(x0, x1), m, s); }, -30, 30, 200000);
    CHECK(marginal == doctest::Approx(std::log(quad)).epsilon(1e-8));
}

TEST_CASE("discrete log-likelihood and composites") {
    std::vector<Eigen::VectorXd> uniform(10, Eigen::Vector2d(0.5, 0.5));
    std::vector<int> x(10, 1);
    CHECK(discreteLogLik(x, {}, uniform) == doctest::Approx(10 * std::log(0.5)));
    std::vector<Eigen::VectorXd> phi{Eigen::Vector2d(0.2, 0.8), Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.1, 0.9)};
    const std::vector<std::uint8_t> mask{0, 0, 1};
    CHECK(discreteLogLik(std::vector<int>{1, 0, 0}, mask, phi) == doctest::Approx(std::log(0.8) + std::log(0.5)));

    CHECK(compositePhi(0.8, 0.4, 1.0) == 0.8);
    CHECK(compositePhi(0.8, 0.4, 0.0) == 0.4);
    CHECK(compositePhi(0.8, 0.4, 0.5) == doctest::Approx(0.6));
    CHECK(compositeMu(2.0, -2.0, 1.0) == 2.0);
    CHECK(compositeMu(2.0, -2.0, 0.0) == -2.0);
    CHECK(compositeMu(2.0, -2.0, 0.25) == doctest::Approx(-1.0));
}

TEST_CASE("dirichlet conjugate update") {
    RngStream rng(11);
    const std::vector<Eigen::VectorXd> a{Eigen::Vector2d(1, 1)};
    std::vector<double> first, prior;
    for (int k = 0; k < 100000; ++k) {
        const auto phi = discreteConjugateUpdate({Eigen::Vector2d(9, 1)}, a, rng);
        REQUIRE(std::abs(phi[0].sum() - 1.0) < 1e-12);
        first.push_back(phi[0][0]);
        prior.push_back(discreteConjugateUpdate({Eigen::Vector2d(0, 0)}, a, rng)[0][0]);
    }
    const auto m = oracle::moments(first);
    CHECK(std::abs(m.mean - 10.0 / 12.0) < 3 * m.se);
    const auto p = oracle::moments(prior);
    CHECK(std::abs(p.mean - 0.5) < 3 * p.se);

    // K = 2, n = 4 with counts (3, 1) and a = (0.5, 2): grid posterior of phi_0.
    const std::vector<Eigen::VectorXd> a2{Eigen::Vector2d(0.5, 2.0)};
    std::vector<double> d;
    for (int k = 0; k < 100000; ++k) d.push_back(discreteConjugateUpdate({Eigen::Vector2d(3, 1)}, a2, rng)[0][0]);
    const auto grid = oracle::gridMoments(
        [](double t) { return 2.5 * std::log(t) + 2.0 * std::log1p(-t); }, 0, 1, 200000);
    const auto md = oracle::moments(d);
    CHECK(std::abs(md.mean - grid.mean) < 3 * md.se);
    CHECK(std::abs(md.var - grid.var) < 0.05 * grid.var);
}

TEST_CASE("gaussian conjugate update matches the grid posterior") {
    const std::vector<double> xs{0.4, 1.9, 1.1};
    const Dataset d = continuousData(xs);
    const HyperParams hp = gaussianPrior(0.0, 4.0, 0.5, 5.0);
    const ModelContext ctx(d, hp);
    const CovariateStats st = stats1(xs);
    RngStream rng(12);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(1);
    std::vector<double> mus, sigmas;
    for (int t = 0; t < 200000; ++t) {
        auto [m, s] = gaussianConjugateUpdate(st, mu, Eigen::VectorXd::Ones(1), ctx, rng);
        mu = m;
        mus.push_back(m[0]);
        sigmas.push_back(s(0, 0));
    }
    // Prior: mu ~ N(0, 4); 1/sigma^2 ~ Gamma(kappa0/2, rate 1/(2 R0)).
    auto logPost = [&](double m, double s2) {
        double out = -0.5 * m * m / 4.0;
        out += -(5.0 / 2.0 + 1.0) * std::log(s2) - 1.0 / (2.0 * 0.5 * s2);
        for (double x : xs) out += -0.5 * std::log(s2) - 0.5 * (x - m) * (x - m) / s2;
        return out;
    };
    const auto grid = oracle::gridMoments2(logPost, -6, 8, 1e-4, 30, 1500);
    CHECK(std::abs(oracle::moments(mus).mean - grid.a.mean) < 3 * oracle::batchMeansSE(mus));
    CHECK(std::abs(oracle::moments(sigmas).mean - grid.b.mean) < 3 * oracle::batchMeansSE(sigmas));
}

TEST_CASE("gaussian conjugate update: empty cluster and strong data") {
    const Dataset d = continuousData({0.0, 1.0});
    const HyperParams hp = gaussianPrior(1.0, 2.0, 0.5, 4.0);
    const ModelContext ctx(d, hp);
    RngStream rng(13);
    std::vector<double> mus, sig;
    for (int t = 0; t < 20000; ++t) {
        auto [m, s] = gaussianConjugateUpdate(stats1({}), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), ctx, rng);
        mus.push_back(m[0]);
        sig.push_back(s(0, 0));
    }
    const auto mm = oracle::moments(mus);
    CHECK(std::abs(mm.mean - 1.0) < 3 * mm.se);
    const auto ms = oracle::moments(sig);
    CHECK(std::abs(ms.mean - 1.0 / (0.5 * 2.0)) < 3 * ms.se);

    std::vector<double> big(10000);
    for (int i = 0; i < 10000; ++i) big[std::size_t(i)] = 5.0 + ((i % 2) ? 1.0 : -1.0);
    const CovariateStats sb = stats1(big);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(1);
    double sum = 0;
    for (int t = 0; t < 200; ++t) {
        mu = gaussianConjugateUpdate(sb, mu, Eigen::VectorXd::Ones(1), ctx, rng).first;
        if (t >= 20) sum += mu[0];
    }
    CHECK(std::abs(sum / 180 - 5.0) < 0.1);
}

TEST_CASE("mu posterior under selection") {
    // Members 1, 2, 3, 2 (mean 2); the other four values are 0 so the data mean is 1.
    const Dataset d = continuousData({1, 2, 3, 2, 0, 0, 0, 0});
    const HyperParams hp = gaussianPrior(0.0, 1.0, 1.0, 3.0);
    const ModelContext ctx(d, hp);
    REQUIRE(ctx.nullProfile.xbar[0] == doctest::Approx(1.0));
    const CovariateStats st = stats1({1, 2, 3, 2});
    const Eigen::MatrixXd sc = Eigen::MatrixXd::Identity(1, 1);

    const auto [mean, cov] = muPosteriorVSMoments(st, Eigen::VectorXd::Constant(1, 0.5), sc, ctx);
    CHECK(cov(0, 0) == doctest::Approx(0.5));
    CHECK(mean[0] == doctest::Approx(1.5));

    // Independent grid oracle of p(mu) N(mu; 0, 1) prod_i N(x_i; 0.5 mu + 0.5 xbar, 1).
    const auto grid = oracle::gridMoments(
        [](double m) {
            double out = -0.5 * m * m;
            for (double x : {1.0, 2.0, 3.0, 2.0}) out += -0.5 * (x - 0.5 * m - 0.5) * (x - 0.5 * m - 0.5);
            return out;
        },
        -10, 10);
    CHECK(grid.mean == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(grid.var == doctest::Approx(0.5).epsilon(1e-6));

    RngStream rng(14);
    std::vector<double> draws;
    for (int t = 0; t < 100000; ++t) draws.push_back(muPosteriorVS(st, Eigen::VectorXd::Constant(1, 0.5), sc, ctx, rng)[0]);
    const auto m = oracle::moments(draws);
    CHECK(std::abs(m.mean - 1.5) < 3 * m.se);
    CHECK(std::abs(m.var - 0.5) < 3 * 0.5 * std::sqrt(2.0 / 100000));

    const auto [m1, c1] = muPosteriorVSMoments(st, Eigen::VectorXd::Ones(1), sc, ctx);
    CHECK(c1(0, 0) == doctest::Approx(1.0 / 5.0));
    CHECK(m1[0] == doctest::Approx(8.0 / 5.0));
    const auto [m0, c0] = muPosteriorVSMoments(st, Eigen::VectorXd::Zero(1), sc, ctx);
    CHECK(c0(0, 0) == doctest::Approx(1.0));
    CHECK(m0[0] == doctest::Approx(0.0));
}

TEST_CASE("mixed covariates: joint likelihood is the sum of the two blocks") {
    Dataset d;
    d.x.resize(3, 3);
    d.x << 0, 1.2, 2, 1, -0.4, 0, 1, 0.3, 1;
    d.kinds = {CovariateKind::Discrete, CovariateKind::Continuous, CovariateKind::Discrete};
    d.nCategories = {2, 0, 3};
    d.w.resize(3, 0);
    const ModelContext ctx(d, HyperParams{});
    RngStream rng(15);
    ClusterParams c;
    GlobalParams g;
    drawCovariatePrior(c, g, ctx, rng);
    const CovariateCache cache = buildCovariateCache(c, g, ctx);
    for (int i = 0; i < 3; ++i) {
        const double disc = discreteLogLik(std::vector<int>{int(d.x(i, 0)), int(d.x(i, 2))}, {}, c.phi);
        const double gauss = gaussianLogLik(Eigen::VectorXd::Constant(1, d.x(i, 1)), c.mu, c.Sigma);
        CHECK(covariateLogLik(i, cache, ctx) == doctest::Approx(disc + gauss));
        const std::vector<double> row{d.x(i, 0), d.x(i, 1), d.x(i, 2)};
        CHECK(covariateLogLikRow(row, {}, cache, ctx) == doctest::Approx(disc + gauss));
    }
}

TEST_CASE("hard selection: gamma conditional equals the prior when phi = phi0") {
    const Dataset d = discreteData({0, 1, 1, 0, 1, 1}, 2);
    HyperParams hp;
    hp.varSelectType = VarSelectType::BinaryCluster;
    const ModelContext ctx(d, hp);
    ClusterParams c;
    c.phi = {ctx.nullProfile.phi0[0]};
    c.gamma = {1};
    GlobalParams g;
    g.rho = Eigen::VectorXd::Constant(1, 0.3);
    const std::vector<int> members{0, 1, 2, 3, 4, 5};
    const CovariateStats st = computeCovariateStats(ctx, d.x, members);
    CHECK(gammaConditionalProbability(c, st, g, ctx, 0) == doctest::Approx(0.3));
    RngStream rng(16);
    int ones = 0;
    const int reps = 20000;
    for (int t = 0; t < reps; ++t) ones += rng.uniform() < gammaConditionalProbability(c, st, g, ctx, 0) ? 1 : 0;
    const double se = std::sqrt(0.3 * 0.7 / reps);
    CHECK(std::abs(double(ones) / reps - 0.3) < 3 * se);
}

TEST_CASE("soft selection: Metropolis phi update matches the grid posterior") {
    // One discrete covariate with two categories; every individual in cluster 1.
    const Dataset d = discreteData({0, 0, 0, 1, 0, 0, 1, 0}, 2);
    HyperParams hp;
    hp.varSelectType = VarSelectType::Continuous;
    hp.nClusInit = 1;
    SamplerConfig cfg;
    cfg.labelSwitching = false;
    Sampler s(d, hp, cfg);
    s.initialize();
    auto& st = s.state();
    const auto& ctx = s.context();
    std::fill(st.alloc.z.begin(), st.alloc.z.end(), 1);
    st.refreshAllocationSummaries();
    const double zeta = 0.6;
    st.globals.zeta = Eigen::VectorXd::Constant(1, zeta);
    st.globals.rho = st.globals.zeta;
    const double phi0 = ctx.nullProfile.phi0[0][0];
    RngStream rng(17);
    std::vector<double> draws;
    for (int t = 0; t < 2000; ++t) updateClusterCovariates(st, 1, ctx, rng);
    st.kernels.setAdaptation(false);
    for (int t = 0; t < 1000000; ++t) {
        updateClusterCovariates(st, 1, ctx, rng);
        draws.push_back(st.cluster(1).phi[0][0]);
    }
    // counts (6, 2), Dirichlet(1, 1) prior on phi.
    const auto grid = oracle::gridMoments(
        [&](double p) {
            return 6 * std::log(zeta * p + (1 - zeta) * phi0) + 2 * std::log(zeta * (1 - p) + (1 - zeta) * (1 - phi0));
        },
        0, 1);
    CHECK(std::abs(oracle::moments(draws).mean - grid.mean) < 3 * oracle::batchMeansSE(draws));
}

TEST_CASE("rho given gamma") {
    Dataset d = discreteData({0, 1}, 2);
    HyperParams hp;
    hp.varSelectType = VarSelectType::BinaryCluster;
    const ModelContext ctx(d, hp);
    RngStream rng(18);
    // No selected cluster out of 4: P(slab) = B(a, b + 4) / B(a, b) / (1 + that ratio).
    const double a = hp.aRho, b = hp.bRho;
    const double ratio = std::exp(std::lgamma(b + 4) - std::lgamma(a + b + 4) - std::lgamma(b) + std::lgamma(a + b));
    const double pSlab = ratio / (1 + ratio);
    int slab = 0;
    const int reps = 40000;
    for (int t = 0; t < reps; ++t) slab += drawRhoGivenGamma(0, 4, ctx, rng).first;
    CHECK(std::abs(double(slab) / reps - pSlab) < 3 * std::sqrt(pSlab * (1 - pSlab) / reps));
    std::vector<double> r;
    for (int t = 0; t < reps; ++t) r.push_back(drawRhoGivenGamma(3, 4, ctx, rng).second);
    const auto m = oracle::moments(r);
    CHECK(std::abs(m.mean - (a + 3) / (a + b + 4)) < 3 * m.se);
}
