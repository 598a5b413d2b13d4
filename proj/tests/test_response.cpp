#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "profreg/response.hpp"
#include "profreg/sampler.hpp"

using namespace profreg;

namespace {

double ll(ResponseKind k, double y, double eta, ResponseAux aux = {}) {
    return responseLogLik(k, y, std::span<const double>(&eta, 1), aux);
}

// One noise binary covariate plus the given outcome.
Dataset responseData(ResponseKind kind, const std::vector<double>& y) {
    Dataset d;
    d.responseKind = kind;
    d.y = y;
    const auto n = Eigen::Index(y.size());
    d.x.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) d.x(i, 0) = double(i % 2);
    d.kinds = {CovariateKind::Discrete};
    d.nCategories = {2};
    d.w.resize(n, 0);
    return d;
}

void allInCluster1(Sampler& s) {
    auto& st = s.state();
    std::fill(st.alloc.z.begin(), st.alloc.z.end(), 1);
    st.refreshAllocationSummaries();
}

}  // namespace

TEST_CASE("response log-likelihood values") {
    CHECK(ll(ResponseKind::Bernoulli, 1, 0.0) == doctest::Approx(std::log(0.5)));
    ResponseAux pois;
    pois.offset = 2.0;
    CHECK(ll(ResponseKind::Poisson, 2, 0.0, pois) == doctest::Approx(std::log(4.0 * std::exp(-2.0) / 2.0)));
    CHECK(ll(ResponseKind::Normal, 1.7, 1.7) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)));
    ResponseAux bin;
    bin.trials = 5;
    CHECK(ll(ResponseKind::Binomial, 2, 0.0, bin) == doctest::Approx(std::log(10.0 / 32.0)));

    const std::vector<double> zero{0.0, 0.0};
    const Eigen::VectorXd p = categoricalProbabilities(zero);
    for (int r = 0; r < 3; ++r) CHECK(p[r] == doctest::Approx(1.0 / 3.0));
    CHECK(responseLogLik(ResponseKind::Categorical, 2, zero, {}) == doctest::Approx(std::log(1.0 / 3.0)));
}

TEST_CASE("response likelihoods normalise over the outcome space") {
    RngStream rng(21);
    for (int rep = 0; rep < 3; ++rep) {
        const double eta = -2 + 4 * rng.uniform();
        CHECK(std::exp(ll(ResponseKind::Bernoulli, 0, eta)) + std::exp(ll(ResponseKind::Bernoulli, 1, eta)) ==
              doctest::Approx(1.0).epsilon(1e-12));
        ResponseAux bin;
        bin.trials = 7;
        double s = 0;
        for (int y = 0; y <= 7; ++y) s += std::exp(ll(ResponseKind::Binomial, y, eta, bin));
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        ResponseAux pois;
        pois.offset = 0.5 + rng.uniform();
        s = 0;
        for (int y = 0; y < 200; ++y) s += std::exp(ll(ResponseKind::Poisson, y, eta, pois));
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        ResponseAux nrm;
        nrm.tauY = 0.5 + rng.uniform();
        CHECK(oracle::integrate([&](double y) { return ll(ResponseKind::Normal, y, eta, nrm); }, eta - 40, eta + 40,
                                200000) == doctest::Approx(1.0).epsilon(1e-8));
        const std::vector<double> e3{eta, -eta, 0.3 * eta};
        s = 0;
        for (int y = 0; y < 4; ++y) s += std::exp(responseLogLik(ResponseKind::Categorical, y, e3, {}));
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        const Eigen::VectorXd p = categoricalProbabilities(e3);
        CHECK(p.minCoeff() > 0);
        CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    }
}

TEST_CASE("log-likelihood derivatives agree with finite differences") {
    const double h = 1e-5;
    ResponseAux aux;
    aux.trials = 6;
    aux.offset = 1.5;
    aux.tauY = 2.0;
    for (auto kind : {ResponseKind::Bernoulli, ResponseKind::Binomial, ResponseKind::Poisson, ResponseKind::Normal}) {
        const double eta = 0.37, y = 1;
        const auto d = responseLogLikDerivatives(kind, y, std::span<const double>(&eta, 1), aux);
        const double up = ll(kind, y, eta + h, aux), dn = ll(kind, y, eta - h, aux), mid = ll(kind, y, eta, aux);
        CHECK(d.value == doctest::Approx(mid));
        CHECK(d.grad[0] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6));
        CHECK(d.hess(0, 0) == doctest::Approx((up - 2 * mid + dn) / (h * h)).epsilon(1e-4));
    }
    const std::vector<double> e{0.2, -0.5};
    const auto d = responseLogLikDerivatives(ResponseKind::Categorical, 2, e, aux);
    for (int r = 0; r < 2; ++r) {
        auto ep = e, em = e;
        ep[std::size_t(r)] += h;
        em[std::size_t(r)] -= h;
        const double g = (responseLogLik(ResponseKind::Categorical, 2, ep, aux) -
                          responseLogLik(ResponseKind::Categorical, 2, em, aux)) / (2 * h);
        CHECK(d.grad[r] == doctest::Approx(g).epsilon(1e-6));
    }
}

TEST_CASE("theta update for one Bernoulli cluster matches quadrature") {
    std::vector<double> y(50, 0.0);
    for (int i = 0; i < 40; ++i) y[std::size_t(i)] = 1.0;
    const Dataset d = responseData(ResponseKind::Bernoulli, y);
    HyperParams hp;
    hp.nClusInit = 1;
    Sampler s(d, hp, SamplerConfig{});
    s.initialize();
    allInCluster1(s);
    auto& st = s.state();
    const auto& ctx = s.context();
    RngStream rng(22);
    for (int t = 0; t < 2000; ++t) updateTheta(st, 1, ctx, rng);
    st.kernels.setAdaptation(false);
    std::vector<double> p;
    for (int t = 0; t < 200000; ++t) {
        updateTheta(st, 1, ctx, rng);
        p.push_back(expit(st.cluster(1).theta[0]));
    }
    const auto grid = oracle::gridMoments(
        [](double pr) {
            const double th = std::log(pr / (1 - pr));
            // t7(0, 2.5) prior on theta, Jacobian 1 / (p (1 - p)).
            return 40 * std::log(pr) + 10 * std::log1p(-pr) + logTLocScale(th, 0, 2.5, 7) - std::log(pr) -
                   std::log1p(-pr);
        },
        0, 1);
    const double mean = oracle::moments(p).mean;
    CHECK(std::abs(mean - grid.mean) < 3 * oracle::batchMeansSE(p));
    CHECK(std::abs(mean - 0.8) < 0.12);
}

TEST_CASE("theta prior draw for an empty label, beta no-op without fixed effects") {
    const Dataset d = responseData(ResponseKind::Bernoulli, {0, 1, 1, 0});
    HyperParams hp;
    const ModelContext ctx(d, hp);
    RngStream rng(23);
    std::vector<double> draws;
    for (int t = 0; t < 50000; ++t) draws.push_back(drawThetaPrior(ctx, rng)[0]);
    const auto m = oracle::moments(draws);
    CHECK(std::abs(m.mean) < 3 * m.se);
    CHECK(m.var == doctest::Approx(2.5 * 2.5 * 7.0 / 5.0).epsilon(0.05));

    Sampler s(d, hp, SamplerConfig{});
    s.initialize();
    const Eigen::MatrixXd before = s.state().globals.beta;
    updateBeta(s.state(), s.context(), rng);
    CHECK(s.state().globals.beta.size() == 0);
    CHECK(before.size() == 0);
}

TEST_CASE("tauY conditional") {
    // 100 residuals of +-sqrt(0.5) around theta: residual sum of squares 50.
    const double theta = 0.7;
    std::vector<double> y(100);
    for (int i = 0; i < 100; ++i) y[std::size_t(i)] = theta + ((i % 2) ? 1.0 : -1.0) * std::sqrt(0.5);
    const Dataset d = responseData(ResponseKind::Normal, y);
    HyperParams hp;
    hp.sTauY = 1;
    hp.rTauY = 1;
    hp.nClusInit = 1;
    Sampler s(d, hp, SamplerConfig{});
    s.initialize();
    allInCluster1(s);
    s.state().cluster(1).theta[0] = theta;
    RngStream rng(24);
    std::vector<double> tau;
    for (int t = 0; t < 50000; ++t) {
        updateTauY(s.state(), s.context(), rng);
        tau.push_back(s.state().globals.tauY);
    }
    const auto m = oracle::moments(tau);
    CHECK(std::abs(m.mean - 51.0 / 26.0) < 3 * m.se);

    // Residuals all zero: Gamma(s + n/2, r).
    for (auto& v : y) v = theta;
    const Dataset d0 = responseData(ResponseKind::Normal, y);
    Sampler s0(d0, hp, SamplerConfig{});
    s0.initialize();
    allInCluster1(s0);
    s0.state().cluster(1).theta[0] = theta;
    tau.clear();
    for (int t = 0; t < 50000; ++t) {
        updateTauY(s0.state(), s0.context(), rng);
        tau.push_back(s0.state().globals.tauY);
    }
    const auto m0 = oracle::moments(tau);
    CHECK(std::abs(m0.mean - 51.0) < 3 * m0.se);
}

TEST_CASE("extra variation with negligible noise pins lambda to the linear predictor") {
    std::vector<double> y;
    for (int i = 0; i < 30; ++i) y.push_back(double(i % 3 == 0));
    const Dataset d = responseData(ResponseKind::Bernoulli, y);
    HyperParams hp;
    hp.responseExtraVariation = true;
    hp.sTauEps = 1e22;  // tauEps ~ 1e16, noise sd 1e-8
    hp.rTauEps = 1e6;
    hp.nBurn = 500;
    hp.nSweeps = 500;
    SamplerConfig cfg;
    cfg.nBurn = 500;
    cfg.nSweeps = 500;
    cfg.computeMargModPost = false;
    Sampler s(d, hp, cfg);
    s.initialize();
    s.run(nullptr, false);
    const auto& st = s.state();
    double worst = 0;
    for (int i = 0; i < d.n(); ++i) {
        const double lin = st.cluster(st.alloc.z[std::size_t(i)]).theta[0] + st.wBeta(i, 0);
        worst = std::max(worst, std::abs(st.globals.lambda[i] - lin));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("overdispersed Poisson: noise scale is recovered") {
    RngStream gen(25);
    std::vector<double> y;
    for (int i = 0; i < 500; ++i) {
        const double mu = std::exp(1.0 + gen.normal());
        // Poisson draw by inversion.
        double u = gen.uniform(), p = std::exp(-mu), c = p;
        int k = 0;
        while (u > c && k < 10000) {
            ++k;
            p *= mu / k;
            c += p;
        }
        y.push_back(k);
    }
    Dataset d = responseData(ResponseKind::Poisson, y);
    d.offset.assign(500, 1.0);
    HyperParams hp;
    hp.responseExtraVariation = true;
    hp.nClusInit = 1;
    hp.alphaFixed = 0.01;  // keep the outcome from being explained by clustering alone
    SamplerConfig cfg;
    cfg.nBurn = 2000;
    cfg.nSweeps = 2000;
    cfg.computeMargModPost = false;
    cfg.checkInvariants = false;
    hp.nBurn = cfg.nBurn;
    hp.nSweeps = cfg.nSweeps;
    const auto records = runChain(d, hp, cfg);
    std::vector<double> sd;
    for (const auto& r : records) sd.push_back(1.0 / std::sqrt(r.tauEps));
    CHECK(std::abs(oracle::moments(sd).mean - 1.0) < 0.3);
}

TEST_CASE("cached fixed-effect terms match recomputation after sweeps") {
    RngStream gen(26);
    std::vector<double> y;
    Eigen::MatrixXd w(60, 2);
    for (int i = 0; i < 60; ++i) {
        w(i, 0) = gen.normal();
        w(i, 1) = gen.normal();
        y.push_back(gen.uniform() < expit(0.5 * w(i, 0) - w(i, 1)) ? 1.0 : 0.0);
    }
    Dataset d = responseData(ResponseKind::Bernoulli, y);
    d.w = w;
    HyperParams hp;
    SamplerConfig cfg;
    Sampler s(d, hp, cfg);
    s.initialize();
    for (int t = 0; t < 200; ++t) s.sweep();
    const Eigen::MatrixXd expect = d.w * s.state().globals.beta.transpose();
    CHECK((expect - s.state().wBeta).cwiseAbs().maxCoeff() < 1e-12);
}
