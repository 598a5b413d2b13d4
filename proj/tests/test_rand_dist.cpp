#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "profreg/errors.hpp"
#include "profreg/rand_dist.hpp"

using namespace profreg;

namespace {

template <class F>
std::vector<double> draws(int n, F&& f) {
    std::vector<double> out;
    out.reserve(std::size_t(n));
    for (int k = 0; k < n; ++k) out.push_back(f());
    return out;
}

}  // namespace

TEST_CASE("same seed gives the same sequence, split streams differ") {
    RngStream a(42), b(42);
    for (int k = 0; k < 100; ++k) CHECK(a.nextU64() == b.nextU64());
    RngStream s1 = RngStream(42).split(1), s2 = RngStream(42).split(2);
    CHECK(s1.nextU64() != s2.nextU64());
    RngStream u(7);
    for (int k = 0; k < 10000; ++k) {
        const double x = u.uniform();
        REQUIRE(x > 0.0);
        REQUIRE(x < 1.0);
    }
}

TEST_CASE("beta draws") {
    RngStream rng(1);
    const auto m11 = oracle::moments(draws(100000, [&] { return sampleBeta(1, 1, rng); }));
    CHECK(std::abs(m11.mean - 0.5) < 0.005);
    const auto m43 = oracle::moments(draws(100000, [&] { return sampleBeta(4, 3, rng); }));
    CHECK(std::abs(m43.mean - 4.0 / 7.0) < 3 * m43.se);
    for (int k = 0; k < 1000; ++k) {
        const double v = sampleBeta(1, 1e-12, rng);
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }
    CHECK_THROWS_AS(sampleBeta(0, 1, rng), ParameterDomainError);
    CHECK_THROWS_AS(sampleBeta(1, std::nan(""), rng), ParameterDomainError);
}

TEST_CASE("dirichlet draws") {
    RngStream rng(2);
    std::vector<double> first, a26;
    for (int k = 0; k < 100000; ++k) {
        const Eigen::VectorXd d = sampleDirichlet(Eigen::Vector3d(1, 1, 1), rng);
        REQUIRE(std::abs(d.sum() - 1.0) < 1e-12);
        first.push_back(d[0]);
        a26.push_back(sampleDirichlet(Eigen::Vector2d(2, 6), rng)[0]);
    }
    const auto m = oracle::moments(first);
    CHECK(std::abs(m.mean - 1.0 / 3.0) < 3 * m.se);
    const auto m2 = oracle::moments(a26);
    CHECK(std::abs(m2.mean - 0.25) < 3 * m2.se);
    for (int k = 0; k < 200; ++k) {
        Eigen::VectorXd a(5);
        for (int j = 0; j < 5; ++j) a[j] = 0.01 + 5 * rng.uniform();
        CHECK(std::abs(sampleDirichlet(a, rng).sum() - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(sampleDirichlet(Eigen::VectorXd::Ones(1), rng), ParameterDomainError);
    CHECK_THROWS_AS(sampleDirichlet(Eigen::Vector2d(1, 0), rng), ParameterDomainError);
}

TEST_CASE("multivariate normal draws") {
    RngStream rng(3);
    const int n = 100000;
    Eigen::Matrix2d corr;
    corr << 1, 0.9, 0.9, 1;
    Eigen::Matrix2d s0 = Eigen::Matrix2d::Zero(), s1 = Eigen::Matrix2d::Zero();
    std::vector<double> uni;
    for (int k = 0; k < n; ++k) {
        const Eigen::VectorXd a = sampleMVNormal(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), rng);
        s0 += a * a.transpose();
        const Eigen::VectorXd b = sampleMVNormal(Eigen::Vector2d::Zero(), corr, rng);
        s1 += b * b.transpose();
        uni.push_back(sampleMVNormal(Eigen::VectorXd::Constant(1, 3.0), Eigen::MatrixXd::Constant(1, 1, 4.0), rng)[0]);
    }
    s0 /= n;
    s1 /= n;
    CHECK((s0 - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 0.02);
    CHECK(std::abs(s1(0, 1) / std::sqrt(s1(0, 0) * s1(1, 1)) - 0.9) < 0.01);
    const auto m = oracle::moments(uni);
    // sd of the sample sd is about sd / sqrt(2n)
    CHECK(std::abs(std::sqrt(m.var) - 2.0) < 3 * 2.0 / std::sqrt(2.0 * n));
    Eigen::Matrix2d bad;
    bad << 1, 2, 2, 1;
    CHECK_THROWS_AS(sampleMVNormal(Eigen::Vector2d::Zero(), bad, rng), NotPositiveDefiniteError);
}

TEST_CASE("inverse Wishart draws") {
    RngStream rng(4);
    // J = 1: W = 1/G with G ~ Gamma(kappa0/2, rate 1/(2 R0)); E[W] = 1 / (R0 (kappa0 - 2)).
    std::vector<double> w;
    for (int k = 0; k < 100000; ++k) w.push_back(sampleInvWishart(Eigen::MatrixXd::Constant(1, 1, 2.0), 5.0, rng)(0, 0));
    const auto m = oracle::moments(w);
    CHECK(std::abs(m.mean - 1.0 / 6.0) < 3 * m.se);

    Eigen::Matrix3d r0;
    r0 << 2, 0.5, 0, 0.5, 1, 0.2, 0, 0.2, 1.5;
    for (int k = 0; k < 200; ++k) {
        const Eigen::MatrixXd s = sampleInvWishart(r0, 6.0, rng);
        REQUIRE((s - s.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        REQUIRE(s.llt().info() == Eigen::Success);
    }
    // Fixed analytic mean R0^{-1}/(kappa0 - J - 1): spread shrinks as kappa0 grows.
    double prev = std::numeric_limits<double>::infinity();
    for (double kappa : {10.0, 50.0, 250.0}) {
        const Eigen::MatrixXd scale = Eigen::MatrixXd::Constant(1, 1, 1.0 / (kappa - 2.0));
        std::vector<double> v;
        for (int k = 0; k < 20000; ++k) v.push_back(sampleInvWishart(scale, kappa, rng)(0, 0));
        const double var = oracle::moments(v).var;
        CHECK(var < prev);
        prev = var;
    }
    CHECK_THROWS_AS(sampleInvWishart(r0, 1.5, rng), ParameterDomainError);
}

TEST_CASE("t location-scale log-density") {
    CHECK(logTLocScale(1.0, 1.0, 2.0, 7) > logTLocScale(1.3, 1.0, 2.0, 7));
    CHECK(logTLocScale(1.0, 1.0, 2.0, 7) > logTLocScale(0.9, 1.0, 2.0, 7));
    for (double x : {0.0, 1.0, 2.0}) {
        CHECK(std::abs(logTLocScale(x, 0, 1, 1e6) - (-0.5 * std::log(2 * std::numbers::pi) - 0.5 * x * x)) < 1e-3);
    }
    const double total = oracle::integrate([](double x) { return logTLocScale(x, 0, 2.5, 7); }, -50, 50, 100000);
    CHECK(std::abs(total - 1.0) < 1e-4);
}

TEST_CASE("gamma draws") {
    RngStream rng(5);
    const auto a = oracle::moments(draws(100000, [&] { return sampleGamma(1, 0.5, rng); }));
    CHECK(std::abs(a.mean - 2.0) < 3 * a.se);
    const auto b = oracle::moments(draws(100000, [&] { return sampleGamma(2, 2, rng); }));
    CHECK(std::abs(b.mean - 1.0) < 3 * b.se);
    const auto c = oracle::moments(draws(100000, [&] { return sampleGamma(0.3, 1, rng); }));
    CHECK(std::abs(c.mean - 0.3) < 3 * c.se);
    for (int k = 0; k < 10000; ++k) REQUIRE(sampleGamma(0.05, 1, rng) > 0.0);
}

TEST_CASE("log densities return -inf outside the support") {
    CHECK(logBetaDensity(1.5, 2, 2) == kNegInf);
    CHECK(logBetaDensity(-0.1, 2, 2) == kNegInf);
    CHECK(logGammaDensity(-1.0, 2, 2) == kNegInf);
    CHECK(std::abs(logNormalDensity(0, 0, 1) + 0.5 * std::log(2 * std::numbers::pi)) < 1e-14);
}

TEST_CASE("sampling from log weights") {
    RngStream rng(6);
    std::vector<double> w{kNegInf, std::log(0.25), kNegInf, std::log(0.75)};
    std::vector<double> counts(4, 0.0);
    for (int k = 0; k < 40000; ++k) counts[std::size_t(sampleFromLogWeights(w, rng))] += 1;
    CHECK(counts[0] == 0);
    CHECK(counts[2] == 0);
    CHECK(oracle::chiSquarePValue({counts[1], counts[3]}, {10000, 30000}) > 0.001);
    std::vector<double> none{kNegInf, kNegInf};
    CHECK(sampleFromLogWeights(none, rng) == -1);
}

TEST_CASE("adaptive random-walk Metropolis") {
    auto target = [](double x) { return -0.5 * x * x; };
    RngStream rng(8);
    AdaptiveKernelState k;
    k.logStepSize = 3.0;
    double x = 0;
    for (int t = 0; t < 10000; ++t) x = adaptiveRWMStep(target, x, k, rng).value;
    CHECK(std::abs(k.acceptanceRate() - k.targetRate) < 0.05);

    k.adaptationOn = false;
    k.acceptCount = k.proposeCount = 0;
    const double frozen = k.logStepSize;
    std::vector<double> xs;
    for (int t = 0; t < 100000; ++t) {
        x = adaptiveRWMStep(target, x, k, rng).value;
        xs.push_back(x);
    }
    CHECK(k.logStepSize == frozen);
    const auto m = oracle::moments(xs);
    CHECK(std::abs(m.mean) < 3 * oracle::batchMeansSE(xs));
    CHECK(std::abs(std::sqrt(m.var) - 1.0) < 0.02);

    // 20-bin chi-square on thinned draws against N(0, 1).
    std::vector<double> obs(20, 0.0), expct(20, 0.0);
    auto phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
    int kept = 0;
    for (std::size_t t = 0; t < xs.size(); t += 10, ++kept) {
        const int bin = std::clamp(int(std::floor((xs[t] + 4.0) / 0.4)), 0, 19);
        obs[std::size_t(bin)] += 1;
    }
    for (int b = 0; b < 20; ++b) {
        const double lo = b == 0 ? -INFINITY : -4.0 + 0.4 * b;
        const double hi = b == 19 ? INFINITY : -4.0 + 0.4 * (b + 1);
        expct[std::size_t(b)] = kept * (phi(hi) - phi(lo));
    }
    // Merge sparse tail bins.
    std::vector<double> o2, e2;
    double oa = 0, ea = 0;
    for (int b = 0; b < 20; ++b) {
        oa += obs[std::size_t(b)];
        ea += expct[std::size_t(b)];
        if (ea >= 5 || b == 19) {
            o2.push_back(oa);
            e2.push_back(ea);
            oa = ea = 0;
        }
    }
    CHECK(oracle::chiSquarePValue(o2, e2) > 0.001);

    AdaptiveKernelState k2;
    const RwmStep r = adaptiveRWMStep([](double) { return std::nan(""); }, 1.25, 0.0, k2, rng);
    CHECK(!r.accepted);
    CHECK(r.value == 1.25);
}
