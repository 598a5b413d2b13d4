#include <doctest.h>

#include <cmath>

#include "profreg/errors.hpp"
#include "profreg/model.hpp"

using namespace profreg;

TEST_CASE("stick weights") {
    CHECK(stickWeights(std::vector<double>{1.0}) == std::vector<double>{1.0});
    const auto psi = stickWeights(std::vector<double>{0.5, 0.5, 0.5});
    CHECK(psi[0] == 0.5);
    CHECK(psi[1] == 0.25);
    CHECK(psi[2] == 0.125);

    RngStream rng(1);
    std::vector<double> v;
    double rest = 1.0;
    for (int c = 0; c < 20; ++c) {
        v.push_back(sampleBeta(1, 2, rng));
        rest *= 1.0 - v.back();
    }
    const auto w = stickWeights(v);
    double sum = 0;
    for (double p : w) {
        CHECK(p > 0);
        sum += p;
    }
    CHECK(std::abs(sum - (1.0 - rest)) < 1e-12);
    CHECK_THROWS_AS(stickWeights(std::vector<double>{0.5, 1.5}), ParameterDomainError);

    // A stick that rounds to 1 still passes mass on through log(1 - V).
    StickState st;
    st.v = {1.0, 0.5};
    st.log1mv = {-50.0, std::log(0.5)};
    st.refreshPsi();
    CHECK(st.psi[0] == 1.0);
    CHECK(st.psi[1] == doctest::Approx(0.5 * std::exp(-50.0)).epsilon(1e-12));
    RngStream small(2);
    for (int k = 0; k < 100; ++k) {
        const BetaDraw d = sampleBetaDraw(1.0, 0.01, small);
        CHECK(std::isfinite(d.log1mValue));
        if (d.value < 0.999) CHECK(d.log1mValue == doctest::Approx(std::log1p(-d.value)));
    }
}

TEST_CASE("counts") {
    const auto c = refreshCounts(std::vector<int>{1, 1, 2});
    CHECK(c.n == std::vector<int>{2, 1});
    CHECK(c.nPlus == std::vector<int>{1, 0});
    const auto ones = refreshCounts(std::vector<int>(7, 1));
    CHECK(ones.nPlus[0] == 0);
    CHECK(ones.n[0] == 7);
    const auto gap = refreshCounts(std::vector<int>{3, 1, 3});
    CHECK(gap.n == std::vector<int>{1, 0, 2});
    CHECK(gap.nPlus == std::vector<int>{2, 2, 0});
}

TEST_CASE("active bounds") {
    StickState s;
    s.v.assign(30, 0.5);
    s.refreshPsi();
    AllocationState a;
    a.z = {1, 1, 2};
    a.u = {0.3, 0.4, 0.2 + 0.1};
    const auto b = computeActiveBounds(a, s);
    CHECK(b.zStar == 2);
    CHECK(b.uStar == doctest::Approx(0.3));
    CHECK(b.cStar == 2);

    a.z = {1, 1, 1};
    a.u = {0.01, 0.2, 0.3};
    const auto b1 = computeActiveBounds(a, s);
    CHECK(b1.zStar == 1);
    CHECK(b1.cStar >= 1);

    StickState shortV;
    shortV.v = {0.1};
    shortV.refreshPsi();
    a.u = {1e-6, 0.2, 0.3};
    CHECK_THROWS_AS(computeActiveBounds(a, shortV), InsufficientSticksError);

    // C* >= Z* whenever U_i < psi_{Z_i}.
    RngStream rng(3);
    for (int rep = 0; rep < 500; ++rep) {
        StickState st;
        for (int c = 0; c < 200; ++c) st.push(sampleBetaDraw(1, 1.0 + 3 * rng.uniform(), rng));
        st.refreshPsi();
        AllocationState al;
        for (int i = 0; i < 10; ++i) {
            const int z = 1 + int(rng.uniform() * 5);
            al.z.push_back(z);
            al.u.push_back(rng.uniform() * st.psi[std::size_t(z - 1)]);
        }
        try {
            const auto bb = computeActiveBounds(al, st);
            CHECK(bb.cStar >= bb.zStar);
        } catch (const InsufficientSticksError&) {
        }
    }
}

TEST_CASE("independent slice sequence") {
    CHECK(sliceXi(1, 0.8) == doctest::Approx(0.2));
    CHECK(sliceXi(3, 0.8) == doctest::Approx(0.2 * 0.64));
    CHECK(independentSliceBound(0.15, 0.8) == 2);  // xi = 0.2, 0.16, 0.128
    CHECK(independentSliceBound(0.25, 0.8) == 0);
}

TEST_CASE("slice invariant report") {
    AllocationState a;
    a.z = {1, 2};
    std::vector<double> v(15, 0.5);
    const auto psi = stickWeights(v);
    a.u = {0.4, 0.2};
    a.zStar = 2;
    a.uStar = 0.2;
    a.cStar = 3;
    auto r = checkSliceInvariants(a, v, SamplerVariant::SliceDependent, 0.8);
    CHECK(r.cStarBelowZStar == 0);
    CHECK(r.uAboveWeight == 0);
    CHECK(r.tailAboveSlice == 0);
    a.u = {0.6, 0.2};
    r = checkSliceInvariants(a, v, SamplerVariant::SliceDependent, 0.8);
    CHECK(r.uAboveWeight == 1);
    a.u = {0.4, 0.1};
    r = checkSliceInvariants(a, v, SamplerVariant::SliceDependent, 0.8);
    CHECK(r.tailAboveSlice == 0);  // psi_4 = 1/16 < 0.1
    a.cStar = 2;
    r = checkSliceInvariants(a, v, SamplerVariant::SliceDependent, 0.8);
    CHECK(r.tailAboveSlice == 1);  // psi_3 = 1/8 is not below 0.1
    CHECK(psi[2] == 0.125);
}

TEST_CASE("dataset validation names the offending cell") {
    Dataset d;
    d.responseKind = ResponseKind::Bernoulli;
    d.x.resize(2, 1);
    d.x << 0, 2;
    d.kinds = {CovariateKind::Discrete};
    d.nCategories = {2};
    d.w.resize(2, 0);
    d.y = {0, 1};
    try {
        d.validate();
        FAIL("expected a DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
    }
    d.x(1, 0) = 1;
    CHECK_NOTHROW(d.validate());
    d.y[0] = 2;
    CHECK_THROWS_AS(d.validate(), DataError);
}

TEST_CASE("hyperparameter defaults and validation") {
    HyperParams hp;
    CHECK(hp.shapeAlpha == 1.0);
    CHECK(hp.rateAlpha == 0.5);
    CHECK(hp.sigmaTheta == 2.5);
    CHECK(hp.aRho == 0.5);
    CHECK(hp.kappaSlice == 0.8);
    hp.kappaSlice = 1.0;
    CHECK_THROWS_AS(hp.validate(0), ConfigError);
    hp.kappaSlice = 0.8;
    hp.sigmaBeta = -1;
    CHECK_THROWS_AS(hp.validate(0), ConfigError);
}
