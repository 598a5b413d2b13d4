#include "profreg/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "profreg/errors.hpp"

namespace profreg {

namespace {

template <class Enum, std::size_t N>
Enum parseEnum(const std::string& s, const std::pair<const char*, Enum> (&table)[N], const char* what) {
    for (const auto& [name, value] : table) {
        if (s == name) {
            return value;
        }
    }
    throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}

constexpr std::pair<const char*, ResponseKind> kResponseNames[] = {
    {"None", ResponseKind::None},         {"Bernoulli", ResponseKind::Bernoulli},
    {"Binomial", ResponseKind::Binomial}, {"Poisson", ResponseKind::Poisson},
    {"Categorical", ResponseKind::Categorical}, {"Normal", ResponseKind::Normal},
};
constexpr std::pair<const char*, CovariateKind> kCovariateNames[] = {
    {"Discrete", CovariateKind::Discrete},
    {"Normal", CovariateKind::Continuous},
};
constexpr std::pair<const char*, SamplerVariant> kVariantNames[] = {
    {"Truncated", SamplerVariant::Truncated},
    {"SliceDependent", SamplerVariant::SliceDependent},
    {"SliceIndependent", SamplerVariant::SliceIndependent},
};
constexpr std::pair<const char*, VarSelectType> kVarSelectNames[] = {
    {"None", VarSelectType::None},
    {"Continuous", VarSelectType::Continuous},
    {"BinaryCluster", VarSelectType::BinaryCluster},
};

template <class Enum, std::size_t N>
std::string enumName(Enum v, const std::pair<const char*, Enum> (&table)[N]) {
    for (const auto& [name, value] : table) {
        if (value == v) {
            return name;
        }
    }
    return "?";
}

}  // namespace

std::string toString(ResponseKind k) { return enumName(k, kResponseNames); }
std::string toString(CovariateKind k) { return enumName(k, kCovariateNames); }
std::string toString(SamplerVariant v) { return enumName(v, kVariantNames); }
std::string toString(VarSelectType v) { return enumName(v, kVarSelectNames); }
ResponseKind parseResponseKind(const std::string& s) { return parseEnum(s, kResponseNames, "response model"); }
CovariateKind parseCovariateKind(const std::string& s) { return parseEnum(s, kCovariateNames, "covariate kind"); }
SamplerVariant parseSamplerVariant(const std::string& s) { return parseEnum(s, kVariantNames, "sampler"); }
VarSelectType parseVarSelectType(const std::string& s) {
    return parseEnum(s, kVarSelectNames, "variable selection type");
}

bool Dataset::anyMissing() const {
    return std::any_of(missing.begin(), missing.end(), [](std::uint8_t m) { return m != 0; });
}

std::vector<int> Dataset::discreteColumns() const {
    std::vector<int> cols;
    for (int j = 0; j < int(kinds.size()); ++j) {
        if (kinds[std::size_t(j)] == CovariateKind::Discrete) {
            cols.push_back(j);
        }
    }
    return cols;
}

std::vector<int> Dataset::continuousColumns() const {
    std::vector<int> cols;
    for (int j = 0; j < int(kinds.size()); ++j) {
        if (kinds[std::size_t(j)] == CovariateKind::Continuous) {
            cols.push_back(j);
        }
    }
    return cols;
}

void Dataset::validate() const {
    const int rows = n();
    const int cols = nCovariates();
    auto fail = [](const std::string& msg) { throw DataError(msg); };
    if (rows <= 0) {
        fail("dataset has no individuals");
    }
    if (int(kinds.size()) != cols || int(nCategories.size()) != cols) {
        fail("covariate kinds/categories do not match the number of covariate columns");
    }
    if (!missing.empty() && missing.size() != std::size_t(rows) * std::size_t(cols)) {
        fail("missingness mask has the wrong size");
    }
    if (w.rows() != rows && w.cols() > 0) {
        fail("fixed-effect matrix has the wrong number of rows");
    }
    for (int j = 0; j < cols; ++j) {
        if (kinds[std::size_t(j)] == CovariateKind::Discrete && nCategories[std::size_t(j)] < 2) {
            fail("discrete covariate column " + std::to_string(j + 1) + " needs at least 2 categories");
        }
        for (int i = 0; i < rows; ++i) {
            if (isMissing(i, j)) {
                continue;
            }
            const double v = x(i, j);
            if (!std::isfinite(v)) {
                fail("non-finite covariate at row " + std::to_string(i + 1) + ", column " + std::to_string(j + 1));
            }
            if (kinds[std::size_t(j)] == CovariateKind::Discrete) {
                if (v != std::floor(v) || v < 0 || v >= nCategories[std::size_t(j)]) {
                    fail("category " + std::to_string(v) + " out of range [0, " +
                         std::to_string(nCategories[std::size_t(j)]) + ") at row " + std::to_string(i + 1) +
                         ", column " + std::to_string(j + 1));
                }
            }
        }
    }
    if (!w.allFinite()) {
        fail("fixed effects must be finite and non-missing");
    }
    if (responseKind == ResponseKind::None) {
        return;
    }
    if (int(y.size()) != rows) {
        fail("outcome has the wrong length");
    }
    for (int i = 0; i < rows; ++i) {
        const double yi = y[std::size_t(i)];
        const std::string where = " at row " + std::to_string(i + 1);
        if (!std::isfinite(yi)) {
            fail("outcome missing or non-finite" + where);
        }
        switch (responseKind) {
            case ResponseKind::Bernoulli:
                if (yi != 0 && yi != 1) fail("Bernoulli outcome must be 0 or 1" + where);
                break;
            case ResponseKind::Binomial:
                if (int(trials.size()) != rows) fail("Binomial outcome needs trials for every row");
                if (trials[std::size_t(i)] <= 0) fail("trials must be positive" + where);
                if (yi != std::floor(yi) || yi < 0 || yi > trials[std::size_t(i)])
                    fail("Binomial outcome must lie in [0, trials]" + where);
                break;
            case ResponseKind::Poisson:
                if (int(offset.size()) != rows) fail("Poisson outcome needs an offset for every row");
                if (!(offset[std::size_t(i)] > 0)) fail("Poisson offset must be positive" + where);
                if (yi != std::floor(yi) || yi < 0) fail("Poisson outcome must be a non-negative integer" + where);
                break;
            case ResponseKind::Categorical:
                if (nResponseCategories < 2) fail("categorical outcome needs at least 2 categories");
                if (yi != std::floor(yi) || yi < 0 || yi >= nResponseCategories)
                    fail("categorical outcome out of range" + where);
                break;
            default:
                break;
        }
    }
}

void HyperParams::validate(int nContinuous) const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0) || !std::isfinite(v)) {
            throw ConfigError(std::string("hyperparameter ") + name + " must be positive");
        }
    };
    positive(aPhi, "aPhi");
    positive(sigmaTheta, "sigmaTheta");
    positive(sigmaBeta, "sigmaBeta");
    positive(tDof, "tDof");
    positive(shapeAlpha, "shapeAlpha");
    positive(rateAlpha, "rateAlpha");
    positive(sTauY, "sTauY");
    positive(rTauY, "rTauY");
    positive(sTauEps, "sTauEps");
    positive(rTauEps, "rTauEps");
    positive(aRho, "aRho");
    positive(bRho, "bRho");
    if (!(kappaSlice > 0 && kappaSlice < 1)) {
        throw ConfigError("kappaSlice must lie in (0, 1)");
    }
    if (variant == SamplerVariant::Truncated && truncationC < 2) {
        throw ConfigError("truncationC must be at least 2");
    }
    if (nSweeps < 0 || nBurn < 0) {
        throw ConfigError("nSweeps and nBurn must be non-negative");
    }
    if (nClusInit < 1) {
        throw ConfigError("nClusInit must be at least 1");
    }
    if (nContinuous > 0) {
        if (mu0.size() != nContinuous || Sigma0.rows() != nContinuous || R0.rows() != nContinuous) {
            throw ConfigError("Gaussian covariate hyperparameters have the wrong dimension");
        }
        if (!(kappa0 > nContinuous - 1)) {
            throw ConfigError("kappa0 must exceed J - 1");
        }
        for (const auto* m : {&Sigma0, &R0}) {
            Eigen::LLT<Eigen::MatrixXd> llt(*m);
            if (llt.info() != Eigen::Success) {
                throw ConfigError("Sigma0 and R0 must be symmetric positive definite");
            }
        }
    }
}

HyperParams resolveDataDefaults(HyperParams hp, const Dataset& data) {
    const auto cont = data.continuousColumns();
    const auto disc = data.discreteColumns();
    const int jc = int(cont.size());
    if (jc > 0) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(jc);
        Eigen::VectorXd range = Eigen::VectorXd::Ones(jc);
        for (int k = 0; k < jc; ++k) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            double sum = 0;
            int count = 0;
            for (int i = 0; i < data.n(); ++i) {
                if (data.isMissing(i, cont[std::size_t(k)])) continue;
                const double v = data.x(i, cont[std::size_t(k)]);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                sum += v;
                ++count;
            }
            if (count > 0) {
                mean[k] = sum / count;
                if (hi > lo) range[k] = hi - lo;
            }
        }
        if (hp.mu0.size() == 0) hp.mu0 = mean;
        if (hp.Sigma0.size() == 0) hp.Sigma0 = range.array().square().matrix().asDiagonal();
        if (hp.kappa0 <= 0) hp.kappa0 = jc + 2.0;
        if (hp.R0.size() == 0) {
            // Prior mean of Sigma_c is diag((range / 4)^2).
            const Eigen::VectorXd priorVar = (range / 4.0).array().square();
            hp.R0 = (priorVar.cwiseInverse() / (hp.kappa0 - jc - 1.0)).asDiagonal();
        }
    }
    if (hp.aDir.size() != disc.size()) {
        hp.aDir.clear();
        for (int j : disc) {
            hp.aDir.push_back(Eigen::VectorXd::Constant(data.nCategories[std::size_t(j)], hp.aPhi));
        }
    }
    return hp;
}

std::vector<double> stickWeights(std::span<const double> v, std::span<const double> log1mv) {
    if (!log1mv.empty() && log1mv.size() != v.size()) {
        throw ParameterDomainError("stick proportions and log(1 - V) differ in length");
    }
    std::vector<double> psi(v.size());
    double logRemaining = 0.0;
    for (std::size_t c = 0; c < v.size(); ++c) {
        if (!(v[c] >= 0.0 && v[c] <= 1.0)) {
            throw ParameterDomainError("stick proportion outside [0, 1] at index " + std::to_string(c + 1));
        }
        psi[c] = v[c] * std::exp(logRemaining);
        logRemaining += log1mv.empty() ? std::log1p(-v[c]) : log1mv[c];
    }
    return psi;
}

void StickState::assign(std::vector<double> values) {
    v = std::move(values);
    log1mv.resize(v.size());
    for (std::size_t c = 0; c < v.size(); ++c) log1mv[c] = std::log1p(-v[c]);
}

void StickState::resize(std::size_t n, double fill) {
    if (log1mv.size() != v.size()) assign(v);
    v.resize(n, fill);
    log1mv.resize(n, std::log1p(-fill));
}

void StickState::set(std::size_t c, double value, double logOneMinusValue) {
    if (log1mv.size() != v.size()) assign(v);
    v[c] = value;
    log1mv[c] = logOneMinusValue;
}

void StickState::set(std::size_t c, const BetaDraw& d) { set(c, std::max(d.value, 1e-300), d.log1mValue); }

void StickState::push(const BetaDraw& d) {
    if (log1mv.size() != v.size()) assign(v);
    v.push_back(std::max(d.value, 1e-300));
    log1mv.push_back(d.log1mValue);
}

void StickState::swap(std::size_t a, std::size_t b) {
    if (log1mv.size() != v.size()) assign(v);
    std::swap(v[a], v[b]);
    std::swap(log1mv[a], log1mv[b]);
}

ClusterCounts refreshCounts(std::span<const int> z) {
    int maxLabel = 0;
    for (int zi : z) maxLabel = std::max(maxLabel, zi);
    ClusterCounts counts{std::vector<int>(std::size_t(maxLabel), 0), std::vector<int>(std::size_t(maxLabel), 0)};
    for (int zi : z) {
        ++counts.n[std::size_t(zi - 1)];
    }
    int above = 0;
    for (int c = maxLabel - 1; c >= 0; --c) {
        counts.nPlus[std::size_t(c)] = above;
        above += counts.n[std::size_t(c)];
    }
    return counts;
}

ActiveBounds computeActiveBounds(const AllocationState& alloc, const StickState& sticks) {
    ActiveBounds b{0, 1.0, 0};
    for (int zi : alloc.z) b.zStar = std::max(b.zStar, zi);
    for (double ui : alloc.u) b.uStar = std::min(b.uStar, ui);
    const double logUStar = std::log(b.uStar);
    double logRemaining = 0.0;
    for (std::size_t c = 0; c < sticks.v.size(); ++c) {
        logRemaining += sticks.logOneMinus(c);
        if (logRemaining < logUStar) {
            b.cStar = int(c) + 1;
            return b;
        }
    }
    throw InsufficientSticksError("stick sequence of length " + std::to_string(sticks.v.size()) +
                                  " cannot certify C* for U* = " + std::to_string(b.uStar));
}

double sliceXi(int c, double kappa) { return (1.0 - kappa) * std::pow(kappa, c - 1); }

int independentSliceBound(double uStar, double kappa) {
    // xi_c > u  <=>  c - 1 < log(u / (1 - kappa)) / log(kappa)
    if (uStar >= 1.0 - kappa) return 0;
    int c = int(std::floor(std::log(uStar / (1.0 - kappa)) / std::log(kappa))) + 1;
    while (c > 0 && !(sliceXi(c, kappa) > uStar)) --c;
    while (sliceXi(c + 1, kappa) > uStar) ++c;
    return c;
}

SliceInvariantReport checkSliceInvariants(const AllocationState& alloc, std::span<const double> v,
                                          SamplerVariant variant, double kappa, int window,
                                          std::span<const double> log1mv) {
    SliceInvariantReport report;
    if (variant == SamplerVariant::Truncated) {
        return report;
    }
    int zStar = 0;
    double uStar = 1.0;
    for (int zi : alloc.z) zStar = std::max(zStar, zi);
    for (double ui : alloc.u) uStar = std::min(uStar, ui);
    if (alloc.cStar < zStar) ++report.cStarBelowZStar;
    const auto psi = stickWeights(v, log1mv);
    auto width = [&](int c) {
        return variant == SamplerVariant::SliceDependent ? psi[std::size_t(c - 1)] : sliceXi(c, kappa);
    };
    for (std::size_t i = 0; i < alloc.z.size(); ++i) {
        if (!(alloc.u[i] < width(alloc.z[i]))) ++report.uAboveWeight;
    }
    const int last = std::min<int>(alloc.cStar + window, int(v.size()));
    for (int c = alloc.cStar + 1; c <= last; ++c) {
        if (!(width(c) < uStar)) ++report.tailAboveSlice;
    }
    return report;
}

}  // namespace profreg
