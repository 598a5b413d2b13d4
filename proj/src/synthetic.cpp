#include "profreg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "profreg/errors.hpp"

namespace profreg {

namespace {

struct UrbgAdapter {
    using result_type = std::uint64_t;
    RngStream& rng;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }
    result_type operator()() { return rng.nextU64(); }
};

int drawCategory(const std::vector<double>& p, RngStream& rng) {
    double u = rng.uniform();
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        if (u < p[k]) return int(k);
        u -= p[k];
    }
    return int(p.size()) - 1;
}

bool isProbabilityVector(const std::vector<double>& p) {
    if (p.size() < 2) return false;
    double s = 0;
    for (double v : p) {
        if (!(v >= 0.0)) return false;
        s += v;
    }
    return std::abs(s - 1.0) < 1e-9;
}

std::vector<double> binary(double p1) { return {1.0 - p1, p1}; }

}  // namespace

void SyntheticSpec::validate() const {
    const int k = nClusters();
    if (nSubjects < 1) throw ConfigError("nSubjects must be positive");
    if (k < 1) throw ConfigError("at least one cluster is required");
    double total = 0;
    for (double p : proportions) {
        if (!(p >= 0.0)) throw ConfigError("cluster proportions must be non-negative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("cluster proportions must sum to 1");
    if (!profiles.empty() && int(profiles.size()) != k) throw ConfigError("need one covariate profile per cluster");
    for (const auto& prof : profiles) {
        if (prof.size() != profiles[0].size()) throw ConfigError("every cluster profile needs the same covariates");
        for (std::size_t j = 0; j < prof.size(); ++j) {
            if (!isProbabilityVector(prof[j]) || prof[j].size() != profiles[0][j].size()) {
                throw ConfigError("covariate " + std::to_string(j + 1) + " has an invalid category profile");
            }
        }
    }
    if (!contMeans.empty() && int(contMeans.size()) != k) throw ConfigError("need continuous means for every cluster");
    for (const auto& m : contMeans) {
        if (m.size() != contMeans[0].size()) throw ConfigError("every cluster needs the same continuous covariates");
    }
    if (!(contSd > 0)) throw ConfigError("contSd must be positive");
    for (const auto& p : noiseProfiles) {
        if (!isProbabilityVector(p)) throw ConfigError("noise covariate has an invalid category profile");
    }
    if (nNoiseContinuous < 0) throw ConfigError("noiseContinuous must be non-negative");
    if (responseKind != ResponseKind::None) {
        if (int(theta.size()) != k) throw ConfigError("need response parameters for every cluster");
        const std::size_t dim = theta[0].size();
        if (dim == 0) throw ConfigError("response parameters are empty");
        for (const auto& t : theta) {
            if (t.size() != dim) throw ConfigError("response parameters differ in length across clusters");
        }
        if (responseKind != ResponseKind::Categorical && dim != 1) {
            throw ConfigError("only a categorical response takes more than one parameter per cluster");
        }
    }
    if (!(sigmaY > 0)) throw ConfigError("sigmaY must be positive");
    if (trials < 1) throw ConfigError("trials must be positive");
    if (!(offset > 0)) throw ConfigError("offset must be positive");
    const std::size_t nCov = (profiles.empty() ? 0 : profiles[0].size()) + (contMeans.empty() ? 0 : contMeans[0].size()) +
                             noiseProfiles.size() + std::size_t(nNoiseContinuous);
    if (nCov == 0) throw ConfigError("the spec defines no covariates");
}

std::vector<int> balancedSizes(const std::vector<double>& proportions, int n) {
    std::vector<int> sizes(proportions.size());
    std::vector<double> remainder(proportions.size());
    int assigned = 0;
    for (std::size_t c = 0; c < proportions.size(); ++c) {
        const double exact = proportions[c] * n;
        sizes[c] = int(std::floor(exact + 1e-9));
        remainder[c] = exact - sizes[c];
        assigned += sizes[c];
    }
    std::vector<std::size_t> order(proportions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < n; k = (k + 1) % order.size(), ++assigned) ++sizes[order[k]];
    return sizes;
}

SyntheticData generateSampleData(const SyntheticSpec& spec, RngStream& rng) {
    spec.validate();
    const int n = spec.nSubjects;
    const int nInfDisc = spec.profiles.empty() ? 0 : int(spec.profiles[0].size());
    const int nInfCont = spec.contMeans.empty() ? 0 : int(spec.contMeans[0].size());
    const int nNoiseDisc = int(spec.noiseProfiles.size());
    const int J = nInfDisc + nInfCont + nNoiseDisc + spec.nNoiseContinuous;
    const int L = int(spec.beta.size());

    SyntheticData out;
    out.truth.reserve(std::size_t(n));
    const auto sizes = balancedSizes(spec.proportions, n);
    for (std::size_t c = 0; c < sizes.size(); ++c) out.truth.insert(out.truth.end(), std::size_t(sizes[c]), int(c) + 1);
    UrbgAdapter urbg{rng};
    std::shuffle(out.truth.begin(), out.truth.end(), urbg);

    Dataset& d = out.data;
    d.responseKind = spec.responseKind;
    d.x.resize(n, J);
    d.w.resize(n, L);
    for (int j = 0; j < J; ++j) {
        const bool cont = (j >= nInfDisc && j < nInfDisc + nInfCont) || j >= nInfDisc + nInfCont + nNoiseDisc;
        d.kinds.push_back(cont ? CovariateKind::Continuous : CovariateKind::Discrete);
        int k = 0;
        if (j < nInfDisc) k = int(spec.profiles[0][std::size_t(j)].size());
        else if (!cont) k = int(spec.noiseProfiles[std::size_t(j - nInfDisc - nInfCont)].size());
        d.nCategories.push_back(k);
        d.covariateNames.push_back("x" + std::to_string(j + 1));
    }
    for (int l = 0; l < L; ++l) d.fixedEffectNames.push_back("w" + std::to_string(l + 1));
    d.outcomeName = "outcome";

    for (int i = 0; i < n; ++i) {
        const std::size_t c = std::size_t(out.truth[std::size_t(i)] - 1);
        int j = 0;
        for (int q = 0; q < nInfDisc; ++q, ++j) d.x(i, j) = drawCategory(spec.profiles[c][std::size_t(q)], rng);
        for (int q = 0; q < nInfCont; ++q, ++j) d.x(i, j) = spec.contMeans[c][std::size_t(q)] + spec.contSd * rng.normal();
        for (int q = 0; q < nNoiseDisc; ++q, ++j) d.x(i, j) = drawCategory(spec.noiseProfiles[std::size_t(q)], rng);
        for (int q = 0; q < spec.nNoiseContinuous; ++q, ++j) d.x(i, j) = rng.normal();
        for (int l = 0; l < L; ++l) d.w(i, l) = rng.normal();

        if (spec.responseKind == ResponseKind::None) continue;
        const auto& th = spec.theta[c];
        double eta = th[0];
        for (int l = 0; l < L; ++l) eta += spec.beta[std::size_t(l)] * d.w(i, l);
        double y = 0;
        switch (spec.responseKind) {
            case ResponseKind::Bernoulli:
                y = rng.uniform() < expit(eta) ? 1.0 : 0.0;
                break;
            case ResponseKind::Binomial: {
                const double p = expit(eta);
                for (int t = 0; t < spec.trials; ++t) y += rng.uniform() < p ? 1.0 : 0.0;
                d.trials.push_back(spec.trials);
                break;
            }
            case ResponseKind::Poisson: {
                std::poisson_distribution<long> pois(spec.offset * std::exp(eta));
                y = double(pois(urbg));
                d.offset.push_back(spec.offset);
                break;
            }
            case ResponseKind::Normal:
                y = eta + spec.sigmaY * rng.normal();
                break;
            case ResponseKind::Categorical: {
                std::vector<double> logits{0.0};
                for (std::size_t r = 0; r < th.size(); ++r) logits.push_back(th[r] + (r == 0 ? eta - th[0] : 0.0));
                const double lse = logSumExp(logits);
                std::vector<double> p;
                for (double v : logits) p.push_back(std::exp(v - lse));
                y = drawCategory(p, rng);
                break;
            }
            case ResponseKind::None:
                break;
        }
        d.y.push_back(y);
    }
    if (spec.responseKind == ResponseKind::Categorical) d.nResponseCategories = int(spec.theta[0].size()) + 1;
    d.validate();
    return out;
}

std::vector<std::string> presetNames() { return {"bernoulliDiscrete", "varSelectBernoulliDiscrete"}; }

SyntheticSpec presetSpec(const std::string& name, int nSubjects) {
    // Implementation-chosen profiles: P(x = 1) for the 8 informative binary covariates.
    static const double kProfiles[5][8] = {
        {0.9, 0.9, 0.9, 0.9, 0.1, 0.1, 0.1, 0.1},
        {0.1, 0.1, 0.1, 0.1, 0.9, 0.9, 0.9, 0.9},
        {0.9, 0.9, 0.1, 0.1, 0.9, 0.9, 0.1, 0.1},
        {0.1, 0.1, 0.9, 0.9, 0.1, 0.1, 0.9, 0.9},
        {0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.1},
    };
    static const double kRisk[5] = {0.1, 0.2, 0.5, 0.8, 0.9};
    if (name != "bernoulliDiscrete" && name != "varSelectBernoulliDiscrete") {
        throw ConfigError("unknown preset '" + name + "'");
    }
    SyntheticSpec s;
    s.nSubjects = nSubjects;
    s.responseKind = ResponseKind::Bernoulli;
    s.proportions.assign(5, 0.2);
    for (int c = 0; c < 5; ++c) {
        std::vector<std::vector<double>> prof;
        for (int j = 0; j < 8; ++j) prof.push_back(binary(kProfiles[c][j]));
        s.profiles.push_back(prof);
        s.theta.push_back({std::log(kRisk[c] / (1.0 - kRisk[c]))});
    }
    s.noiseProfiles.assign(2, binary(0.5));
    if (name == "bernoulliDiscrete") s.beta = {0.1, -0.2};
    return s;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::vector<double> numbers(const std::string& v, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        char* end = nullptr;
        const double x = std::strtod(item.c_str(), &end);
        if (end != item.c_str() + item.size()) throw ConfigError("cannot parse '" + item + "' for " + key);
        out.push_back(x);
    }
    return out;
}

int clusterIndex(const std::string& key, std::size_t prefixLen, int k) {
    const std::string rest = key.substr(prefixLen);
    const int c = std::atoi(rest.c_str());
    if (c < 1 || c > k) throw ConfigError("cluster index out of range in '" + key + "'");
    return c - 1;
}

}  // namespace

SyntheticSpec loadSyntheticSpec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open spec file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> entries;
    std::map<std::string, std::string> scalar;
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineNo) + ": expected key=value");
        entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        scalar[entries.back().first] = entries.back().second;
    }
    auto get = [&](const std::string& key, const std::string& fallback) {
        const auto it = scalar.find(key);
        return it == scalar.end() ? fallback : it->second;
    };

    SyntheticSpec s;
    s.nSubjects = int(numbers(get("n", "1000"), "n").at(0));
    s.responseKind = parseResponseKind(get("response", "Bernoulli"));
    const int k = int(numbers(get("clusters", "1"), "clusters").at(0));
    if (k < 1) throw ConfigError("clusters must be positive");
    s.proportions = scalar.count("proportions") ? numbers(scalar["proportions"], "proportions")
                                                : std::vector<double>(std::size_t(k), 1.0 / k);
    if (int(s.proportions.size()) != k) throw ConfigError("proportions must list one value per cluster");
    const int categories = int(numbers(get("categories", "2"), "categories").at(0));
    s.contSd = numbers(get("contSd", "1"), "contSd").at(0);
    s.nNoiseContinuous = int(numbers(get("noiseContinuous", "0"), "noiseContinuous").at(0));
    const int nNoise = int(numbers(get("noise", "0"), "noise").at(0));
    const double noiseProb = numbers(get("noiseProb", "0.5"), "noiseProb").at(0);
    for (int j = 0; j < nNoise; ++j) {
        if (categories == 2) s.noiseProfiles.push_back(binary(noiseProb));
        else s.noiseProfiles.emplace_back(std::size_t(categories), 1.0 / categories);
    }
    s.beta = numbers(get("beta", ""), "beta");
    s.sigmaY = numbers(get("sigmaY", "1"), "sigmaY").at(0);
    s.trials = int(numbers(get("trials", "10"), "trials").at(0));
    s.offset = numbers(get("offset", "1"), "offset").at(0);

    s.profiles.resize(std::size_t(k));
    s.contMeans.resize(std::size_t(k));
    s.theta.resize(std::size_t(k));
    bool anyProfile = false, anyCont = false;
    for (const auto& [key, value] : entries) {
        if (key.rfind("profile.", 0) == 0) {
            const int c = clusterIndex(key, 8, k);
            for (double p : numbers(value, key)) {
                if (categories != 2) throw ConfigError(key + ": use categoryProbs.<c>.<j> for more than two categories");
                s.profiles[std::size_t(c)].push_back(binary(p));
            }
            anyProfile = true;
        } else if (key.rfind("categoryProbs.", 0) == 0) {
            const std::string rest = key.substr(14);
            const auto dot = rest.find('.');
            if (dot == std::string::npos) throw ConfigError(key + ": expected categoryProbs.<cluster>.<column>");
            const int c = clusterIndex(rest.substr(0, dot), 0, k);
            const int j = std::atoi(rest.substr(dot + 1).c_str());
            auto& prof = s.profiles[std::size_t(c)];
            if (j < 1) throw ConfigError(key + ": column index must be positive");
            if (int(prof.size()) < j) prof.resize(std::size_t(j));
            prof[std::size_t(j - 1)] = numbers(value, key);
            anyProfile = true;
        } else if (key.rfind("contMean.", 0) == 0) {
            s.contMeans[std::size_t(clusterIndex(key, 9, k))] = numbers(value, key);
            anyCont = true;
        } else if (key.rfind("theta.", 0) == 0) {
            s.theta[std::size_t(clusterIndex(key, 6, k))] = numbers(value, key);
        } else if (key.rfind("risk.", 0) == 0) {
            const double r = numbers(value, key).at(0);
            double t = r;
            if (s.responseKind == ResponseKind::Bernoulli || s.responseKind == ResponseKind::Binomial) {
                t = std::log(r / (1.0 - r));
            } else if (s.responseKind == ResponseKind::Poisson) {
                t = std::log(r);
            }
            s.theta[std::size_t(clusterIndex(key, 5, k))] = {t};
        } else if (!(key == "n" || key == "response" || key == "clusters" || key == "proportions" ||
                     key == "categories" || key == "contSd" || key == "noiseContinuous" || key == "noise" ||
                     key == "noiseProb" || key == "beta" || key == "sigmaY" || key == "trials" || key == "offset")) {
            throw ConfigError("unknown spec key '" + key + "' in '" + path + "'");
        }
    }
    if (!anyProfile) s.profiles.clear();
    if (!anyCont) s.contMeans.clear();
    if (s.responseKind == ResponseKind::None) s.theta.clear();
    s.validate();
    return s;
}

}  // namespace profreg
