#include "profreg/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "profreg/covariates.hpp"
#include "profreg/errors.hpp"
#include "profreg/response.hpp"

namespace profreg {

SimilarityAccumulator::SimilarityAccumulator(int n) : n_(n), counts_(Eigen::MatrixXd::Zero(n, n)) {}

void SimilarityAccumulator::add(std::span<const int> z) {
    if (int(z.size()) != n_) throw Error("allocation vector has the wrong length for the similarity matrix");
    for (int j = 0; j < n_; ++j) {
        const int zj = z[std::size_t(j)];
        for (int i = 0; i < j; ++i) {
            if (z[std::size_t(i)] == zj) counts_(i, j) += 1.0;
        }
    }
    ++sweeps_;
}

Eigen::MatrixXd SimilarityAccumulator::matrix() const {
    if (sweeps_ == 0) throw Error("similarity matrix requested from an empty archive");
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n_, n_);
    for (int j = 0; j < n_; ++j) {
        for (int i = 0; i < j; ++i) {
            s(i, j) = s(j, i) = counts_(i, j) / sweeps_;
        }
    }
    return s;
}

Eigen::MatrixXd buildSimilarity(const std::vector<std::vector<int>>& archive) {
    if (archive.empty()) throw Error("similarity matrix requested from an empty archive");
    SimilarityAccumulator acc(int(archive.front().size()));
    for (const auto& z : archive) acc.add(z);
    return acc.matrix();
}

std::vector<int> relabelDense(std::span<const int> z) {
    std::map<int, int> map;
    std::vector<int> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        auto it = map.find(z[i]);
        if (it == map.end()) it = map.emplace(z[i], int(map.size()) + 1).first;
        out[i] = it->second;
    }
    return out;
}

double lsDistance(std::span<const int> z, const Eigen::MatrixXd& s) {
    double out = 0;
    const auto n = Eigen::Index(z.size());
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < j; ++i) {
            const double d = (z[std::size_t(i)] == z[std::size_t(j)] ? 1.0 : 0.0) - s(i, j);
            out += d * d;
        }
    }
    return out;
}

Partition lsOptimalPartition(const std::vector<std::vector<int>>& archive, const Eigen::MatrixXd& s) {
    if (archive.empty()) throw Error("least-squares partition requested from an empty archive");
    Partition best;
    best.method = "LeastSquares";
    best.score = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < archive.size(); ++t) {
        const double d = lsDistance(archive[t], s);
        if (d < best.score) {
            best.score = d;
            best.sweep = int(t);
        }
    }
    best.labels = relabelDense(archive[std::size_t(best.sweep)]);
    best.k = *std::max_element(best.labels.begin(), best.labels.end());
    return best;
}

double medoidCost(const Eigen::MatrixXd& d, std::span<const int> medoids) {
    double cost = 0;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int m : medoids) best = std::min(best, d(i, m));
        cost += best;
    }
    return cost;
}

namespace {

// Number of k-subsets of n items, saturating at limit + 1.
long long subsetCount(int n, int k, long long limit) {
    long long c = 1;
    for (int i = 1; i <= k; ++i) {
        c = c * (n - k + i) / i;
        if (c > limit) return limit + 1;
    }
    return c;
}

}  // namespace

PamResult pam(const Eigen::MatrixXd& d, int k, long long exactLimit) {
    const int n = int(d.rows());
    if (k < 1 || k > n) throw Error("PAM needs 1 <= k <= n");
    std::vector<int> medoids;
    std::vector<char> isMedoid(static_cast<std::size_t>(n), 0);
    std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    // BUILD: greedily add the medoid giving the lowest total cost.
    for (int step = 0; step < k; ++step) {
        int bestCand = -1;
        double bestCost = std::numeric_limits<double>::infinity();
        for (int cand = 0; cand < n; ++cand) {
            if (isMedoid[std::size_t(cand)]) continue;
            double cost = 0;
            for (int i = 0; i < n; ++i) cost += std::min(nearest[std::size_t(i)], d(i, cand));
            if (cost < bestCost) {
                bestCost = cost;
                bestCand = cand;
            }
        }
        medoids.push_back(bestCand);
        isMedoid[std::size_t(bestCand)] = 1;
        for (int i = 0; i < n; ++i) nearest[std::size_t(i)] = std::min(nearest[std::size_t(i)], d(i, bestCand));
    }
    // SWAP: apply the best improving (medoid, non-medoid) exchange until none remains.
    double cost = medoidCost(d, medoids);
    for (;;) {
        double bestCost = cost;
        int bestM = -1, bestO = -1;
        for (int m = 0; m < k; ++m) {
            for (int o = 0; o < n; ++o) {
                if (isMedoid[std::size_t(o)]) continue;
                std::vector<int> trial = medoids;
                trial[std::size_t(m)] = o;
                const double c = medoidCost(d, trial);
                if (c < bestCost - 1e-12) {
                    bestCost = c;
                    bestM = m;
                    bestO = o;
                }
            }
        }
        if (bestM < 0) break;
        isMedoid[std::size_t(medoids[std::size_t(bestM)])] = 0;
        isMedoid[std::size_t(bestO)] = 1;
        medoids[std::size_t(bestM)] = bestO;
        cost = bestCost;
    }
    // Small problems: enumerate every medoid set, keeping the local optimum on ties.
    if (exactLimit > 0 && subsetCount(n, k, exactLimit) <= exactLimit) {
        std::vector<int> pick(static_cast<std::size_t>(n), 0), trial;
        std::fill(pick.end() - k, pick.end(), 1);
        do {
            trial.clear();
            for (int i = 0; i < n; ++i) {
                if (pick[std::size_t(i)]) trial.push_back(i);
            }
            const double c = medoidCost(d, trial);
            if (c < cost - 1e-12) {
                cost = c;
                medoids = trial;
            }
        } while (std::next_permutation(pick.begin(), pick.end()));
    }
    PamResult result;
    result.medoids = medoids;
    result.cost = cost;
    result.labels.resize(std::size_t(n));
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int m = 1; m < k; ++m) {
            if (d(i, medoids[std::size_t(m)]) < d(i, medoids[std::size_t(best)])) best = m;
        }
        // A medoid always belongs to its own cluster.
        for (int m = 0; m < k; ++m) {
            if (medoids[std::size_t(m)] == i) best = m;
        }
        result.labels[std::size_t(i)] = best + 1;
    }
    return result;
}

std::vector<double> silhouette(const Eigen::MatrixXd& d, std::span<const int> labels) {
    const int n = int(labels.size());
    const int k = *std::max_element(labels.begin(), labels.end());
    std::vector<int> sizes(static_cast<std::size_t>(k + 1), 0);
    for (int l : labels) ++sizes[std::size_t(l)];
    std::vector<double> s(static_cast<std::size_t>(n), 0.0);
    std::vector<double> sum(static_cast<std::size_t>(k + 1));
    for (int i = 0; i < n; ++i) {
        const int own = labels[std::size_t(i)];
        if (sizes[std::size_t(own)] <= 1) continue;
        std::fill(sum.begin(), sum.end(), 0.0);
        for (int j = 0; j < n; ++j) {
            if (j != i) sum[std::size_t(labels[std::size_t(j)])] += d(i, j);
        }
        const double a = sum[std::size_t(own)] / (sizes[std::size_t(own)] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int l = 1; l <= k; ++l) {
            if (l != own && sizes[std::size_t(l)] > 0) b = std::min(b, sum[std::size_t(l)] / sizes[std::size_t(l)]);
        }
        if (!std::isfinite(b)) continue;
        const double denom = std::max(a, b);
        s[std::size_t(i)] = denom > 0 ? (b - a) / denom : 0.0;
    }
    return s;
}

int defaultKMax(int n) { return std::min(10, (n + 9) / 10 + 2); }

Partition pamOptimalPartition(const Eigen::MatrixXd& s, int kMax) {
    const int n = int(s.rows());
    if (n < 3) throw Error("PAM partition needs at least 3 individuals");
    if (kMax <= 0) kMax = defaultKMax(n);
    kMax = std::min(kMax, n - 1);
    if (kMax < 2) throw Error("PAM partition needs kMax >= 2");
    const Eigen::MatrixXd d = (1.0 - s.array()).matrix();
    Partition best;
    best.method = "PAM";
    best.score = -std::numeric_limits<double>::infinity();
    for (int k = 2; k <= kMax; ++k) {
        const PamResult r = pam(d, k);
        const auto sil = silhouette(d, r.labels);
        double avg = 0;
        for (double v : sil) avg += v;
        avg /= n;
        if (avg > best.score + 1e-12) {
            best.score = avg;
            best.k = k;
            best.labels = r.labels;
            best.medoids = r.medoids;
        }
    }
    return best;
}

double adjustedRandIndex(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw Error("partitions have different lengths");
    std::map<std::pair<int, int>, double> table;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[{a[i], b[i]}] += 1;
        rows[a[i]] += 1;
        cols[b[i]] += 1;
    }
    auto pairs = [](double x) { return x * (x - 1) / 2; };
    double index = 0, sumRows = 0, sumCols = 0;
    for (const auto& [key, v] : table) index += pairs(v);
    for (const auto& [key, v] : rows) sumRows += pairs(v);
    for (const auto& [key, v] : cols) sumCols += pairs(v);
    const double total = pairs(double(a.size()));
    const double expected = sumRows * sumCols / total;
    const double maxIndex = 0.5 * (sumRows + sumCols);
    if (maxIndex == expected) return 1.0;
    return (index - expected) / (maxIndex - expected);
}

SweepParams toSweepParams(const SweepRecord& record) {
    SweepParams p;
    p.z = record.z;
    p.psi = record.psi;
    p.clusters = record.clusters;
    p.beta = record.beta;
    p.zeta = record.zeta;
    p.rho = record.rho;
    p.tauY = record.tauY;
    return p;
}

double empiricalQuantile(std::vector<double> data, double level) {
    if (data.empty()) throw Error("quantile of an empty sample");
    std::sort(data.begin(), data.end());
    const double h = (double(data.size()) - 1.0) * level;
    const auto lo = std::size_t(std::floor(h));
    const auto hi = std::min(lo + 1, data.size() - 1);
    return data[lo] + (h - double(lo)) * (data[hi] - data[lo]);
}

QuantileSummary summarise(const std::vector<double>& draws, const std::vector<double>& levels) {
    QuantileSummary q;
    for (double v : draws) q.mean += v;
    q.mean /= double(draws.size());
    for (double l : levels) q.values.push_back(empiricalQuantile(draws, l));
    return q;
}

std::vector<double> baselineRisk(ResponseKind kind, const Eigen::VectorXd& theta) {
    switch (kind) {
        case ResponseKind::Bernoulli:
        case ResponseKind::Binomial:
            return {expit(theta[0])};
        case ResponseKind::Poisson:
            return {std::exp(theta[0])};
        case ResponseKind::Normal:
            return {theta[0]};
        case ResponseKind::Categorical: {
            const Eigen::VectorXd p = categoricalProbabilities(std::span<const double>(theta.data(), std::size_t(theta.size())));
            return {p.data(), p.data() + p.size()};
        }
        case ResponseKind::None:
            return {};
    }
    return {};
}

RiskProfile riskProfiles(const std::vector<SweepParams>& sweeps, const Partition& part, const ModelContext& ctx,
                         std::vector<double> levels) {
    if (sweeps.empty()) throw Error("risk profiles requested from an empty archive");
    std::sort(levels.begin(), levels.end());
    const int K = part.k;
    const int n = ctx.n();
    const ResponseKind kind = ctx.data.responseKind;
    const int riskDim = kind == ResponseKind::None ? 0
                        : kind == ResponseKind::Categorical ? ctx.data.nResponseCategories
                                                            : 1;
    std::vector<std::vector<int>> members(static_cast<std::size_t>(K));
    for (int i = 0; i < n; ++i) members[std::size_t(part.labels[std::size_t(i)] - 1)].push_back(i);

    // draws[k][component][sweep]
    std::vector<std::vector<std::vector<double>>> risk(static_cast<std::size_t>(K)), mu(static_cast<std::size_t>(K));
    std::vector<std::vector<std::vector<std::vector<double>>>> phi(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        risk[std::size_t(k)].assign(std::size_t(riskDim), {});
        mu[std::size_t(k)].assign(std::size_t(ctx.nCont()), {});
        phi[std::size_t(k)].resize(std::size_t(ctx.nDisc()));
        for (int jj = 0; jj < ctx.nDisc(); ++jj) {
            phi[std::size_t(k)][std::size_t(jj)].assign(
                std::size_t(ctx.data.nCategories[std::size_t(ctx.discCols[std::size_t(jj)])]), {});
        }
    }
    for (const auto& sw : sweeps) {
        std::vector<std::vector<double>> clusterRisk(sw.clusters.size());
        for (std::size_t c = 0; c < sw.clusters.size(); ++c) {
            if (riskDim > 0 && sw.clusters[c].theta.size() > 0) clusterRisk[c] = baselineRisk(kind, sw.clusters[c].theta);
        }
        for (int k = 0; k < K; ++k) {
            const auto& mem = members[std::size_t(k)];
            if (mem.empty()) continue;
            std::vector<double> r(static_cast<std::size_t>(riskDim), 0.0), m(static_cast<std::size_t>(ctx.nCont()), 0.0);
            std::vector<Eigen::VectorXd> ph(static_cast<std::size_t>(ctx.nDisc()));
            for (int jj = 0; jj < ctx.nDisc(); ++jj) {
                ph[std::size_t(jj)] = Eigen::VectorXd::Zero(Eigen::Index(phi[std::size_t(k)][std::size_t(jj)].size()));
            }
            for (int i : mem) {
                const auto c = std::size_t(sw.z[std::size_t(i)] - 1);
                const auto& cl = sw.clusters[c];
                for (int q = 0; q < riskDim; ++q) r[std::size_t(q)] += clusterRisk[c][std::size_t(q)];
                for (int q = 0; q < ctx.nCont(); ++q) m[std::size_t(q)] += cl.mu[q];
                for (int jj = 0; jj < ctx.nDisc(); ++jj) ph[std::size_t(jj)] += cl.phi[std::size_t(jj)];
            }
            const double size = double(mem.size());
            for (int q = 0; q < riskDim; ++q) risk[std::size_t(k)][std::size_t(q)].push_back(r[std::size_t(q)] / size);
            for (int q = 0; q < ctx.nCont(); ++q) mu[std::size_t(k)][std::size_t(q)].push_back(m[std::size_t(q)] / size);
            for (int jj = 0; jj < ctx.nDisc(); ++jj) {
                for (Eigen::Index cat = 0; cat < ph[std::size_t(jj)].size(); ++cat) {
                    phi[std::size_t(k)][std::size_t(jj)][std::size_t(cat)].push_back(ph[std::size_t(jj)][cat] / size);
                }
            }
        }
    }
    RiskProfile out;
    out.levels = levels;
    for (int k = 0; k < K; ++k) {
        ClusterProfile cp;
        cp.size = int(members[std::size_t(k)].size());
        if (cp.size > 0) {
            for (const auto& draws : risk[std::size_t(k)]) cp.risk.push_back(summarise(draws, levels));
            for (const auto& draws : mu[std::size_t(k)]) cp.mu.push_back(summarise(draws, levels));
            for (const auto& col : phi[std::size_t(k)]) {
                std::vector<QuantileSummary> qs;
                for (const auto& draws : col) qs.push_back(summarise(draws, levels));
                cp.phi.push_back(std::move(qs));
            }
            cp.riskDraws = risk[std::size_t(k)];
        }
        out.clusters.push_back(std::move(cp));
    }
    return out;
}

PredictMode parsePredictMode(const std::string& s) {
    if (s == "RandomAllocation") return PredictMode::RandomAllocation;
    if (s == "RaoBlackwell") return PredictMode::RaoBlackwell;
    throw ConfigError("unknown prediction mode '" + s + "' (expected RandomAllocation or RaoBlackwell)");
}

std::vector<double> scenarioLogWeights(const SweepParams& sweep, const PredictionScenario& scenario,
                                       const ModelContext& ctx) {
    GlobalParams globals;
    globals.zeta = sweep.zeta;
    globals.rho = sweep.rho;
    std::vector<double> w(sweep.clusters.size());
    for (std::size_t c = 0; c < sweep.clusters.size(); ++c) {
        const auto cache = buildCovariateCache(sweep.clusters[c], globals, ctx);
        w[c] = std::log(sweep.psi[c]) + covariateLogLikRow(scenario.x, scenario.missing, cache, ctx);
    }
    return w;
}

namespace {

Eigen::VectorXd scenarioMean(const ModelContext& ctx, const ClusterParams& cluster, const Eigen::MatrixXd& beta,
                             const PredictionScenario& scenario) {
    const int dim = ctx.responseDim;
    Eigen::VectorXd eta = cluster.theta;
    if (!scenario.w.empty() && beta.cols() > 0) {
        const Eigen::Map<const Eigen::VectorXd> w(scenario.w.data(), Eigen::Index(scenario.w.size()));
        eta += beta * w;
    }
    const ResponseKind kind = ctx.data.responseKind;
    if (kind == ResponseKind::Categorical) {
        return categoricalProbabilities(std::span<const double>(eta.data(), std::size_t(dim)));
    }
    Eigen::VectorXd out(1);
    out[0] = responseMean(kind, eta[0], scenario.offset);
    return out;
}

}  // namespace

PredictionResult predict(const std::vector<SweepParams>& sweeps, const std::vector<PredictionScenario>& scenarios,
                         const ModelContext& ctx, PredictMode mode, RngStream& rng) {
    if (!ctx.hasResponse()) throw Error("predictions need a response model");
    const int J = ctx.data.nCovariates();
    for (const auto& sc : scenarios) {
        if (int(sc.x.size()) != J || int(sc.missing.size()) != J) throw DataError("scenario has the wrong number of covariates");
        for (int j = 0; j < J; ++j) {
            if (sc.missing[std::size_t(j)] || ctx.data.kinds[std::size_t(j)] != CovariateKind::Discrete) continue;
            const double v = sc.x[std::size_t(j)];
            if (v != std::floor(v) || v < 0 || v >= ctx.data.nCategories[std::size_t(j)]) {
                throw DataError("scenario category out of range in column " + std::to_string(j + 1));
            }
        }
        if (!sc.w.empty() && int(sc.w.size()) != ctx.nFixed()) throw DataError("scenario has the wrong number of fixed effects");
    }
    PredictionResult result;
    result.outDim = ctx.data.responseKind == ResponseKind::Categorical ? ctx.data.nResponseCategories : 1;
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
        Eigen::MatrixXd values(Eigen::Index(sweeps.size()), result.outDim);
        for (std::size_t t = 0; t < sweeps.size(); ++t) {
            const auto& sw = sweeps[t];
            const auto logW = scenarioLogWeights(sw, scenarios[s], ctx);
            if (mode == PredictMode::RandomAllocation) {
                const int c = sampleFromLogWeights(logW, rng);
                values.row(Eigen::Index(t)) = scenarioMean(ctx, sw.clusters[std::size_t(c)], sw.beta, scenarios[s]).transpose();
            } else {
                const double norm = logSumExp(logW);
                Eigen::VectorXd acc = Eigen::VectorXd::Zero(result.outDim);
                for (std::size_t c = 0; c < sw.clusters.size(); ++c) {
                    acc += std::exp(logW[c] - norm) * scenarioMean(ctx, sw.clusters[c], sw.beta, scenarios[s]);
                }
                values.row(Eigen::Index(t)) = acc.transpose();
            }
        }
        result.mean.push_back(values.colwise().mean().transpose());
        result.perSweep.push_back(std::move(values));
    }
    return result;
}

}  // namespace profreg
