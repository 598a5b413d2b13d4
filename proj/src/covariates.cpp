#include "profreg/covariates.hpp"

#include <cmath>
#include <string>

#include "profreg/errors.hpp"

namespace profreg {

namespace {

double logDirichletMultinomial(const Eigen::VectorXd& counts, const Eigen::VectorXd& a) {
    double out = std::lgamma(a.sum()) - std::lgamma(a.sum() + counts.sum());
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        out += std::lgamma(a[k] + counts[k]) - std::lgamma(a[k]);
    }
    return out;
}

double logLbeta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

Eigen::VectorXd selectionVector(const ClusterParams& cluster, const GlobalParams& globals, const ModelContext& ctx) {
    Eigen::VectorXd sel(ctx.nCont());
    for (int k = 0; k < ctx.nCont(); ++k) {
        sel[k] = selectorValue(cluster, globals, ctx, ctx.contCols[std::size_t(k)]);
    }
    return sel;
}

Eigen::VectorXd compositeMean(const Eigen::VectorXd& mu, const Eigen::VectorXd& sel, const Eigen::VectorXd& xbar) {
    return (sel.array() * mu.array() + (1.0 - sel.array()) * xbar.array()).matrix();
}

// Target for the soft-selection Metropolis update of one phi row.
double softPhiLogTarget(const Eigen::VectorXd& phi, const Eigen::VectorXd& counts, const Eigen::VectorXd& phi0,
                        const Eigen::VectorXd& a, double zeta) {
    double out = 0;
    for (Eigen::Index k = 0; k < phi.size(); ++k) {
        out += counts[k] * std::log(compositePhi(phi[k], phi0[k], zeta)) + a[k] * std::log(phi[k]);
    }
    return out;
}

Eigen::VectorXd softmaxWithReference(const Eigen::VectorXd& eta) {
    Eigen::VectorXd full(eta.size() + 1);
    full[0] = 0;
    full.tail(eta.size()) = eta;
    const double norm = logSumExp(std::span<const double>(full.data(), std::size_t(full.size())));
    return (full.array() - norm).exp().matrix();
}

}  // namespace

CovariateStats computeCovariateStats(const ModelContext& ctx, const Eigen::MatrixXd& xWork,
                                     std::span<const int> members) {
    CovariateStats stats;
    stats.nC = int(members.size());
    const int jc = ctx.nCont();
    stats.sumX = Eigen::VectorXd::Zero(jc);
    stats.sumOuter = Eigen::MatrixXd::Zero(jc, jc);
    stats.catCounts.resize(std::size_t(ctx.nDisc()));
    for (int jj = 0; jj < ctx.nDisc(); ++jj) {
        stats.catCounts[std::size_t(jj)] =
            Eigen::VectorXd::Zero(ctx.data.nCategories[std::size_t(ctx.discCols[std::size_t(jj)])]);
    }
    Eigen::VectorXd row(jc);
    for (int i : members) {
        if (jc > 0) {
            for (int k = 0; k < jc; ++k) row[k] = xWork(i, ctx.contCols[std::size_t(k)]);
            stats.sumX += row;
            stats.sumOuter.noalias() += row * row.transpose();
        }
        for (int jj = 0; jj < ctx.nDisc(); ++jj) {
            const int j = ctx.discCols[std::size_t(jj)];
            if (!ctx.data.isMissing(i, j)) {
                stats.catCounts[std::size_t(jj)][Eigen::Index(xWork(i, j))] += 1.0;
            }
        }
    }
    return stats;
}

double gaussianLogLik(const Eigen::VectorXd& x, std::span<const std::uint8_t> missingMask, const Eigen::VectorXd& mu,
                      const Eigen::MatrixXd& sigma) {
    std::vector<Eigen::Index> obs;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        if (missingMask.empty() || missingMask[std::size_t(k)] == 0) obs.push_back(k);
    }
    if (obs.empty()) return 0.0;
    const auto m = Eigen::Index(obs.size());
    Eigen::VectorXd d(m);
    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        d[a] = x[obs[std::size_t(a)]] - mu[obs[std::size_t(a)]];
        for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = sigma(obs[std::size_t(a)], obs[std::size_t(b)]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefiniteError("covariance matrix is not positive definite");
    }
    const Eigen::VectorXd sol = llt.matrixL().solve(d);
    const double logDet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * (double(m) * kLog2Pi + logDet + sol.squaredNorm());
}

double gaussianLogLik(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
    return gaussianLogLik(x, std::span<const std::uint8_t>{}, mu, sigma);
}

double discreteLogLik(std::span<const int> categories, std::span<const std::uint8_t> missingMask,
                      const std::vector<Eigen::VectorXd>& phi) {
    double out = 0;
    for (std::size_t j = 0; j < categories.size(); ++j) {
        if (!missingMask.empty() && missingMask[j] != 0) continue;
        out += std::log(phi[j][categories[j]]);
    }
    return out;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> muPosteriorVSMoments(const CovariateStats& stats,
                                                                 const Eigen::VectorXd& selection,
                                                                 const Eigen::MatrixXd& sigmaC,
                                                                 const ModelContext& ctx) {
    Eigen::LLT<Eigen::MatrixXd> lltC(sigmaC);
    if (lltC.info() != Eigen::Success) {
        throw NotPositiveDefiniteError("cluster covariance is not positive definite");
    }
    const Eigen::MatrixXd precC = lltC.solve(Eigen::MatrixXd::Identity(sigmaC.rows(), sigmaC.cols()));
    const Eigen::MatrixXd gpg = selection.asDiagonal() * precC * selection.asDiagonal();
    const Eigen::MatrixXd q = ctx.sigma0Inv + double(stats.nC) * gpg;
    // n G P (Xbar_c - (I - G) Xbar) = G P (sumX - n (1 - g) * xbar)
    const Eigen::VectorXd shifted =
        stats.sumX - double(stats.nC) * ((1.0 - selection.array()) * ctx.nullProfile.xbar.array()).matrix();
    const Eigen::VectorXd b = ctx.sigma0InvMu0 + selection.asDiagonal() * (precC * shifted);
    Eigen::LLT<Eigen::MatrixXd> lltQ(q);
    if (lltQ.info() != Eigen::Success) {
        throw NotPositiveDefiniteError("posterior precision for mu is not positive definite");
    }
    const Eigen::MatrixXd cov = lltQ.solve(Eigen::MatrixXd::Identity(q.rows(), q.cols()));
    return {lltQ.solve(b), 0.5 * (cov + cov.transpose())};
}

Eigen::VectorXd muPosteriorVS(const CovariateStats& stats, const Eigen::VectorXd& selection,
                              const Eigen::MatrixXd& sigmaC, const ModelContext& ctx, RngStream& rng) {
    const auto [mean, cov] = muPosteriorVSMoments(stats, selection, sigmaC, ctx);
    return sampleMVNormal(mean, cov, rng);
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> gaussianConjugateUpdate(const CovariateStats& stats,
                                                                    const Eigen::VectorXd& currentMu,
                                                                    const Eigen::VectorXd& selection,
                                                                    const ModelContext& ctx, RngStream& rng) {
    const Eigen::VectorXd mStar = compositeMean(currentMu, selection, ctx.nullProfile.xbar);
    const Eigen::MatrixXd scatter = stats.sumOuter - mStar * stats.sumX.transpose() -
                                    stats.sumX * mStar.transpose() +
                                    double(stats.nC) * mStar * mStar.transpose();
    Eigen::MatrixXd scaleInv = ctx.r0Inv + 0.5 * (scatter + scatter.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(scaleInv);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefiniteError("inverse-Wishart posterior scale is not positive definite");
    }
    const Eigen::MatrixXd scale = llt.solve(Eigen::MatrixXd::Identity(scaleInv.rows(), scaleInv.cols()));
    Eigen::MatrixXd sigma = sampleInvWishart(0.5 * (scale + scale.transpose()), ctx.hp.kappa0 + stats.nC, rng);
    Eigen::VectorXd mu = muPosteriorVS(stats, selection, sigma, ctx, rng);
    return {std::move(mu), std::move(sigma)};
}

std::vector<Eigen::VectorXd> discreteConjugateUpdate(const std::vector<Eigen::VectorXd>& catCounts,
                                                     const std::vector<Eigen::VectorXd>& aDir, RngStream& rng) {
    std::vector<Eigen::VectorXd> phi;
    phi.reserve(catCounts.size());
    for (std::size_t j = 0; j < catCounts.size(); ++j) {
        phi.push_back(sampleDirichlet(aDir[j] + catCounts[j], rng));
    }
    return phi;
}

void drawCovariatePrior(ClusterParams& cluster, const GlobalParams& globals, const ModelContext& ctx,
                        RngStream& rng) {
    if (ctx.nCont() > 0) {
        cluster.Sigma = sampleInvWishart(ctx.hp.R0, ctx.hp.kappa0, rng);
        cluster.mu = sampleMVNormal(ctx.hp.mu0, ctx.hp.Sigma0, rng);
    }
    cluster.phi.resize(std::size_t(ctx.nDisc()));
    for (int jj = 0; jj < ctx.nDisc(); ++jj) {
        cluster.phi[std::size_t(jj)] = sampleDirichlet(ctx.hp.aDir[std::size_t(jj)], rng);
    }
    if (ctx.hp.varSelectType == VarSelectType::BinaryCluster) {
        cluster.gamma.assign(std::size_t(ctx.data.nCovariates()), 0);
        for (int j = 0; j < ctx.data.nCovariates(); ++j) {
            cluster.gamma[std::size_t(j)] = rng.uniform() < globals.rho[j] ? 1 : 0;
        }
    }
}

double selectorValue(const ClusterParams& cluster, const GlobalParams& globals, const ModelContext& ctx,
                     int column) {
    switch (ctx.hp.varSelectType) {
        case VarSelectType::Continuous:
            return globals.zeta[column];
        case VarSelectType::BinaryCluster:
            return cluster.gamma[std::size_t(column)];
        default:
            return 1.0;
    }
}

CovariateCache buildCovariateCache(const ClusterParams& cluster, const GlobalParams& globals,
                                   const ModelContext& ctx) {
    CovariateCache cache;
    cache.logPhiStar.resize(std::size_t(ctx.nDisc()));
    for (int jj = 0; jj < ctx.nDisc(); ++jj) {
        const double sel = selectorValue(cluster, globals, ctx, ctx.discCols[std::size_t(jj)]);
        const auto& phi = cluster.phi[std::size_t(jj)];
        const auto& phi0 = ctx.nullProfile.phi0[std::size_t(jj)];
        Eigen::VectorXd lp(phi.size());
        for (Eigen::Index k = 0; k < phi.size(); ++k) lp[k] = std::log(compositePhi(phi[k], phi0[k], sel));
        cache.logPhiStar[std::size_t(jj)] = lp;
    }
    if (ctx.nCont() > 0) {
        cache.muStar = compositeMean(cluster.mu, selectionVector(cluster, globals, ctx), ctx.nullProfile.xbar);
        Eigen::LLT<Eigen::MatrixXd> llt(cluster.Sigma);
        if (llt.info() != Eigen::Success) {
            throw NotPositiveDefiniteError("cluster covariance is not positive definite");
        }
        cache.precision = llt.solve(Eigen::MatrixXd::Identity(ctx.nCont(), ctx.nCont()));
        cache.logDet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }
    return cache;
}

double covariateLogLik(int i, const CovariateCache& cache, const ModelContext& ctx) {
    const auto& data = ctx.data;
    double out = 0;
    for (int jj = 0; jj < ctx.nDisc(); ++jj) {
        const int j = ctx.discCols[std::size_t(jj)];
        if (!data.isMissing(i, j)) out += cache.logPhiStar[std::size_t(jj)][Eigen::Index(data.x(i, j))];
    }
    const int jc = ctx.nCont();
    if (jc == 0) return out;
    bool anyMissing = false;
    for (int k = 0; k < jc && !anyMissing; ++k) anyMissing = data.isMissing(i, ctx.contCols[std::size_t(k)]);
    if (!anyMissing) {
        Eigen::VectorXd d(jc);
        for (int k = 0; k < jc; ++k) d[k] = data.x(i, ctx.contCols[std::size_t(k)]) - cache.muStar[k];
        return out - 0.5 * (jc * kLog2Pi + cache.logDet + d.dot(cache.precision * d));
    }
    Eigen::VectorXd row(jc);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(jc), 0);
    for (int k = 0; k < jc; ++k) {
        const int j = ctx.contCols[std::size_t(k)];
        mask[std::size_t(k)] = data.isMissing(i, j) ? 1 : 0;
        row[k] = mask[std::size_t(k)] ? 0.0 : data.x(i, j);
    }
    const Eigen::MatrixXd sigma = cache.precision.inverse();
    return out + gaussianLogLik(row, mask, cache.muStar, sigma);
}

double covariateLogLikRow(std::span<const double> x, std::span<const std::uint8_t> missingMask,
                          const CovariateCache& cache, const ModelContext& ctx) {
    auto missing = [&](int j) { return !missingMask.empty() && missingMask[std::size_t(j)] != 0; };
    double out = 0;
    for (int jj = 0; jj < ctx.nDisc(); ++jj) {
        const int j = ctx.discCols[std::size_t(jj)];
        if (!missing(j)) out += cache.logPhiStar[std::size_t(jj)][Eigen::Index(x[std::size_t(j)])];
    }
    const int jc = ctx.nCont();
    if (jc == 0) return out;
    Eigen::VectorXd row(jc);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(jc), 0);
    for (int k = 0; k < jc; ++k) {
        const int j = ctx.contCols[std::size_t(k)];
        mask[std::size_t(k)] = missing(j) ? 1 : 0;
        row[k] = mask[std::size_t(k)] ? 0.0 : x[std::size_t(j)];
    }
    const Eigen::MatrixXd sigma = cache.precision.inverse();
    return out + gaussianLogLik(row, mask, cache.muStar, sigma);
}

double gaussianStatsLogLik(const CovariateStats& stats, const Eigen::VectorXd& muStar, const Eigen::MatrixXd& sigma) {
    if (stats.nC == 0) return 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefiniteError("cluster covariance is not positive definite");
    }
    const Eigen::MatrixXd prec = llt.solve(Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
    const double logDet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double quad = (prec * stats.sumOuter).trace() - 2.0 * muStar.dot(prec * stats.sumX) +
                        double(stats.nC) * muStar.dot(prec * muStar);
    return -0.5 * (double(stats.nC) * (double(sigma.rows()) * kLog2Pi + logDet) + quad);
}

void imputeMissingGaussian(ChainState& state, int label, const ModelContext& ctx, RngStream& rng) {
    const int jc = ctx.nCont();
    if (jc == 0) return;
    const auto& cluster = state.cluster(label);
    const Eigen::VectorXd muStar =
        compositeMean(cluster.mu, selectionVector(cluster, state.globals, ctx), ctx.nullProfile.xbar);
    for (int i : state.members[std::size_t(label - 1)]) {
        std::vector<int> obs, mis;
        for (int k = 0; k < jc; ++k) {
            (ctx.data.isMissing(i, ctx.contCols[std::size_t(k)]) ? mis : obs).push_back(k);
        }
        if (mis.empty()) continue;
        const auto nm = Eigen::Index(mis.size());
        const auto no = Eigen::Index(obs.size());
        Eigen::MatrixXd smm(nm, nm), smo(nm, no), soo(no, no);
        Eigen::VectorXd dO(no), meanM(nm);
        for (Eigen::Index a = 0; a < nm; ++a) {
            meanM[a] = muStar[mis[std::size_t(a)]];
            for (Eigen::Index b = 0; b < nm; ++b) smm(a, b) = cluster.Sigma(mis[std::size_t(a)], mis[std::size_t(b)]);
            for (Eigen::Index b = 0; b < no; ++b) smo(a, b) = cluster.Sigma(mis[std::size_t(a)], obs[std::size_t(b)]);
        }
        for (Eigen::Index a = 0; a < no; ++a) {
            dO[a] = state.xWork(i, ctx.contCols[std::size_t(obs[std::size_t(a)])]) - muStar[obs[std::size_t(a)]];
            for (Eigen::Index b = 0; b < no; ++b) soo(a, b) = cluster.Sigma(obs[std::size_t(a)], obs[std::size_t(b)]);
        }
        Eigen::VectorXd condMean = meanM;
        Eigen::MatrixXd condCov = smm;
        if (no > 0) {
            Eigen::LLT<Eigen::MatrixXd> llt(soo);
            condMean += smo * llt.solve(dO);
            condCov -= smo * llt.solve(smo.transpose());
        }
        const Eigen::VectorXd draw = sampleMVNormal(condMean, 0.5 * (condCov + condCov.transpose()), rng);
        for (Eigen::Index a = 0; a < nm; ++a) {
            state.xWork(i, ctx.contCols[std::size_t(mis[std::size_t(a)])]) = draw[a];
        }
    }
}

void updateClusterCovariates(ChainState& state, int label, const ModelContext& ctx, RngStream& rng) {
    const auto& members = state.members[std::size_t(label - 1)];
    if (ctx.nCont() > 0 && ctx.data.anyMissing()) {
        imputeMissingGaussian(state, label, ctx, rng);
    }
    const CovariateStats stats = computeCovariateStats(ctx, state.xWork, members);
    auto& cluster = state.cluster(label);
    if (ctx.nCont() > 0) {
        try {
            auto [mu, sigma] =
                gaussianConjugateUpdate(stats, cluster.mu, selectionVector(cluster, state.globals, ctx), ctx, rng);
            cluster.mu = std::move(mu);
            cluster.Sigma = std::move(sigma);
        } catch (const NotPositiveDefiniteError& e) {
            throw NotPositiveDefiniteError(std::string(e.what()) + " (cluster " + std::to_string(label) + ")");
        }
    }
    if (ctx.nDisc() == 0) return;
    switch (ctx.hp.varSelectType) {
        case VarSelectType::None:
            cluster.phi = discreteConjugateUpdate(stats.catCounts, ctx.hp.aDir, rng);
            break;
        case VarSelectType::BinaryCluster:
            // (gamma, phi) drawn as a block with phi integrated out of gamma's conditional.
            for (int jj = 0; jj < ctx.nDisc(); ++jj) {
                const int j = ctx.discCols[std::size_t(jj)];
                const auto& counts = stats.catCounts[std::size_t(jj)];
                const auto& a = ctx.hp.aDir[std::size_t(jj)];
                const double rho = state.globals.rho[j];
                std::uint8_t g = 0;
                if (rho >= 1.0) {
                    g = 1;
                } else if (rho > 0.0) {
                    const double log1 = std::log(rho) + logDirichletMultinomial(counts, a);
                    double log0 = std::log1p(-rho);
                    const auto& phi0 = ctx.nullProfile.phi0[std::size_t(jj)];
                    for (Eigen::Index k = 0; k < counts.size(); ++k) log0 += counts[k] * std::log(phi0[k]);
                    g = std::log(rng.uniform()) < log1 - std::max(log0, log1) -
                                                      std::log1p(std::exp(std::min(log0, log1) - std::max(log0, log1)))
                            ? 1
                            : 0;
                }
                cluster.gamma[std::size_t(j)] = g;
                cluster.phi[std::size_t(jj)] = sampleDirichlet(g ? Eigen::VectorXd(a + counts) : a, rng);
            }
            break;
        case VarSelectType::Continuous:
            for (int jj = 0; jj < ctx.nDisc(); ++jj) {
                const int j = ctx.discCols[std::size_t(jj)];
                const auto& counts = stats.catCounts[std::size_t(jj)];
                const auto& a = ctx.hp.aDir[std::size_t(jj)];
                const auto& phi0 = ctx.nullProfile.phi0[std::size_t(jj)];
                const double zeta = state.globals.zeta[j];
                auto& phi = cluster.phi[std::size_t(jj)];
                Eigen::VectorXd eta = (phi.tail(phi.size() - 1).array() / phi[0]).log().matrix();
                auto& kernel = state.kernels.phiSoft[std::size_t(jj)];
                double current = softPhiLogTarget(phi, counts, phi0, a, zeta);
                for (Eigen::Index k = 0; k < eta.size(); ++k) {
                    auto target = [&](double value) {
                        Eigen::VectorXd trial = eta;
                        trial[k] = value;
                        return softPhiLogTarget(softmaxWithReference(trial), counts, phi0, a, zeta);
                    };
                    const RwmStep step = adaptiveRWMStep(target, eta[k], current, kernel, rng);
                    eta[k] = step.value;
                    current = step.logTarget;
                }
                phi = softmaxWithReference(eta);
            }
            break;
    }
}

double gammaConditionalProbability(const ClusterParams& cluster, const CovariateStats& stats,
                                   const GlobalParams& globals, const ModelContext& ctx, int column) {
    const double rho = globals.rho[column];
    if (rho <= 0.0) return 0.0;
    if (rho >= 1.0) return 1.0;
    double ll[2] = {0.0, 0.0};
    if (ctx.data.kinds[std::size_t(column)] == CovariateKind::Discrete) {
        int jj = 0;
        while (ctx.discCols[std::size_t(jj)] != column) ++jj;
        const auto& counts = stats.catCounts[std::size_t(jj)];
        const auto& phi = cluster.phi[std::size_t(jj)];
        const auto& phi0 = ctx.nullProfile.phi0[std::size_t(jj)];
        for (int g = 0; g < 2; ++g) {
            for (Eigen::Index k = 0; k < counts.size(); ++k) {
                if (counts[k] > 0) ll[g] += counts[k] * std::log(compositePhi(phi[k], phi0[k], g));
            }
        }
    } else {
        int kk = 0;
        while (ctx.contCols[std::size_t(kk)] != column) ++kk;
        Eigen::VectorXd sel = selectionVector(cluster, globals, ctx);
        for (int g = 0; g < 2; ++g) {
            sel[kk] = g;
            ll[g] = gaussianStatsLogLik(stats, compositeMean(cluster.mu, sel, ctx.nullProfile.xbar), cluster.Sigma);
        }
    }
    const double l1 = std::log(rho) + ll[1];
    const double l0 = std::log1p(-rho) + ll[0];
    return 1.0 / (1.0 + std::exp(l0 - l1));
}

std::pair<std::uint8_t, double> drawRhoGivenGamma(int nSelected, int nClusters, const ModelContext& ctx,
                                                 RngStream& rng) {
    const double a = ctx.hp.aRho;
    const double b = ctx.hp.bRho;
    if (nSelected > 0) {
        return {1, sampleBeta(a + nSelected, b + (nClusters - nSelected), rng)};
    }
    // Atom at rho = 0 (prior mass 1/2) against the Beta slab (prior mass 1/2).
    const double logSlab = logLbeta(a, b + nClusters) - logLbeta(a, b);
    const double pSlab = 1.0 / (1.0 + std::exp(-logSlab));
    if (rng.uniform() < pSlab) {
        return {1, sampleBeta(a, b + nClusters, rng)};
    }
    return {0, 0.0};
}

void updateSelectors(ChainState& state, const ModelContext& ctx, RngStream& rng) {
    const auto type = ctx.hp.varSelectType;
    if (type == VarSelectType::None) return;
    const int zStar = state.alloc.zStar;
    const int J = ctx.data.nCovariates();
    std::vector<CovariateStats> stats;
    stats.reserve(std::size_t(zStar));
    for (int c = 1; c <= zStar; ++c) {
        stats.push_back(computeCovariateStats(ctx, state.xWork, state.members[std::size_t(c - 1)]));
    }
    auto& globals = state.globals;

    if (type == VarSelectType::BinaryCluster) {
        for (int c = 1; c <= zStar; ++c) {
            auto& cluster = state.cluster(c);
            for (int j = 0; j < J; ++j) {
                const double p1 = gammaConditionalProbability(cluster, stats[std::size_t(c - 1)], globals, ctx, j);
                cluster.gamma[std::size_t(j)] = rng.uniform() < p1 ? 1 : 0;
            }
        }
        // Every instantiated cluster carries a gamma draw, so condition on all of them.
        const int nInst = state.alloc.cStar;
        for (int j = 0; j < J; ++j) {
            int nSel = 0;
            for (int c = 1; c <= nInst; ++c) nSel += state.cluster(c).gamma[std::size_t(j)];
            const auto [omega, rho] = drawRhoGivenGamma(nSel, nInst, ctx, rng);
            globals.rhoOmega[std::size_t(j)] = omega;
            globals.rho[j] = rho;
        }
        return;
    }

    // Continuous (soft) selection: zeta_j is rho_j.
    for (int j = 0; j < J; ++j) {
        auto columnLogLik = [&](double value) {
            double out = 0;
            if (ctx.data.kinds[std::size_t(j)] == CovariateKind::Discrete) {
                int jj = 0;
                while (ctx.discCols[std::size_t(jj)] != j) ++jj;
                const auto& phi0 = ctx.nullProfile.phi0[std::size_t(jj)];
                for (int c = 1; c <= zStar; ++c) {
                    const auto& counts = stats[std::size_t(c - 1)].catCounts[std::size_t(jj)];
                    const auto& phi = state.cluster(c).phi[std::size_t(jj)];
                    for (Eigen::Index k = 0; k < counts.size(); ++k) {
                        if (counts[k] > 0) out += counts[k] * std::log(compositePhi(phi[k], phi0[k], value));
                    }
                }
            } else {
                const double saved = globals.zeta[j];
                globals.zeta[j] = value;
                for (int c = 1; c <= zStar; ++c) {
                    const auto& cluster = state.cluster(c);
                    out += gaussianStatsLogLik(
                        stats[std::size_t(c - 1)],
                        compositeMean(cluster.mu, selectionVector(cluster, globals, ctx), ctx.nullProfile.xbar),
                        cluster.Sigma);
                }
                globals.zeta[j] = saved;
            }
            return out;
        };
        auto& omega = globals.rhoOmega[std::size_t(j)];
        double rho = globals.rho[j];
        if (omega) {
            auto target = [&](double t) {
                const double r = expit(t);
                if (!(r > 0 && r < 1)) return kNegInf;
                return columnLogLik(r) + logBetaDensity(r, ctx.hp.aRho, ctx.hp.bRho) + std::log(r) + std::log1p(-r);
            };
            const double t0 = std::log(rho) - std::log1p(-rho);
            rho = expit(adaptiveRWMStep(target, t0, state.kernels.rho[std::size_t(j)], rng).value);
            // Switch to the atom; the reverse move proposes rho from its Beta prior.
            if (std::log(rng.uniform()) < columnLogLik(0.0) - columnLogLik(rho)) {
                omega = 0;
                rho = 0.0;
            }
        } else {
            const double proposal = sampleBeta(ctx.hp.aRho, ctx.hp.bRho, rng);
            if (std::log(rng.uniform()) < columnLogLik(proposal) - columnLogLik(0.0)) {
                omega = 1;
                rho = proposal;
            }
        }
        globals.rho[j] = rho;
        globals.zeta[j] = rho;
    }
}

}  // namespace profreg
