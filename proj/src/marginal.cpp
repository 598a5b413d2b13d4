#include "profreg/marginal.hpp"

#include <cmath>
#include <numbers>

#include "profreg/response.hpp"

namespace profreg {

namespace {

double logMultiGamma(double a, int dim) {
    double out = 0.25 * dim * (dim - 1) * std::log(std::numbers::pi);
    for (int j = 1; j <= dim; ++j) out += std::lgamma(a + 0.5 * (1 - j));
    return out;
}

double logDetSpd(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

struct TPriorTerms {
    double value, grad, hess;
};

TPriorTerms tPriorTerms(double theta, const HyperParams& hp) {
    const double nu = hp.tDof;
    const double s = hp.sigmaTheta;
    const double z = (theta - hp.muTheta) / s;
    return {logTLocScale(theta, hp.muTheta, s, nu), -(nu + 1.0) * z / (s * (nu + z * z)),
            -(nu + 1.0) / (s * s) * (nu - z * z) / ((nu + z * z) * (nu + z * z))};
}

}  // namespace

double logEppf(std::span<const int> sizes, double alpha) {
    int n = 0;
    int k = 0;
    double out = 0;
    for (int s : sizes) {
        if (s <= 0) continue;
        n += s;
        ++k;
        out += std::lgamma(double(s));
    }
    return out + std::lgamma(alpha) - std::lgamma(alpha + n) + k * std::log(alpha);
}

double logMarginalDiscrete(const Eigen::VectorXd& counts, const Eigen::VectorXd& a) {
    double out = std::lgamma(a.sum()) - std::lgamma(a.sum() + counts.sum());
    for (Eigen::Index k = 0; k < a.size(); ++k) out += std::lgamma(a[k] + counts[k]) - std::lgamma(a[k]);
    return out;
}

double gaussianMarginalK0(const ModelContext& ctx) {
    const int jc = ctx.nCont();
    const double denom = ctx.hp.kappa0 - jc - 1.0;
    const double priorTrace = ctx.r0Inv.trace() / (denom > 0 ? denom : 1.0);
    return priorTrace / ctx.hp.Sigma0.trace();
}

double logMarginalGaussian(const CovariateStats& stats, const ModelContext& ctx) {
    const int jc = ctx.nCont();
    if (jc == 0 || stats.nC == 0) return 0.0;
    const double n = stats.nC;
    const double k0 = gaussianMarginalK0(ctx);
    const double kn = k0 + n;
    const double nu = ctx.hp.kappa0;
    const double nun = nu + n;
    const Eigen::VectorXd xbar = stats.sumX / n;
    const Eigen::MatrixXd scatter = stats.sumOuter - n * xbar * xbar.transpose();
    const Eigen::VectorXd d = xbar - ctx.hp.mu0;
    Eigen::MatrixXd psiN = ctx.r0Inv + scatter + (k0 * n / kn) * d * d.transpose();
    psiN = 0.5 * (psiN + psiN.transpose());
    return -0.5 * n * jc * std::log(std::numbers::pi) + logMultiGamma(0.5 * nun, jc) - logMultiGamma(0.5 * nu, jc) +
           0.5 * nu * logDetSpd(ctx.r0Inv) - 0.5 * nun * logDetSpd(psiN) + 0.5 * jc * (std::log(k0) - std::log(kn));
}

double logMarginalResponse(std::span<const int> members, const ChainState& state, const ModelContext& ctx) {
    if (!ctx.hasResponse() || members.empty()) return 0.0;
    const int dim = ctx.responseDim;
    const auto& hp = ctx.hp;
    std::vector<double> eta(static_cast<std::size_t>(dim));

    struct Eval {
        double value;
        Eigen::VectorXd grad;
        Eigen::MatrixXd hess;
    };
    auto evaluate = [&](const Eigen::VectorXd& theta) {
        Eval e{0.0, Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim)};
        for (int r = 0; r < dim; ++r) {
            const TPriorTerms t = tPriorTerms(theta[r], hp);
            e.value += t.value;
            e.grad[r] += t.grad;
            e.hess(r, r) += t.hess;
        }
        for (int i : members) {
            ResponseDerivatives d;
            if (ctx.extraVariation()) {
                const double mean = theta[0] + state.wBeta(i, 0);
                ResponseAux aux;
                aux.tauY = state.globals.tauEps;
                d = responseLogLikDerivatives(ResponseKind::Normal, state.globals.lambda[i],
                                              std::span<const double>(&mean, 1), aux);
            } else {
                for (int r = 0; r < dim; ++r) eta[std::size_t(r)] = theta[r] + state.wBeta(i, r);
                d = responseLogLikDerivatives(ctx.data.responseKind, ctx.data.y[std::size_t(i)], eta,
                                              responseAux(ctx, state.globals, i));
            }
            e.value += d.value;
            e.grad += d.grad;
            e.hess += d.hess;
        }
        return e;
    };
    // The t prior makes the Hessian indefinite in its tails; fall back to the
    // concave part there so Newton steps stay ascent directions.
    auto curvature = [&](const Eval& e, const Eigen::VectorXd& theta) {
        Eigen::MatrixXd neg = -e.hess;
        if (neg.llt().info() == Eigen::Success) return neg;
        for (int r = 0; r < dim; ++r) {
            const double h = tPriorTerms(theta[r], hp).hess;
            if (h > 0) neg(r, r) += h;
        }
        neg.diagonal().array() += 1e-8;
        return neg;
    };

    Eigen::VectorXd theta = Eigen::VectorXd::Constant(dim, hp.muTheta);
    Eval cur = evaluate(theta);
    for (int iter = 0; iter < 100; ++iter) {
        const Eigen::MatrixXd neg = curvature(cur, theta);
        const Eigen::VectorXd step = neg.llt().solve(cur.grad);
        double scale = 1.0;
        bool moved = false;
        for (int half = 0; half < 40; ++half, scale *= 0.5) {
            const Eigen::VectorXd trial = theta + scale * step;
            Eval next = evaluate(trial);
            if (next.value >= cur.value) {
                theta = trial;
                cur = std::move(next);
                moved = true;
                break;
            }
        }
        if (!moved || (scale * step).cwiseAbs().maxCoeff() < 1e-10) break;
    }
    const Eigen::MatrixXd neg = curvature(cur, theta);
    return cur.value + 0.5 * dim * kLog2Pi - 0.5 * logDetSpd(neg);
}

double computeLogMargModPost(const ChainState& state, const ModelContext& ctx) {
    const auto& a = state.alloc;
    double out = logEppf(a.countsN, state.sticks.alpha);
    for (int c = 1; c <= a.zStar; ++c) {
        const auto& members = state.members[std::size_t(c - 1)];
        if (members.empty()) continue;
        const CovariateStats stats = computeCovariateStats(ctx, state.xWork, members);
        for (int jj = 0; jj < ctx.nDisc(); ++jj) {
            out += logMarginalDiscrete(stats.catCounts[std::size_t(jj)], ctx.hp.aDir[std::size_t(jj)]);
        }
        out += logMarginalGaussian(stats, ctx);
        out += logMarginalResponse(members, state, ctx);
    }
    return out;
}

}  // namespace profreg
