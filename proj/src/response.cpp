#include "profreg/response.hpp"

#include <cmath>

#include "profreg/errors.hpp"

namespace profreg {

namespace {

double logChoose(int n, int k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); }

double logCategoricalNormaliser(std::span<const double> eta) {
    double mx = 0.0;
    for (double e : eta) mx = std::max(mx, e);
    double s = std::exp(-mx);
    for (double e : eta) s += std::exp(e - mx);
    return mx + std::log(s);
}

double thetaLogPrior(double t, const HyperParams& hp) { return logTLocScale(t, hp.muTheta, hp.sigmaTheta, hp.tDof); }

}  // namespace

double responseLogLik(ResponseKind kind, double y, std::span<const double> eta, const ResponseAux& aux) {
    switch (kind) {
        case ResponseKind::Bernoulli:
            return y * eta[0] - log1pExp(eta[0]);
        case ResponseKind::Binomial:
            return logChoose(aux.trials, int(y)) + y * eta[0] - aux.trials * log1pExp(eta[0]);
        case ResponseKind::Poisson: {
            const double logMu = std::log(aux.offset) + eta[0];
            return y * logMu - std::exp(logMu) - std::lgamma(y + 1.0);
        }
        case ResponseKind::Categorical: {
            const int r = int(y);
            return (r == 0 ? 0.0 : eta[std::size_t(r - 1)]) - logCategoricalNormaliser(eta);
        }
        case ResponseKind::Normal: {
            const double d = y - eta[0];
            return -0.5 * kLog2Pi + 0.5 * std::log(aux.tauY) - 0.5 * aux.tauY * d * d;
        }
        case ResponseKind::None:
            return 0.0;
    }
    return 0.0;
}

Eigen::VectorXd categoricalProbabilities(std::span<const double> eta) {
    const double norm = logCategoricalNormaliser(eta);
    Eigen::VectorXd p(Eigen::Index(eta.size() + 1));
    p[0] = std::exp(-norm);
    for (std::size_t r = 0; r < eta.size(); ++r) p[Eigen::Index(r + 1)] = std::exp(eta[r] - norm);
    return p;
}

double responseMean(ResponseKind kind, double eta, double offset) {
    switch (kind) {
        case ResponseKind::Bernoulli:
        case ResponseKind::Binomial:
            return expit(eta);
        case ResponseKind::Poisson:
            return offset * std::exp(eta);
        default:
            return eta;
    }
}

ResponseDerivatives responseLogLikDerivatives(ResponseKind kind, double y, std::span<const double> eta,
                                              const ResponseAux& aux) {
    ResponseDerivatives d;
    d.value = responseLogLik(kind, y, eta, aux);
    const auto dim = Eigen::Index(eta.size());
    d.grad = Eigen::VectorXd::Zero(dim);
    d.hess = Eigen::MatrixXd::Zero(dim, dim);
    switch (kind) {
        case ResponseKind::Bernoulli:
        case ResponseKind::Binomial: {
            const double t = kind == ResponseKind::Binomial ? aux.trials : 1.0;
            const double p = expit(eta[0]);
            d.grad[0] = y - t * p;
            d.hess(0, 0) = -t * p * (1.0 - p);
            break;
        }
        case ResponseKind::Poisson: {
            const double mu = aux.offset * std::exp(eta[0]);
            d.grad[0] = y - mu;
            d.hess(0, 0) = -mu;
            break;
        }
        case ResponseKind::Normal:
            d.grad[0] = aux.tauY * (y - eta[0]);
            d.hess(0, 0) = -aux.tauY;
            break;
        case ResponseKind::Categorical: {
            const Eigen::VectorXd p = categoricalProbabilities(eta).tail(dim);
            for (Eigen::Index r = 0; r < dim; ++r) d.grad[r] = (int(y) == r + 1 ? 1.0 : 0.0) - p[r];
            d.hess = p * p.transpose();
            d.hess.diagonal() -= p;
            break;
        }
        case ResponseKind::None:
            break;
    }
    return d;
}

ResponseAux responseAux(const ModelContext& ctx, const GlobalParams& globals, int i) {
    ResponseAux aux;
    if (!ctx.data.trials.empty()) aux.trials = ctx.data.trials[std::size_t(i)];
    if (!ctx.data.offset.empty()) aux.offset = ctx.data.offset[std::size_t(i)];
    aux.tauY = globals.tauY;
    return aux;
}

double individualResponseLogLik(int i, const Eigen::VectorXd& theta, const ChainState& state,
                                const ModelContext& ctx) {
    if (!ctx.hasResponse()) return 0.0;
    if (ctx.extraVariation()) {
        const double mean = theta[0] + state.wBeta(i, 0);
        return logNormalDensity(state.globals.lambda[i], mean, 1.0 / std::sqrt(state.globals.tauEps));
    }
    double eta[64];
    const int dim = ctx.responseDim;
    std::vector<double> big;
    double* e = eta;
    if (dim > 64) {
        big.resize(std::size_t(dim));
        e = big.data();
    }
    for (int r = 0; r < dim; ++r) e[r] = theta[r] + state.wBeta(i, r);
    return responseLogLik(ctx.data.responseKind, ctx.data.y[std::size_t(i)], std::span<const double>(e, std::size_t(dim)),
                          responseAux(ctx, state.globals, i));
}

double clusterResponseLogLik(int label, const Eigen::VectorXd& theta, const ChainState& state,
                             const ModelContext& ctx) {
    double out = 0;
    for (int i : state.members[std::size_t(label - 1)]) out += individualResponseLogLik(i, theta, state, ctx);
    return out;
}

Eigen::VectorXd drawThetaPrior(const ModelContext& ctx, RngStream& rng) {
    Eigen::VectorXd theta(ctx.responseDim);
    for (int r = 0; r < ctx.responseDim; ++r) {
        theta[r] = sampleTLocScale(ctx.hp.muTheta, ctx.hp.sigmaTheta, ctx.hp.tDof, rng);
    }
    return theta;
}

void updateTheta(ChainState& state, int label, const ModelContext& ctx, RngStream& rng) {
    if (!ctx.hasResponse()) return;
    auto& theta = state.cluster(label).theta;
    for (int r = 0; r < ctx.responseDim; ++r) {
        auto& kernel = state.kernels.thetaKernel(label, r, ctx.responseDim);
        Eigen::VectorXd trial = theta;
        auto target = [&](double value) {
            trial[r] = value;
            return clusterResponseLogLik(label, trial, state, ctx) + thetaLogPrior(value, ctx.hp);
        };
        theta[r] = adaptiveRWMStep(target, theta[r], kernel, rng).value;
    }
}

void updateBeta(ChainState& state, const ModelContext& ctx, RngStream& rng) {
    if (!ctx.hasResponse() || ctx.nFixed() == 0) return;
    const int L = ctx.nFixed();
    const auto& w = ctx.data.w;
    auto& beta = state.globals.beta;
    if (state.kernels.beta.size() != std::size_t(ctx.responseDim * L)) {
        state.kernels.beta.assign(std::size_t(ctx.responseDim * L), AdaptiveKernelState{});
    }
    for (int r = 0; r < ctx.responseDim; ++r) {
        for (int l = 0; l < L; ++l) {
            const double current = beta(r, l);
            auto target = [&](double value) {
                const double delta = value - current;
                state.wBeta.col(r) += delta * w.col(l);
                double out = logTLocScale(value, ctx.hp.muBeta, ctx.hp.sigmaBeta, ctx.hp.tDof);
                for (int i = 0; i < ctx.n(); ++i) {
                    out += individualResponseLogLik(i, state.cluster(state.alloc.z[std::size_t(i)]).theta, state, ctx);
                }
                state.wBeta.col(r) -= delta * w.col(l);
                return out;
            };
            const RwmStep step = adaptiveRWMStep(target, current, state.kernels.beta[std::size_t(r * L + l)], rng);
            if (step.accepted) {
                beta(r, l) = step.value;
                state.wBeta.col(r) += (step.value - current) * w.col(l);
            }
        }
    }
}

void updateThetaBeta(ChainState& state, const ModelContext& ctx, RngStream& rng) {
    for (int c = 1; c <= state.alloc.zStar; ++c) updateTheta(state, c, ctx, rng);
    updateBeta(state, ctx, rng);
}

void updateTauY(ChainState& state, const ModelContext& ctx, RngStream& rng) {
    if (ctx.data.responseKind != ResponseKind::Normal) return;
    double ss = 0;
    for (int i = 0; i < ctx.n(); ++i) {
        const double lambda = state.cluster(state.alloc.z[std::size_t(i)]).theta[0] + state.wBeta(i, 0);
        const double d = ctx.data.y[std::size_t(i)] - lambda;
        ss += d * d;
    }
    state.globals.tauY = sampleGamma(ctx.hp.sTauY + 0.5 * ctx.n(), ctx.hp.rTauY + 0.5 * ss, rng);
}

void updateExtraVariation(ChainState& state, const ModelContext& ctx, RngStream& rng) {
    if (!ctx.extraVariation()) return;
    auto& lambda = state.globals.lambda;
    if (state.kernels.lambda.size() != std::size_t(ctx.n())) {
        state.kernels.lambda.assign(std::size_t(ctx.n()), AdaptiveKernelState{});
    }
    const double sd = 1.0 / std::sqrt(state.globals.tauEps);
    double ss = 0;
    for (int i = 0; i < ctx.n(); ++i) {
        const double mean = state.cluster(state.alloc.z[std::size_t(i)]).theta[0] + state.wBeta(i, 0);
        const double y = ctx.data.y[std::size_t(i)];
        const ResponseAux aux = responseAux(ctx, state.globals, i);
        auto target = [&](double value) {
            return responseLogLik(ctx.data.responseKind, y, std::span<const double>(&value, 1), aux) +
                   logNormalDensity(value, mean, sd);
        };
        lambda[i] = adaptiveRWMStep(target, lambda[i], state.kernels.lambda[std::size_t(i)], rng).value;
        ss += (lambda[i] - mean) * (lambda[i] - mean);
    }
    state.globals.tauEps = sampleGamma(ctx.hp.sTauEps + 0.5 * ctx.n(), ctx.hp.rTauEps + 0.5 * ss, rng);
}

}  // namespace profreg
