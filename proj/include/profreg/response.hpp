#pragma once

#include <span>

#include <Eigen/Dense>

#include "profreg/chain.hpp"

namespace profreg {

/// Observation-level auxiliary quantities (trials, offset, Gaussian precision).
struct ResponseAux {
    int trials = 1;
    double offset = 1.0;
    double tauY = 1.0;
};

/// Exact log-likelihood of one outcome given its linear predictor(s).
/// `eta` has one entry, or R-1 entries (categories 1..R-1) for a categorical
/// outcome with category 0 as reference.
double responseLogLik(ResponseKind kind, double y, std::span<const double> eta, const ResponseAux& aux);

/// Category probabilities p_0..p_{R-1} from the R-1 non-reference predictors.
Eigen::VectorXd categoricalProbabilities(std::span<const double> eta);

/// Mean of the outcome distribution (per-trial probability for Binomial,
/// E * exp(eta) for Poisson with the given offset).
double responseMean(ResponseKind kind, double eta, double offset = 1.0);

/// Log-likelihood with gradient and Hessian in the predictor (used by the
/// Laplace approximation of the marginal model posterior).
struct ResponseDerivatives {
    double value = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};
ResponseDerivatives responseLogLikDerivatives(ResponseKind kind, double y, std::span<const double> eta,
                                              const ResponseAux& aux);

ResponseAux responseAux(const ModelContext& ctx, const GlobalParams& globals, int i);

/// Log f(D_i | theta, Lambda) for individual i at cluster parameter theta.
/// Under extra variation the cluster enters only through the latent
/// lambda_i ~ N(theta + beta^T W_i, 1/tauEps).
double individualResponseLogLik(int i, const Eigen::VectorXd& theta, const ChainState& state,
                                const ModelContext& ctx);

/// Sum of individualResponseLogLik over the members of a label.
double clusterResponseLogLik(int label, const Eigen::VectorXd& theta, const ChainState& state,
                             const ModelContext& ctx);

/// theta_c drawn from its independent t location-scale prior.
Eigen::VectorXd drawThetaPrior(const ModelContext& ctx, RngStream& rng);

/// Metropolis-within-Gibbs update of every component of theta_label.
void updateTheta(ChainState& state, int label, const ModelContext& ctx, RngStream& rng);

/// Metropolis-within-Gibbs update of every beta_{r,l}; keeps state.wBeta in sync.
void updateBeta(ChainState& state, const ModelContext& ctx, RngStream& rng);

/// theta for every active label, then beta.
void updateThetaBeta(ChainState& state, const ModelContext& ctx, RngStream& rng);

/// tauY ~ Gamma(sTauY + n/2, rTauY + sum of squared residuals / 2).
void updateTauY(ChainState& state, const ModelContext& ctx, RngStream& rng);

/// lambda_i by random-walk Metropolis, then tauEps by its Gamma conditional.
void updateExtraVariation(ChainState& state, const ModelContext& ctx, RngStream& rng);

}  // namespace profreg
