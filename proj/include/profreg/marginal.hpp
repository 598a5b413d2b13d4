#pragma once

#include <span>

#include "profreg/chain.hpp"
#include "profreg/covariates.hpp"

namespace profreg {

/// log EPPF of a partition with the given non-empty cluster sizes:
/// log Gamma(alpha) - log Gamma(alpha + n) + K log alpha + sum_k log Gamma(n_k).
double logEppf(std::span<const int> sizes, double alpha);

/// Dirichlet-multinomial log marginal of one column's category counts.
double logMarginalDiscrete(const Eigen::VectorXd& counts, const Eigen::VectorXd& a);

/// Normal-inverse-Wishart log marginal of a cluster's Gaussian block
/// (scale R0^{-1}, dof kappa0, mu | Sigma ~ N(mu0, Sigma / k0)).
double logMarginalGaussian(const CovariateStats& stats, const ModelContext& ctx);

/// Prior-to-data scale ratio k0 used by logMarginalGaussian.
double gaussianMarginalK0(const ModelContext& ctx);

/// Laplace approximation in theta of the response marginal of one cluster,
/// with beta (and tauY / lambda) held at their current values.
double logMarginalResponse(std::span<const int> members, const ChainState& state, const ModelContext& ctx);

/// log p(Z | D) up to a constant for the current allocation.
double computeLogMargModPost(const ChainState& state, const ModelContext& ctx);

}  // namespace profreg
