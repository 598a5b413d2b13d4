#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "profreg/chain.hpp"

namespace profreg {

/// Sufficient statistics of one cluster's covariates. Gaussian sums use the
/// working (imputed) matrix; category counts skip missing cells.
struct CovariateStats {
    int nC = 0;
    Eigen::VectorXd sumX;
    Eigen::MatrixXd sumOuter;
    std::vector<Eigen::VectorXd> catCounts;
};

CovariateStats computeCovariateStats(const ModelContext& ctx, const Eigen::MatrixXd& xWork,
                                     std::span<const int> members);

/// Multivariate normal log-density over the coordinates whose mask entry is 0.
double gaussianLogLik(const Eigen::VectorXd& x, std::span<const std::uint8_t> missingMask,
                      const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma);
double gaussianLogLik(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma);

/// Sum of log phi_{j, x_j} over the non-missing discrete coordinates.
double discreteLogLik(std::span<const int> categories, std::span<const std::uint8_t> missingMask,
                      const std::vector<Eigen::VectorXd>& phi);

inline double compositePhi(double phi, double phi0, double selector) {
    return selector * phi + (1.0 - selector) * phi0;
}
inline double compositeMu(double mu, double xbar, double selector) {
    return selector * mu + (1.0 - selector) * xbar;
}

/// Semi-conjugate Gibbs pass: Sigma | mu then mu | Sigma.
///
/// `selection` holds the diagonal of the selection matrix (all ones without
/// variable selection); residuals for the Sigma step are taken against the
/// composite mean selection * mu + (1 - selection) * xbar.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> gaussianConjugateUpdate(
    const CovariateStats& stats, const Eigen::VectorXd& currentMu, const Eigen::VectorXd& selection,
    const ModelContext& ctx, RngStream& rng);

/// Draw of mu_c from Normal(mu~, Sigma~) with
///   Sigma~ = (Sigma0^{-1} + n G Sigma_c^{-1} G)^{-1},
///   mu~    = Sigma~ [Sigma0^{-1} mu0 + n G Sigma_c^{-1} (Xbar_c - (I - G) Xbar)].
Eigen::VectorXd muPosteriorVS(const CovariateStats& stats, const Eigen::VectorXd& selection,
                              const Eigen::MatrixXd& sigmaC, const ModelContext& ctx, RngStream& rng);

/// Mean and covariance of the muPosteriorVS conditional (exposed for checks).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> muPosteriorVSMoments(const CovariateStats& stats,
                                                                 const Eigen::VectorXd& selection,
                                                                 const Eigen::MatrixXd& sigmaC,
                                                                 const ModelContext& ctx);

/// Phi_{c,j} ~ Dirichlet(a_j + counts_j) independently per column.
std::vector<Eigen::VectorXd> discreteConjugateUpdate(const std::vector<Eigen::VectorXd>& catCounts,
                                                     const std::vector<Eigen::VectorXd>& aDir, RngStream& rng);

/// Draw of every covariate parameter of one cluster from its prior.
void drawCovariatePrior(ClusterParams& cluster, const GlobalParams& globals, const ModelContext& ctx,
                        RngStream& rng);

/// Per-cluster precomputation of composite parameters for fast likelihoods.
struct CovariateCache {
    std::vector<Eigen::VectorXd> logPhiStar;  // per discrete column
    Eigen::VectorXd muStar;
    Eigen::MatrixXd precision;
    double logDet = 0.0;
};

/// Selector value of covariate j for cluster c under the configured scheme.
double selectorValue(const ClusterParams& cluster, const GlobalParams& globals, const ModelContext& ctx,
                     int column);
CovariateCache buildCovariateCache(const ClusterParams& cluster, const GlobalParams& globals,
                                   const ModelContext& ctx);
/// Covariate log-likelihood of individual i (observed coordinates only).
double covariateLogLik(int i, const CovariateCache& cache, const ModelContext& ctx);
/// Same likelihood for a free-standing row of J covariate values (prediction scenarios).
double covariateLogLikRow(std::span<const double> x, std::span<const std::uint8_t> missingMask,
                          const CovariateCache& cache, const ModelContext& ctx);

/// Gaussian log-likelihood of a cluster's members from sufficient statistics.
double gaussianStatsLogLik(const CovariateStats& stats, const Eigen::VectorXd& muStar,
                           const Eigen::MatrixXd& sigma);

/// B.2 covariate pass for one active cluster (imputation, then conjugate,
/// collapsed or Metropolis updates according to the selection scheme).
void updateClusterCovariates(ChainState& state, int label, const ModelContext& ctx, RngStream& rng);

/// Redraw missing Gaussian cells of the cluster's members given its parameters.
void imputeMissingGaussian(ChainState& state, int label, const ModelContext& ctx, RngStream& rng);

/// Two-point conditional of gamma_{c,j} given the cluster parameters; returns P(gamma = 1).
double gammaConditionalProbability(const ClusterParams& cluster, const CovariateStats& stats,
                                   const GlobalParams& globals, const ModelContext& ctx, int column);

/// Exact Gibbs draw of (rhoOmega_j, rho_j) given the active gamma_{., j}.
std::pair<std::uint8_t, double> drawRhoGivenGamma(int nSelected, int nActive, const ModelContext& ctx,
                                                 RngStream& rng);

/// Step F selector pass: zeta/rho (Continuous) or gamma/rho (BinaryCluster).
void updateSelectors(ChainState& state, const ModelContext& ctx, RngStream& rng);

}  // namespace profreg
