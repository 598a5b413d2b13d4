#pragma once

#include <vector>

#include <Eigen/Dense>

#include "profreg/model.hpp"
#include "profreg/rand_dist.hpp"

namespace profreg {

/// Dataset-wide category proportions and covariate means used as the
/// deselected profile by variable selection.
struct NullProfile {
    std::vector<Eigen::VectorXd> phi0;  // per discrete column
    Eigen::VectorXd xbar;               // per continuous column
};

NullProfile computeNullProfile(const Dataset& data);

/// Immutable per-run view of data, resolved hyperparameters and the
/// precomputations every step shares.
struct ModelContext {
    ModelContext(const Dataset& dataset, const HyperParams& hyper);

    const Dataset& data;
    HyperParams hp;
    std::vector<int> discCols;
    std::vector<int> contCols;
    NullProfile nullProfile;
    Eigen::MatrixXd sigma0Inv;
    Eigen::VectorXd sigma0InvMu0;
    Eigen::MatrixXd r0Inv;
    int responseDim = 0;  // 0 without response, R-1 for categorical, else 1

    int n() const { return data.n(); }
    int nCont() const { return int(contCols.size()); }
    int nDisc() const { return int(discCols.size()); }
    int nFixed() const { return data.nFixedEffects(); }
    bool hasResponse() const { return responseDim > 0; }
    bool extraVariation() const { return hp.responseExtraVariation; }
};

/// Adaptive Metropolis kernels, one per scalar parameter stream.
/// Cluster kernels are indexed by label; labels are positions, not identities.
struct KernelBank {
    std::vector<std::vector<AdaptiveKernelState>> theta;  // [label-1][r]
    std::vector<AdaptiveKernelState> beta;                // r * L + l
    std::vector<AdaptiveKernelState> lambda;              // per individual
    AdaptiveKernelState alpha;
    std::vector<AdaptiveKernelState> rho;      // per covariate
    std::vector<AdaptiveKernelState> phiSoft;  // per discrete column

    AdaptiveKernelState& thetaKernel(int label, int r, int dim);
    void resetTheta(int label);
    void setAdaptation(bool on);
};

struct ChainState {
    StickState sticks;
    AllocationState alloc;
    std::vector<ClusterParams> clusters;  // index label-1, covers 1..cStar
    GlobalParams globals;
    Eigen::MatrixXd xWork;  // covariates with current imputations of missing Gaussian cells
    Eigen::MatrixXd wBeta;  // n x responseDim, row i holds beta_r^T W_i
    KernelBank kernels;
    std::vector<std::vector<int>> members;  // index label-1

    ClusterParams& cluster(int label) { return clusters[std::size_t(label - 1)]; }
    const ClusterParams& cluster(int label) const { return clusters[std::size_t(label - 1)]; }

    /// Rebuild counts, Z* and membership lists from Z.
    void refreshAllocationSummaries();
    void refreshWBeta(const ModelContext& ctx);
};

}  // namespace profreg
