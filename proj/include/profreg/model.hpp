#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "profreg/rand_dist.hpp"

namespace profreg {

enum class ResponseKind { None, Bernoulli, Binomial, Poisson, Categorical, Normal };
enum class CovariateKind { Discrete, Continuous };
enum class SamplerVariant { Truncated, SliceDependent, SliceIndependent };
enum class VarSelectType { None, Continuous, BinaryCluster };

std::string toString(ResponseKind k);
std::string toString(CovariateKind k);
std::string toString(SamplerVariant v);
std::string toString(VarSelectType v);
ResponseKind parseResponseKind(const std::string& s);
CovariateKind parseCovariateKind(const std::string& s);
SamplerVariant parseSamplerVariant(const std::string& s);
VarSelectType parseVarSelectType(const std::string& s);

/// Outcome, covariates and fixed effects for n individuals.
///
/// Discrete covariates are stored as category codes 0..K_j-1 in a double
/// matrix; missing covariate cells are flagged in `missing` and their value in
/// `x` is ignored. Outcome and fixed effects are never missing.
struct Dataset {
    ResponseKind responseKind = ResponseKind::None;
    int nResponseCategories = 0;  // categorical response only
    std::vector<double> y;
    std::vector<int> trials;     // Binomial only
    std::vector<double> offset;  // Poisson only
    Eigen::MatrixXd w;           // n x L
    Eigen::MatrixXd x;           // n x J
    std::vector<CovariateKind> kinds;
    std::vector<int> nCategories;  // K_j, 0 for continuous columns
    std::vector<std::uint8_t> missing;  // row-major n x J

    std::string outcomeName = "outcome";
    std::vector<std::string> covariateNames;
    std::vector<std::string> fixedEffectNames;

    int n() const { return int(x.rows()); }
    int nCovariates() const { return int(x.cols()); }
    int nFixedEffects() const { return int(w.cols()); }
    bool isMissing(int i, int j) const {
        return !missing.empty() && missing[std::size_t(i) * std::size_t(x.cols()) + std::size_t(j)] != 0;
    }
    bool anyMissing() const;
    std::vector<int> discreteColumns() const;
    std::vector<int> continuousColumns() const;

    /// Throws DataError naming the offending row/column.
    void validate() const;
};

/// Prior hyperparameters and sampler configuration.
///
/// Gaussian-covariate quantities left empty (and kappa0 <= 0) are derived
/// from the data by resolveDataDefaults(). R0 follows the inverse-Wishart
/// convention of sampleInvWishart: Sigma_c^{-1} ~ Wishart(R0, kappa0).
struct HyperParams {
    Eigen::VectorXd mu0;
    Eigen::MatrixXd Sigma0;
    Eigen::MatrixXd R0;
    double kappa0 = -1.0;
    double aPhi = 1.0;
    std::vector<Eigen::VectorXd> aDir;  // one per discrete column, filled from aPhi

    double muTheta = 0.0;
    double sigmaTheta = 2.5;
    double muBeta = 0.0;
    double sigmaBeta = 2.5;
    double tDof = 7.0;
    double shapeAlpha = 1.0;
    double rateAlpha = 0.5;
    double alphaFixed = -1.0;  // > 0 holds alpha at this value
    double sTauY = 2.5;
    double rTauY = 2.5;
    double sTauEps = 5.0;
    double rTauEps = 0.5;
    double aRho = 0.5;
    double bRho = 0.5;

    SamplerVariant variant = SamplerVariant::SliceDependent;
    int truncationC = 50;
    double kappaSlice = 0.8;
    VarSelectType varSelectType = VarSelectType::None;
    bool responseExtraVariation = false;
    int nSweeps = 1000;
    int nBurn = 1000;
    int nClusInit = 20;
    std::uint64_t seed = 1;

    void validate(int nContinuous) const;
};

HyperParams resolveDataDefaults(HyperParams hp, const Dataset& data);

struct ClusterParams {
    Eigen::VectorXd mu;                // continuous block
    Eigen::MatrixXd Sigma;             // continuous block
    std::vector<Eigen::VectorXd> phi;  // per discrete column, in discreteColumns() order
    Eigen::VectorXd theta;             // 1 value, or R-1 for categorical response
    std::vector<std::uint8_t> gamma;   // per covariate (BinaryCluster selection)
};

struct GlobalParams {
    Eigen::MatrixXd beta;  // (R-1 or 1) x L
    double tauY = 1.0;
    double tauEps = 1.0;
    Eigen::VectorXd lambda;  // extra-variation latent predictors
    Eigen::VectorXd zeta;    // soft selectors
    Eigen::VectorXd rho;
    std::vector<std::uint8_t> rhoOmega;
};

/// psi_c = V_c prod_{l<c} (1 - V_l); throws ParameterDomainError outside [0, 1].
/// `log1mv`, when given, supplies log(1 - V_l) in place of the rounded values.
std::vector<double> stickWeights(std::span<const double> v, std::span<const double> log1mv = {});

/// Stick proportions V with log(1 - V) kept alongside: Beta(1, alpha) draws
/// for small alpha round to 1 in double precision.
struct StickState {
    std::vector<double> v;
    std::vector<double> log1mv;  // same length as v, or empty to derive from v
    std::vector<double> psi;
    double alpha = 1.0;

    std::size_t size() const { return v.size(); }
    double logOneMinus(std::size_t c) const {
        return log1mv.size() == v.size() ? log1mv[c] : std::log1p(-v[c]);
    }
    /// Plain proportions; log(1 - V) is recomputed from them.
    void assign(std::vector<double> values);
    void resize(std::size_t n, double fill = 0.5);
    void set(std::size_t c, const BetaDraw& d);
    void set(std::size_t c, double value, double logOneMinusValue);
    void push(const BetaDraw& d);
    void swap(std::size_t a, std::size_t b);
    void refreshPsi() { psi = stickWeights(v, log1mv.size() == v.size() ? log1mv : std::vector<double>{}); }
};

struct AllocationState {
    std::vector<int> z;  // 1-based labels
    std::vector<double> u;
    int zStar = 0;
    int cStar = 0;
    double uStar = 1.0;
    std::vector<int> countsN;      // index c-1
    std::vector<int> countsNPlus;  // index c-1
};

struct ClusterCounts {
    std::vector<int> n;
    std::vector<int> nPlus;
};

ClusterCounts refreshCounts(std::span<const int> z);

struct ActiveBounds {
    int zStar;
    double uStar;
    int cStar;
};

/// Z* = max Z, U* = min U, and C* = min{c : sum_{l<=c} psi_l > 1 - U*}.
/// The partial-sum test is evaluated as prod_{l<=c}(1 - V_l) < U*.
/// Throws InsufficientSticksError when V is too short to certify C*.
ActiveBounds computeActiveBounds(const AllocationState& alloc, const StickState& sticks);

/// Deterministic slice widths xi_c = (1 - kappa) kappa^{c-1} (c is 1-based).
double sliceXi(int c, double kappa);
/// Largest c with xi_c > uStar (0 if none).
int independentSliceBound(double uStar, double kappa);

struct SliceInvariantReport {
    int cStarBelowZStar = 0;
    int uAboveWeight = 0;    // U_i >= psi_{Z_i} (or xi_{Z_i})
    int tailAboveSlice = 0;  // psi_c >= U_i for some c in the window beyond C*
};

/// Executable form of the C* properties. `v` must cover at least cStar + window.
SliceInvariantReport checkSliceInvariants(const AllocationState& alloc, std::span<const double> v,
                                          SamplerVariant variant, double kappa, int window = 10,
                                          std::span<const double> log1mv = {});

}  // namespace profreg
