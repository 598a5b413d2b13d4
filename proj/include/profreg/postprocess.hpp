#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "profreg/chain.hpp"
#include "profreg/sampler.hpp"

namespace profreg {

/// Running co-allocation counts; matrix() gives the similarity matrix S.
class SimilarityAccumulator {
public:
    explicit SimilarityAccumulator(int n);
    void add(std::span<const int> z);
    int sweeps() const { return sweeps_; }
    Eigen::MatrixXd matrix() const;

private:
    int n_;
    int sweeps_ = 0;
    Eigen::MatrixXd counts_;
};

/// S_ij = fraction of sweeps with Z_i = Z_j. Throws Error on an empty archive.
Eigen::MatrixXd buildSimilarity(const std::vector<std::vector<int>>& archive);

struct Partition {
    std::vector<int> labels;  // dense 1..k
    int k = 0;
    std::string method;
    double score = 0.0;       // LS distance, or average silhouette width
    int sweep = -1;           // archive position (LS only, 0-based)
    std::vector<int> medoids; // PAM only, 0-based individuals
};

/// Relabel to dense labels 1..k in order of first appearance.
std::vector<int> relabelDense(std::span<const int> z);

/// sum_{i<j} (1{z_i = z_j} - S_ij)^2
double lsDistance(std::span<const int> z, const Eigen::MatrixXd& s);
/// Archived partition closest to S in least squares; ties go to the earliest sweep.
Partition lsOptimalPartition(const std::vector<std::vector<int>>& archive, const Eigen::MatrixXd& s);

struct PamResult {
    std::vector<int> medoids;  // 0-based
    std::vector<int> labels;   // 1..k, by medoid order
    double cost = 0.0;
};

/// Partitioning around medoids (BUILD then SWAP to a local optimum) on a
/// dissimilarity matrix. When there are at most exactLimit medoid sets the
/// local optimum is replaced by the best set found by enumeration; 0 disables.
PamResult pam(const Eigen::MatrixXd& d, int k, long long exactLimit = 20000);
/// Sum over points of the dissimilarity to the nearest medoid.
double medoidCost(const Eigen::MatrixXd& d, std::span<const int> medoids);
/// Silhouette widths; singleton clusters score 0.
std::vector<double> silhouette(const Eigen::MatrixXd& d, std::span<const int> labels);
int defaultKMax(int n);
/// PAM on 1 - S for k = 2..kMax, keeping the k with the largest average
/// silhouette width (lowest k on ties). kMax <= 0 selects defaultKMax(n).
Partition pamOptimalPartition(const Eigen::MatrixXd& s, int kMax = 0);

double adjustedRandIndex(std::span<const int> a, std::span<const int> b);

/// Per-sweep parameter snapshot used by profiles and predictions.
struct SweepParams {
    std::vector<int> z;
    std::vector<double> psi;              // labels 1..cStar
    std::vector<ClusterParams> clusters;  // labels 1..cStar
    Eigen::MatrixXd beta;
    Eigen::VectorXd zeta;
    Eigen::VectorXd rho;
    double tauY = 1.0;
};

SweepParams toSweepParams(const SweepRecord& record);

struct QuantileSummary {
    double mean = 0.0;
    std::vector<double> values;  // one per level
};

/// Linear-interpolation empirical quantile (type 7) of unsorted data.
double empiricalQuantile(std::vector<double> data, double level);
QuantileSummary summarise(const std::vector<double>& draws, const std::vector<double>& levels);

struct ClusterProfile {
    int size = 0;
    std::vector<QuantileSummary> risk;               // one per response component
    std::vector<std::vector<QuantileSummary>> phi;   // [discrete column][category]
    std::vector<QuantileSummary> mu;                 // per continuous column
    std::vector<std::vector<double>> riskDraws;      // [component][sweep]
};

struct RiskProfile {
    std::vector<double> levels;
    std::vector<ClusterProfile> clusters;  // partition label k at index k-1
};

/// Baseline risk from theta alone: expit (Bernoulli/Binomial), exp (Poisson),
/// identity (Normal), category probabilities (Categorical).
std::vector<double> baselineRisk(ResponseKind kind, const Eigen::VectorXd& theta);

RiskProfile riskProfiles(const std::vector<SweepParams>& sweeps, const Partition& part, const ModelContext& ctx,
                         std::vector<double> levels = {0.05, 0.5, 0.95});

enum class PredictMode { RandomAllocation, RaoBlackwell };
PredictMode parsePredictMode(const std::string& s);

struct PredictionScenario {
    std::vector<double> x;               // J values (discrete as category codes)
    std::vector<std::uint8_t> missing;   // J flags
    std::vector<double> w;               // L values, or empty for no fixed-effect term
    double offset = 1.0;                 // Poisson exposure
};

struct PredictionResult {
    int outDim = 1;
    std::vector<Eigen::MatrixXd> perSweep;  // [scenario] nSweeps x outDim
    std::vector<Eigen::VectorXd> mean;      // [scenario]
};

/// Scenario allocation weights over the stored components (log scale, unnormalised).
std::vector<double> scenarioLogWeights(const SweepParams& sweep, const PredictionScenario& scenario,
                                       const ModelContext& ctx);

PredictionResult predict(const std::vector<SweepParams>& sweeps, const std::vector<PredictionScenario>& scenarios,
                         const ModelContext& ctx, PredictMode mode, RngStream& rng);

}  // namespace profreg
