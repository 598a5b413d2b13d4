#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

#include <Eigen/Dense>

namespace profreg {

/// Reproducible pseudo-random stream (xoshiro256** seeded through splitmix64).
///
/// Every variate in the library is produced from this generator by code in
/// this module, so a fixed seed yields bit-identical sequences on every
/// platform. Child streams obtained with split() are independent of the parent
/// sequence and of each other; the sampler derives one child per chain.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0x5eedULL);

    std::uint64_t nextU64();
    /// Uniform on the open interval (0, 1).
    double uniform();
    double normal();

    RngStream split(std::uint64_t streamId) const;
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> s_{};
    bool hasSpare_ = false;
    double spare_ = 0.0;
};

// Numeric helpers shared by the model code.
inline double expit(double x) {
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double log1pExp(double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double logSumExp(std::span<const double> v);

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

double sampleBeta(double a, double b, RngStream& rng);

/// Beta draw with its logarithm and log(1 - x); the logs stay exact when x rounds to 0 or 1.
struct BetaDraw {
    double value;
    double logValue;
    double log1mValue;
};
BetaDraw sampleBetaDraw(double a, double b, RngStream& rng);
/// log of a Gamma(shape, 1) variate; stays finite for very small shapes.
double sampleLogGamma(double shape, RngStream& rng);
/// Gamma with shape/rate parameterisation (mean shape/rate).
double sampleGamma(double shape, double rate, RngStream& rng);
Eigen::VectorXd sampleDirichlet(const Eigen::VectorXd& a, RngStream& rng);
Eigen::VectorXd sampleMVNormal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                               RngStream& rng);
/// Normal draw parameterised by precision Q and the vector b = Q * mean.
Eigen::VectorXd sampleMVNormalCanonical(const Eigen::MatrixXd& precision, const Eigen::VectorXd& b,
                                        RngStream& rng);
/// Wishart(scale, dof): mean dof * scale.
Eigen::MatrixXd sampleWishart(const Eigen::MatrixXd& scale, double dof, RngStream& rng);
/// Inverse-Wishart in the convention W^{-1} ~ Wishart(scale, dof), so that
/// E[W] = scale^{-1} / (dof - J - 1).
Eigen::MatrixXd sampleInvWishart(const Eigen::MatrixXd& scale, double dof, RngStream& rng);
double sampleTLocScale(double mu, double sigma, double nu, RngStream& rng);
/// Index drawn proportionally to exp(logWeights); entries equal to -inf are never chosen.
int sampleFromLogWeights(std::span<const double> logWeights, RngStream& rng);

double logTLocScale(double x, double mu, double sigma, double nu);
double logNormalDensity(double x, double mean, double sd);
double logGammaDensity(double x, double shape, double rate);
double logBetaDensity(double x, double a, double b);

/// Robbins-Monro tuned random-walk Metropolis state for one scalar parameter.
struct AdaptiveKernelState {
    double logStepSize = 0.0;
    std::uint64_t acceptCount = 0;
    std::uint64_t proposeCount = 0;
    double targetRate = 0.44;
    bool adaptationOn = true;

    double acceptanceRate() const {
        return proposeCount == 0 ? 0.0 : double(acceptCount) / double(proposeCount);
    }
};

struct RwmStep {
    double value;
    double logTarget;
    bool accepted;
};

void adaptKernel(AdaptiveKernelState& kernel, bool accepted);

/// One random-walk Metropolis step with a N(0, exp(logStepSize)^2) increment.
/// A NaN target at the proposal counts as -inf. On rejection the returned
/// value is `current` exactly.
template <class LogTarget>
RwmStep adaptiveRWMStep(LogTarget&& logTarget, double current, double currentLogTarget,
                        AdaptiveKernelState& kernel, RngStream& rng) {
    const double proposal = current + std::exp(kernel.logStepSize) * rng.normal();
    double proposedLog = logTarget(proposal);
    if (std::isnan(proposedLog)) {
        proposedLog = kNegInf;
    }
    bool accepted = false;
    if (proposedLog > kNegInf) {
        const double logRatio = proposedLog - currentLogTarget;
        accepted = logRatio >= 0 || std::log(rng.uniform()) < logRatio;
    }
    adaptKernel(kernel, accepted);
    if (accepted) {
        return {proposal, proposedLog, true};
    }
    return {current, currentLogTarget, false};
}

template <class LogTarget>
RwmStep adaptiveRWMStep(LogTarget&& logTarget, double current, AdaptiveKernelState& kernel,
                        RngStream& rng) {
    const double currentLog = logTarget(current);
    return adaptiveRWMStep(logTarget, current, currentLog, kernel, rng);
}

}  // namespace profreg
