#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "profreg/chain.hpp"

namespace profreg {

struct SamplerConfig {
    int nSweeps = 1000;
    int nBurn = 1000;
    int reportEvery = 0;  // progress callback period, 0 disables
    bool labelSwitching = true;
    bool checkInvariants = true;
    bool computeMargModPost = true;
    /// Keep per-sweep cluster parameters and psi in the archived records.
    bool keepClusterParams = false;
};

struct LabelSwitchStats {
    std::array<std::uint64_t, 3> proposed{};
    std::array<std::uint64_t, 3> accepted{};
};

/// One archived sweep.
struct SweepRecord {
    int sweep = 0;  // 1-based, counted after burn-in
    std::vector<int> z;
    double alpha = 0.0;
    int zStar = 0;
    int nNonEmpty = 0;
    int cStar = 0;
    std::vector<Eigen::VectorXd> theta;  // labels 1..zStar
    Eigen::MatrixXd beta;
    Eigen::VectorXd rho;
    Eigen::VectorXd zeta;
    std::vector<std::vector<std::uint8_t>> gamma;  // labels 1..zStar (BinaryCluster)
    double tauY = 1.0;
    double tauEps = 1.0;
    double logMargModPost = 0.0;
    SliceInvariantReport invariants;
    // Filled when SamplerConfig::keepClusterParams is set.
    std::vector<double> psi;              // labels 1..cStar
    std::vector<ClusterParams> clusters;  // labels 1..cStar
};

/// Receiver of archived sweeps (file writers, in-memory collectors).
class SweepSink {
public:
    virtual ~SweepSink() = default;
    virtual void onSweep(const SweepRecord& record, const ChainState& state, const ModelContext& ctx) = 0;
};

class Sampler {
public:
    Sampler(const Dataset& data, const HyperParams& hp, SamplerConfig cfg);

    const ModelContext& context() const { return ctx_; }
    ChainState& state() { return state_; }
    const ChainState& state() const { return state_; }
    RngStream& rng() { return rng_; }
    const SamplerConfig& config() const { return cfg_; }
    const LabelSwitchStats& labelSwitchStats() const { return switchStats_; }

    /// Random allocation to nClusInit clusters, prior draws for everything else.
    void initialize();

    /// Steps A to G once. Errors are rethrown as SamplerError naming the sweep and step.
    void sweep();

    /// Full chain: burn-in, adaptation freeze, then archived sweeps.
    std::vector<SweepRecord> run(SweepSink* sink = nullptr, bool collect = true);

    SweepRecord makeRecord(int sweepIndex) const;

    // Individual steps, exposed for testing.
    void stepA();
    void stepB1_sticks();
    void stepB2_activeParams();
    void stepB3_labelSwitch();
    void stepB4_slice();
    void stepC_bounds();
    void stepD1_alpha();
    void stepD2_extend();
    void stepE_potential();
    void stepF_globals();
    void stepG_allocate();

    /// The three label-switching moves; each returns whether it was accepted.
    bool labelMove1(int c);
    bool labelMove2(int c);
    bool labelMove3(int c);

    /// Log allocation weight of individual i for each candidate 1..cStar
    /// (-inf where the slice excludes a component).
    std::vector<double> allocationLogWeights(int i) const;

    /// Replace the data after its contents changed in place (covariate values,
    /// outcomes); refreshes imputations and the cached fixed-effect terms.
    void dataChanged();

    int sweepsDone() const { return sweepsDone_; }
    /// Slice invariant check of the most recent sweep (zeros when disabled).
    const SliceInvariantReport& lastInvariants() const { return lastInvariants_; }
    std::function<void(int, const Sampler&)> progress;

private:
    void ensureClusterSlots(int count);
    void drawPriorCluster(int label);
    double sliceWidth(int c) const;

    ModelContext ctx_;
    SamplerConfig cfg_;
    ChainState state_;
    RngStream rng_;
    LabelSwitchStats switchStats_;
    int sweepsDone_ = 0;
    int extensionCap_ = 0;
    bool initialized_ = false;
    SliceInvariantReport lastInvariants_;
};

/// Convenience wrapper: construct, initialize and run.
std::vector<SweepRecord> runChain(const Dataset& data, const HyperParams& hp, const SamplerConfig& cfg,
                                  SweepSink* sink = nullptr);

}  // namespace profreg
