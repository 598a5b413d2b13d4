#include "profreg/sampler.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "profreg/covariates.hpp"
#include "profreg/errors.hpp"
#include "profreg/marginal.hpp"
#include "profreg/response.hpp"

namespace profreg {

namespace {

bool isSlice(SamplerVariant v) { return v != SamplerVariant::Truncated; }

}  // namespace

Sampler::Sampler(const Dataset& data, const HyperParams& hp, SamplerConfig cfg)
    : ctx_(data, hp), cfg_(cfg), rng_(ctx_.hp.seed) {
    if (cfg_.nSweeps < 0 || cfg_.nBurn < 0) {
        throw ConfigError("nSweeps and nBurn must be non-negative");
    }
    extensionCap_ = 10 * ctx_.n() + 1000;
}

double Sampler::sliceWidth(int c) const {
    if (ctx_.hp.variant == SamplerVariant::SliceIndependent) {
        return sliceXi(c, ctx_.hp.kappaSlice);
    }
    return state_.sticks.psi[std::size_t(c - 1)];
}

void Sampler::ensureClusterSlots(int count) {
    if (int(state_.clusters.size()) < count) state_.clusters.resize(std::size_t(count));
    if (int(state_.members.size()) < count) state_.members.resize(std::size_t(count));
}

void Sampler::drawPriorCluster(int label) {
    ensureClusterSlots(label);
    auto& cluster = state_.cluster(label);
    drawCovariatePrior(cluster, state_.globals, ctx_, rng_);
    cluster.theta = drawThetaPrior(ctx_, rng_);
}

void Sampler::initialize() {
    const auto& hp = ctx_.hp;
    const int n = ctx_.n();
    const int J = ctx_.data.nCovariates();
    const bool truncated = hp.variant == SamplerVariant::Truncated;
    const int nInit = truncated ? std::min(hp.nClusInit, hp.truncationC) : hp.nClusInit;

    state_ = ChainState{};
    state_.alloc.z.resize(std::size_t(n));
    for (auto& zi : state_.alloc.z) zi = 1 + int(rng_.uniform() * nInit);
    state_.sticks.alpha = hp.alphaFixed > 0 ? hp.alphaFixed : sampleGamma(hp.shapeAlpha, hp.rateAlpha, rng_);

    auto& g = state_.globals;
    g.beta = Eigen::MatrixXd::Zero(ctx_.responseDim, ctx_.nFixed());
    g.tauY = 1.0;
    g.tauEps = hp.sTauEps / hp.rTauEps;
    if (hp.varSelectType != VarSelectType::None) {
        g.rho = Eigen::VectorXd::Constant(J, 0.5);
        g.zeta = hp.varSelectType == VarSelectType::Continuous ? g.rho : Eigen::VectorXd::Ones(J);
        g.rhoOmega.assign(std::size_t(J), 1);
    } else {
        g.rho = Eigen::VectorXd::Zero(0);
        g.zeta = Eigen::VectorXd::Zero(0);
    }

    state_.xWork = ctx_.data.x;
    for (std::size_t k = 0; k < ctx_.contCols.size(); ++k) {
        const int j = ctx_.contCols[k];
        for (int i = 0; i < n; ++i) {
            if (ctx_.data.isMissing(i, j)) state_.xWork(i, j) = ctx_.nullProfile.xbar[Eigen::Index(k)];
        }
    }
    state_.refreshWBeta(ctx_);
    state_.refreshAllocationSummaries();

    auto& kernels = state_.kernels;
    kernels.rho.assign(std::size_t(J), AdaptiveKernelState{});
    kernels.phiSoft.assign(std::size_t(ctx_.nDisc()), AdaptiveKernelState{});
    kernels.beta.assign(std::size_t(ctx_.responseDim * ctx_.nFixed()), AdaptiveKernelState{});
    if (ctx_.extraVariation()) kernels.lambda.assign(std::size_t(n), AdaptiveKernelState{});

    const int slots = truncated ? hp.truncationC : state_.alloc.zStar;
    for (int c = 1; c <= slots; ++c) drawPriorCluster(c);

    if (ctx_.extraVariation()) {
        g.lambda.resize(n);
        for (int i = 0; i < n; ++i) g.lambda[i] = state_.cluster(state_.alloc.z[std::size_t(i)]).theta[0] + state_.wBeta(i, 0);
    }

    auto& sticks = state_.sticks;
    sticks.assign({});
    const int nSticks = truncated ? hp.truncationC : state_.alloc.zStar;
    for (int c = 1; c <= nSticks; ++c) sticks.push(sampleBetaDraw(1.0, sticks.alpha, rng_));
    if (truncated) sticks.set(std::size_t(nSticks - 1), 1.0, kNegInf);
    sticks.refreshPsi();
    stepB4_slice();
    stepC_bounds();
    stepD2_extend();
    stepE_potential();

    kernels.setAdaptation(cfg_.nBurn > 0);
    sweepsDone_ = 0;
    initialized_ = true;
}

void Sampler::dataChanged() {
    state_.xWork = ctx_.data.x;
    for (std::size_t k = 0; k < ctx_.contCols.size(); ++k) {
        const int j = ctx_.contCols[k];
        for (int i = 0; i < ctx_.n(); ++i) {
            if (ctx_.data.isMissing(i, j)) state_.xWork(i, j) = ctx_.nullProfile.xbar[Eigen::Index(k)];
        }
    }
    state_.refreshWBeta(ctx_);
}

void Sampler::stepA() { state_.refreshAllocationSummaries(); }

void Sampler::stepB1_sticks() {
    auto& sticks = state_.sticks;
    const auto& a = state_.alloc;
    const bool truncated = ctx_.hp.variant == SamplerVariant::Truncated;
    if (int(sticks.size()) < a.zStar) sticks.resize(std::size_t(a.zStar));
    const int last = truncated ? std::min(a.zStar, ctx_.hp.truncationC - 1) : a.zStar;
    for (int c = 1; c <= last; ++c) {
        sticks.set(std::size_t(c - 1), sampleBetaDraw(1.0 + a.countsN[std::size_t(c - 1)],
                                                      sticks.alpha + a.countsNPlus[std::size_t(c - 1)], rng_));
    }
    sticks.refreshPsi();
}

void Sampler::stepB2_activeParams() {
    const bool adapting = state_.kernels.alpha.adaptationOn;
    for (int c = 1; c <= state_.alloc.zStar; ++c) {
        if (adapting && state_.alloc.countsN[std::size_t(c - 1)] == 0) state_.kernels.resetTheta(c);
        if (ctx_.data.nCovariates() > 0) updateClusterCovariates(state_, c, ctx_, rng_);
        updateTheta(state_, c, ctx_, rng_);
    }
}

void Sampler::stepB3_labelSwitch() {
    if (!cfg_.labelSwitching || state_.alloc.zStar < 2) return;
    const int zStar = state_.alloc.zStar;
    auto pick = [&] { return 1 + std::min(zStar - 2, int(rng_.uniform() * (zStar - 1))); };
    labelMove1(pick());
    labelMove2(pick());
    labelMove3(pick());
}

namespace {

// Swap the allocation, membership and parameters of labels c and c+1.
void swapLabels(ChainState& state, int c) {
    std::swap(state.clusters[std::size_t(c - 1)], state.clusters[std::size_t(c)]);
    for (int i : state.members[std::size_t(c - 1)]) state.alloc.z[std::size_t(i)] = c + 1;
    for (int i : state.members[std::size_t(c)]) state.alloc.z[std::size_t(i)] = c;
    state.refreshAllocationSummaries();
}

// A swap may not move Z*: the proposal picks c uniformly below Z*, so the
// reverse move must see the same Z*.
bool swapKeepsZStar(const AllocationState& a, int c) {
    return c >= 1 && c + 1 <= a.zStar && !(c + 1 == a.zStar && a.countsN[std::size_t(c - 1)] == 0);
}

}  // namespace

bool Sampler::labelMove1(int c) {
    auto& a = state_.alloc;
    if (!swapKeepsZStar(a, c)) return false;
    ++switchStats_.proposed[0];
    const auto& psi = state_.sticks.psi;
    const double nc = a.countsN[std::size_t(c - 1)];
    const double nc1 = a.countsN[std::size_t(c)];
    const double logR = (nc1 - nc) * (std::log(psi[std::size_t(c - 1)]) - std::log(psi[std::size_t(c)]));
    if (!(logR >= 0 || std::log(rng_.uniform()) < logR)) return false;
    swapLabels(state_, c);
    ++switchStats_.accepted[0];
    return true;
}

bool Sampler::labelMove2(int c) {
    auto& a = state_.alloc;
    if (!swapKeepsZStar(a, c)) return false;
    if (ctx_.hp.variant == SamplerVariant::Truncated && c + 1 >= ctx_.hp.truncationC) return false;
    ++switchStats_.proposed[1];
    auto& sticks = state_.sticks;
    const double nc = a.countsN[std::size_t(c - 1)];
    const double nc1 = a.countsN[std::size_t(c)];
    const double logR = nc * sticks.logOneMinus(std::size_t(c)) - nc1 * sticks.logOneMinus(std::size_t(c - 1));
    if (!(logR >= 0 || std::log(rng_.uniform()) < logR)) return false;
    swapLabels(state_, c);
    sticks.swap(std::size_t(c - 1), std::size_t(c));
    sticks.refreshPsi();
    ++switchStats_.accepted[1];
    return true;
}

bool Sampler::labelMove3(int c) {
    auto& a = state_.alloc;
    if (!swapKeepsZStar(a, c)) return false;
    if (ctx_.hp.variant == SamplerVariant::Truncated && c + 1 >= ctx_.hp.truncationC) return false;
    ++switchStats_.proposed[2];
    auto& sticks = state_.sticks;
    const double logKeepC = sticks.logOneMinus(std::size_t(c - 1));
    // log of (1 - V_c)(1 - V_{c+1}), the mass left after both sticks.
    const double logKeep = logKeepC + sticks.logOneMinus(std::size_t(c));
    // After the swap, label c holds the old c+1 members and vice versa. The
    // split of the combined stick 1 - keep is redrawn from its conditional
    // shape given the new counts, which makes the acceptance ratio free of it.
    const double ncNew = a.countsN[std::size_t(c)];
    const double nc1New = a.countsN[std::size_t(c - 1)];
    const BetaDraw split = sampleBetaDraw(1.0 + ncNew, 1.0 + nc1New, rng_);
    // 1 - V_c' = (1 - split) + split * keep and 1 - V_{c+1}' = keep / (1 - V_c').
    const double hi = std::max(split.log1mValue, split.logValue + logKeep);
    const double lo = std::min(split.log1mValue, split.logValue + logKeep);
    const double logKeepNew = hi + std::log1p(std::exp(lo - hi));
    const double logKeepNext = std::min(0.0, logKeep - logKeepNew);
    const double logR = logKeepC - logKeepNew;
    if (!(logR >= 0 || std::log(rng_.uniform()) < logR)) return false;
    swapLabels(state_, c);
    sticks.set(std::size_t(c - 1), std::max(-std::expm1(logKeepNew), 1e-300), logKeepNew);
    sticks.set(std::size_t(c), std::max(-std::expm1(logKeepNext), 1e-300), logKeepNext);
    sticks.refreshPsi();
    ++switchStats_.accepted[2];
    return true;
}

void Sampler::stepB4_slice() {
    auto& a = state_.alloc;
    if (!isSlice(ctx_.hp.variant)) {
        a.u.clear();
        return;
    }
    a.u.resize(a.z.size());
    for (std::size_t i = 0; i < a.z.size(); ++i) a.u[i] = rng_.uniform() * sliceWidth(a.z[i]);
}

void Sampler::stepC_bounds() {
    auto& a = state_.alloc;
    a.zStar = 0;
    for (int zi : a.z) a.zStar = std::max(a.zStar, zi);
    a.uStar = 1.0;
    for (double ui : a.u) a.uStar = std::min(a.uStar, ui);
}

void Sampler::stepD1_alpha() {
    const auto& hp = ctx_.hp;
    if (hp.alphaFixed > 0) {
        state_.sticks.alpha = hp.alphaFixed;
        return;
    }
    const int last = hp.variant == SamplerVariant::Truncated ? std::min(state_.alloc.zStar, hp.truncationC - 1)
                                                              : state_.alloc.zStar;
    double sumLog1mV = 0;
    for (int c = 1; c <= last; ++c) sumLog1mV += state_.sticks.logOneMinus(std::size_t(c - 1));
    auto target = [&](double s) {
        const double alpha = std::exp(s);
        if (!(alpha > 0) || !std::isfinite(alpha)) return kNegInf;
        return logGammaDensity(alpha, hp.shapeAlpha, hp.rateAlpha) + last * s + (alpha - 1.0) * sumLog1mV + s;
    };
    state_.sticks.alpha = std::exp(adaptiveRWMStep(target, std::log(state_.sticks.alpha), state_.kernels.alpha, rng_).value);
}

void Sampler::stepD2_extend() {
    const auto& hp = ctx_.hp;
    auto& a = state_.alloc;
    auto& sticks = state_.sticks;
    const double alpha = sticks.alpha;
    auto fresh = [&] { return sampleBetaDraw(1.0, alpha, rng_); };
    if (hp.variant == SamplerVariant::Truncated) {
        const int C = hp.truncationC;
        sticks.resize(std::size_t(C));
        for (int c = a.zStar + 1; c < C; ++c) sticks.set(std::size_t(c - 1), fresh());
        sticks.set(std::size_t(C - 1), 1.0, kNegInf);
        a.cStar = C;
    } else {
        // Sticks beyond Z* are redrawn given the new alpha.
        sticks.resize(std::size_t(a.zStar));
        double logRemaining = 0.0;
        for (std::size_t c = 0; c < sticks.size(); ++c) logRemaining += sticks.logOneMinus(c);
        if (hp.variant == SamplerVariant::SliceDependent) {
            const double logUStar = std::log(a.uStar);
            while (!(logRemaining < logUStar)) {
                if (int(sticks.size()) >= extensionCap_) {
                    throw SamplerError("stick extension exceeded " + std::to_string(extensionCap_) + " components");
                }
                sticks.push(fresh());
                logRemaining += sticks.log1mv.back();
            }
            a.cStar = int(sticks.size());
        } else {
            a.cStar = std::max(a.zStar, independentSliceBound(a.uStar, hp.kappaSlice));
            if (a.cStar > extensionCap_) {
                throw SamplerError("stick extension exceeded " + std::to_string(extensionCap_) + " components");
            }
            while (int(sticks.size()) < a.cStar) sticks.push(fresh());
        }
    }
    sticks.refreshPsi();
    ensureClusterSlots(a.cStar);
}

void Sampler::stepE_potential() {
    const bool adapting = state_.kernels.alpha.adaptationOn;
    for (int c = state_.alloc.zStar + 1; c <= state_.alloc.cStar; ++c) {
        drawPriorCluster(c);
        if (adapting) state_.kernels.resetTheta(c);
    }
}

void Sampler::stepF_globals() {
    updateBeta(state_, ctx_, rng_);
    updateTauY(state_, ctx_, rng_);
    updateExtraVariation(state_, ctx_, rng_);
    updateSelectors(state_, ctx_, rng_);
}

std::vector<double> Sampler::allocationLogWeights(int i) const {
    const int cStar = state_.alloc.cStar;
    std::vector<double> w(static_cast<std::size_t>(cStar), kNegInf);
    const auto variant = ctx_.hp.variant;
    for (int c = 1; c <= cStar; ++c) {
        double prior = 0.0;
        if (variant == SamplerVariant::Truncated) {
            prior = std::log(state_.sticks.psi[std::size_t(c - 1)]);
        } else {
            const double width = sliceWidth(c);
            if (!(width > state_.alloc.u[std::size_t(i)])) continue;
            if (variant == SamplerVariant::SliceIndependent) {
                prior = std::log(state_.sticks.psi[std::size_t(c - 1)]) - std::log(width);
            }
        }
        const auto cache = buildCovariateCache(state_.cluster(c), state_.globals, ctx_);
        w[std::size_t(c - 1)] = prior + covariateLogLik(i, cache, ctx_) +
                                individualResponseLogLik(i, state_.cluster(c).theta, state_, ctx_);
    }
    return w;
}

void Sampler::stepG_allocate() {
    const int cStar = state_.alloc.cStar;
    const auto variant = ctx_.hp.variant;
    std::vector<CovariateCache> caches;
    caches.reserve(std::size_t(cStar));
    std::vector<double> logPrior(static_cast<std::size_t>(cStar)), width(static_cast<std::size_t>(cStar));
    for (int c = 1; c <= cStar; ++c) {
        caches.push_back(buildCovariateCache(state_.cluster(c), state_.globals, ctx_));
        const double logPsi = std::log(state_.sticks.psi[std::size_t(c - 1)]);
        switch (variant) {
            case SamplerVariant::Truncated:
                logPrior[std::size_t(c - 1)] = logPsi;
                width[std::size_t(c - 1)] = 2.0;
                break;
            case SamplerVariant::SliceDependent:
                logPrior[std::size_t(c - 1)] = 0.0;
                width[std::size_t(c - 1)] = state_.sticks.psi[std::size_t(c - 1)];
                break;
            case SamplerVariant::SliceIndependent:
                width[std::size_t(c - 1)] = sliceXi(c, ctx_.hp.kappaSlice);
                logPrior[std::size_t(c - 1)] = logPsi - std::log(width[std::size_t(c - 1)]);
                break;
        }
    }
    const bool slice = isSlice(variant);
    std::vector<double> w(static_cast<std::size_t>(cStar));
    for (int i = 0; i < ctx_.n(); ++i) {
        const double ui = slice ? state_.alloc.u[std::size_t(i)] : 0.0;
        for (int c = 1; c <= cStar; ++c) {
            const auto k = std::size_t(c - 1);
            if (!(width[k] > ui)) {
                w[k] = kNegInf;
                continue;
            }
            w[k] = logPrior[k] + covariateLogLik(i, caches[k], ctx_) +
                   individualResponseLogLik(i, state_.cluster(c).theta, state_, ctx_);
        }
        const int pick = sampleFromLogWeights(w, rng_);
        if (pick < 0) {
            throw SamplerError("no component admits individual " + std::to_string(i + 1));
        }
        state_.alloc.z[std::size_t(i)] = pick + 1;
    }
    state_.refreshAllocationSummaries();
}

void Sampler::sweep() {
    if (!initialized_) initialize();
    const int index = sweepsDone_ + 1;
    auto step = [&](const char* label, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            throw SamplerError("sweep " + std::to_string(index) + ", step " + label + ": " + e.what());
        }
    };
    step("A", [&] { stepA(); });
    step("B.1", [&] { stepB1_sticks(); });
    step("B.2", [&] { stepB2_activeParams(); });
    step("B.3", [&] { stepB3_labelSwitch(); });
    step("B.4", [&] { stepB4_slice(); });
    step("C", [&] { stepC_bounds(); });
    step("D.1", [&] { stepD1_alpha(); });
    step("D.2", [&] { stepD2_extend(); });
    step("E", [&] { stepE_potential(); });
    step("F", [&] { stepF_globals(); });
    step("G", [&] { stepG_allocate(); });
    ++sweepsDone_;
    if (cfg_.checkInvariants) {
        // Sticks beyond C* are prior draws; a side stream keeps the chain unaffected.
        RngStream side = rng_.split(std::uint64_t(sweepsDone_));
        StickState ext = state_.sticks;
        ext.resize(std::size_t(state_.alloc.cStar));
        for (int k = 0; k < 10; ++k) ext.push(sampleBetaDraw(1.0, ext.alpha, side));
        lastInvariants_ =
            checkSliceInvariants(state_.alloc, ext.v, ctx_.hp.variant, ctx_.hp.kappaSlice, 10, ext.log1mv);
    }
    if (progress && cfg_.reportEvery > 0 && sweepsDone_ % cfg_.reportEvery == 0) progress(sweepsDone_, *this);
}

SweepRecord Sampler::makeRecord(int sweepIndex) const {
    SweepRecord r;
    const auto& a = state_.alloc;
    r.sweep = sweepIndex;
    r.z = a.z;
    r.alpha = state_.sticks.alpha;
    r.zStar = a.zStar;
    r.cStar = a.cStar;
    for (int nc : a.countsN) r.nNonEmpty += nc > 0 ? 1 : 0;
    for (int c = 1; c <= a.zStar; ++c) r.theta.push_back(state_.cluster(c).theta);
    r.beta = state_.globals.beta;
    r.rho = state_.globals.rho;
    r.zeta = state_.globals.zeta;
    if (ctx_.hp.varSelectType == VarSelectType::BinaryCluster) {
        for (int c = 1; c <= a.zStar; ++c) r.gamma.push_back(state_.cluster(c).gamma);
    }
    r.tauY = state_.globals.tauY;
    r.tauEps = state_.globals.tauEps;
    if (cfg_.computeMargModPost) r.logMargModPost = computeLogMargModPost(state_, ctx_);
    r.invariants = lastInvariants_;
    if (cfg_.keepClusterParams) {
        r.psi.assign(state_.sticks.psi.begin(), state_.sticks.psi.begin() + a.cStar);
        r.clusters.assign(state_.clusters.begin(), state_.clusters.begin() + a.cStar);
    }
    return r;
}

std::vector<SweepRecord> Sampler::run(SweepSink* sink, bool collect) {
    if (!initialized_) initialize();
    state_.kernels.setAdaptation(cfg_.nBurn > 0);
    for (int t = 0; t < cfg_.nBurn; ++t) sweep();
    state_.kernels.setAdaptation(false);
    std::vector<SweepRecord> archive;
    for (int s = 1; s <= cfg_.nSweeps; ++s) {
        sweep();
        if (sink == nullptr && !collect) continue;
        SweepRecord record = makeRecord(s);
        if (sink != nullptr) sink->onSweep(record, state_, ctx_);
        if (collect) archive.push_back(std::move(record));
    }
    return archive;
}

std::vector<SweepRecord> runChain(const Dataset& data, const HyperParams& hp, const SamplerConfig& cfg,
                                  SweepSink* sink) {
    Sampler sampler(data, hp, cfg);
    sampler.initialize();
    return sampler.run(sink);
}

}  // namespace profreg
