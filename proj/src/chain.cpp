#include "profreg/chain.hpp"

#include "profreg/errors.hpp"

namespace profreg {

NullProfile computeNullProfile(const Dataset& data) {
    NullProfile null;
    for (int j : data.discreteColumns()) {
        const int k = data.nCategories[std::size_t(j)];
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
        for (int i = 0; i < data.n(); ++i) {
            if (!data.isMissing(i, j)) counts[Eigen::Index(data.x(i, j))] += 1.0;
        }
        // Categories never observed keep a sliver of mass so log phi0 stays finite.
        counts.array() += 1e-6;
        null.phi0.push_back(counts / counts.sum());
    }
    const auto cont = data.continuousColumns();
    null.xbar = Eigen::VectorXd::Zero(Eigen::Index(cont.size()));
    for (std::size_t k = 0; k < cont.size(); ++k) {
        double sum = 0;
        int count = 0;
        for (int i = 0; i < data.n(); ++i) {
            if (data.isMissing(i, cont[k])) continue;
            sum += data.x(i, cont[k]);
            ++count;
        }
        null.xbar[Eigen::Index(k)] = count > 0 ? sum / count : 0.0;
    }
    return null;
}

ModelContext::ModelContext(const Dataset& dataset, const HyperParams& hyper)
    : data(dataset),
      hp(resolveDataDefaults(hyper, dataset)),
      discCols(dataset.discreteColumns()),
      contCols(dataset.continuousColumns()),
      nullProfile(computeNullProfile(dataset)) {
    data.validate();
    hp.validate(nCont());
    if (hp.responseExtraVariation &&
        !(data.responseKind == ResponseKind::Bernoulli || data.responseKind == ResponseKind::Binomial ||
          data.responseKind == ResponseKind::Poisson)) {
        throw ConfigError("extra variation requires a Bernoulli, Binomial or Poisson response");
    }
    if (nCont() > 0) {
        const auto jc = Eigen::Index(nCont());
        const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(jc, jc);
        sigma0Inv = hp.Sigma0.llt().solve(id);
        sigma0InvMu0 = sigma0Inv * hp.mu0;
        r0Inv = hp.R0.llt().solve(id);
    }
    switch (data.responseKind) {
        case ResponseKind::None:
            responseDim = 0;
            break;
        case ResponseKind::Categorical:
            responseDim = data.nResponseCategories - 1;
            break;
        default:
            responseDim = 1;
    }
}

AdaptiveKernelState& KernelBank::thetaKernel(int label, int r, int dim) {
    if (theta.size() < std::size_t(label)) {
        theta.resize(std::size_t(label), std::vector<AdaptiveKernelState>(std::size_t(dim)));
        for (auto& ks : theta) {
            for (auto& k : ks) k.adaptationOn = alpha.adaptationOn;
        }
    }
    return theta[std::size_t(label - 1)][std::size_t(r)];
}

void KernelBank::resetTheta(int label) {
    if (theta.size() < std::size_t(label)) return;
    for (auto& k : theta[std::size_t(label - 1)]) {
        const bool on = k.adaptationOn;
        k = AdaptiveKernelState{};
        k.adaptationOn = on;
    }
}

void KernelBank::setAdaptation(bool on) {
    for (auto& ks : theta) {
        for (auto& k : ks) k.adaptationOn = on;
    }
    for (auto* group : {&beta, &lambda, &rho, &phiSoft}) {
        for (auto& k : *group) k.adaptationOn = on;
    }
    alpha.adaptationOn = on;
}

void ChainState::refreshAllocationSummaries() {
    const ClusterCounts counts = refreshCounts(alloc.z);
    alloc.countsN = counts.n;
    alloc.countsNPlus = counts.nPlus;
    alloc.zStar = int(counts.n.size());
    members.assign(std::max(members.size(), counts.n.size()), {});
    for (auto& m : members) m.clear();
    for (std::size_t i = 0; i < alloc.z.size(); ++i) {
        members[std::size_t(alloc.z[i] - 1)].push_back(int(i));
    }
    alloc.uStar = 1.0;
    for (double u : alloc.u) alloc.uStar = std::min(alloc.uStar, u);
}

void ChainState::refreshWBeta(const ModelContext& ctx) {
    if (!ctx.hasResponse()) {
        wBeta.resize(ctx.n(), 0);
        return;
    }
    if (ctx.nFixed() == 0) {
        wBeta = Eigen::MatrixXd::Zero(ctx.n(), ctx.responseDim);
        return;
    }
    wBeta = ctx.data.w * globals.beta.transpose();
}

}  // namespace profreg
