#include "profreg/rand_dist.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "profreg/errors.hpp"

namespace profreg {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

void requirePositive(double v, const char* what) {
    if (!(v > 0) || !std::isfinite(v)) {
        throw ParameterDomainError(std::string(what) + " must be positive and finite, got " +
                                   std::to_string(v));
    }
}

Eigen::LLT<Eigen::MatrixXd> choleskyOrThrow(const Eigen::MatrixXd& m, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success || !m.allFinite()) {
        throw NotPositiveDefiniteError(std::string(what) + " is not positive definite");
    }
    return llt;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& word : s_) {
        word = splitmix64(x);
    }
}

std::uint64_t RngStream::nextU64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::uniform() {
    // 53 random bits, shifted by half an ulp so 0 is unreachable.
    return (double(nextU64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
    if (hasSpare_) {
        hasSpare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    hasSpare_ = true;
    return u * f;
}

RngStream RngStream::split(std::uint64_t streamId) const {
    std::uint64_t x = seed_ ^ (0xd1b54a32d192ed03ULL * (streamId + 1));
    return RngStream(splitmix64(x));
}

double logSumExp(std::span<const double> v) {
    double m = kNegInf;
    for (double x : v) {
        m = std::max(m, x);
    }
    if (m == kNegInf) {
        return kNegInf;
    }
    double s = 0;
    for (double x : v) {
        s += std::exp(x - m);
    }
    return m + std::log(s);
}

double sampleLogGamma(double shape, RngStream& rng) {
    requirePositive(shape, "gamma shape");
    if (shape < 1.0) {
        // G(a) = G(a + 1) * U^{1/a}, kept on the log scale.
        return sampleLogGamma(shape + 1.0, rng) + std::log(rng.uniform()) / shape;
    }
    // Marsaglia-Tsang squeeze/rejection.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) {
            return std::log(d * v);
        }
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
            return std::log(d * v);
        }
    }
}

double sampleGamma(double shape, double rate, RngStream& rng) {
    requirePositive(shape, "gamma shape");
    requirePositive(rate, "gamma rate");
    const double g = std::exp(sampleLogGamma(shape, rng)) / rate;
    return std::max(g, std::numeric_limits<double>::min());
}

double sampleBeta(double a, double b, RngStream& rng) {
    requirePositive(a, "beta a");
    requirePositive(b, "beta b");
    const double la = sampleLogGamma(a, rng);
    const double lb = sampleLogGamma(b, rng);
    const double x = 1.0 / (1.0 + std::exp(lb - la));
    return std::clamp(x, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
}

BetaDraw sampleBetaDraw(double a, double b, RngStream& rng) {
    requirePositive(a, "beta a");
    requirePositive(b, "beta b");
    const double la = sampleLogGamma(a, rng);
    const double lb = sampleLogGamma(b, rng);
    const double m = std::max(la, lb);
    const double norm = m + std::log(std::exp(la - m) + std::exp(lb - m));
    return {std::exp(la - norm), la - norm, lb - norm};
}

Eigen::VectorXd sampleDirichlet(const Eigen::VectorXd& a, RngStream& rng) {
    const Eigen::Index k = a.size();
    if (k < 2) {
        throw ParameterDomainError("Dirichlet needs at least two components");
    }
    Eigen::VectorXd logg(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        requirePositive(a[i], "Dirichlet concentration");
        logg[i] = sampleLogGamma(a[i], rng);
    }
    const double norm = logSumExp(std::span<const double>(logg.data(), std::size_t(k)));
    Eigen::VectorXd p(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        p[i] = std::max(std::exp(logg[i] - norm), std::numeric_limits<double>::min());
    }
    return p / p.sum();
}

Eigen::VectorXd sampleMVNormal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                               RngStream& rng) {
    const auto llt = choleskyOrThrow(cov, "normal covariance");
    Eigen::VectorXd z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = rng.normal();
    }
    return mean + llt.matrixL() * z;
}

Eigen::VectorXd sampleMVNormalCanonical(const Eigen::MatrixXd& precision, const Eigen::VectorXd& b,
                                        RngStream& rng) {
    const auto llt = choleskyOrThrow(precision, "normal precision");
    const Eigen::VectorXd mean = llt.solve(b);
    Eigen::VectorXd z(b.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = rng.normal();
    }
    // Q = L L^T, so L^{-T} z has covariance Q^{-1}.
    return mean + llt.matrixU().solve(z);
}

Eigen::MatrixXd sampleWishart(const Eigen::MatrixXd& scale, double dof, RngStream& rng) {
    const Eigen::Index dim = scale.rows();
    if (!(dof > double(dim) - 1.0)) {
        throw ParameterDomainError("Wishart degrees of freedom must exceed dimension - 1");
    }
    const auto llt = choleskyOrThrow(scale, "Wishart scale");
    // Bartlett decomposition.
    Eigen::MatrixXd bartlett = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        bartlett(i, i) = std::sqrt(2.0 * sampleGamma(0.5 * (dof - double(i)), 1.0, rng));
        for (Eigen::Index j = 0; j < i; ++j) {
            bartlett(i, j) = rng.normal();
        }
    }
    const Eigen::MatrixXd la = llt.matrixL() * bartlett;
    Eigen::MatrixXd w = la * la.transpose();
    return 0.5 * (w + w.transpose());
}

Eigen::MatrixXd sampleInvWishart(const Eigen::MatrixXd& scale, double dof, RngStream& rng) {
    const Eigen::MatrixXd w = sampleWishart(scale, dof, rng);
    const auto llt = choleskyOrThrow(w, "Wishart draw");
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(w.rows(), w.cols()));
    return 0.5 * (inv + inv.transpose());
}

double sampleTLocScale(double mu, double sigma, double nu, RngStream& rng) {
    requirePositive(sigma, "t scale");
    requirePositive(nu, "t degrees of freedom");
    const double chi2 = 2.0 * sampleGamma(0.5 * nu, 1.0, rng);
    return mu + sigma * rng.normal() / std::sqrt(chi2 / nu);
}

int sampleFromLogWeights(std::span<const double> logWeights, RngStream& rng) {
    const double norm = logSumExp(logWeights);
    if (norm == kNegInf || std::isnan(norm)) {
        return -1;
    }
    double u = rng.uniform();
    int last = -1;
    for (std::size_t k = 0; k < logWeights.size(); ++k) {
        if (logWeights[k] == kNegInf) {
            continue;
        }
        last = int(k);
        u -= std::exp(logWeights[k] - norm);
        if (u <= 0) {
            return int(k);
        }
    }
    return last;
}

double logTLocScale(double x, double mu, double sigma, double nu) {
    requirePositive(sigma, "t scale");
    requirePositive(nu, "t degrees of freedom");
    const double z = (x - mu) / sigma;
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * M_PI) -
           std::log(sigma) - 0.5 * (nu + 1.0) * std::log1p(z * z / nu);
}

double logNormalDensity(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * kLog2Pi - std::log(sd) - 0.5 * z * z;
}

double logGammaDensity(double x, double shape, double rate) {
    if (!(x > 0)) {
        return kNegInf;
    }
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double logBetaDensity(double x, double a, double b) {
    if (!(x > 0 && x < 1)) {
        return kNegInf;
    }
    return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) +
           (b - 1.0) * std::log1p(-x);
}

void adaptKernel(AdaptiveKernelState& kernel, bool accepted) {
    ++kernel.proposeCount;
    if (accepted) {
        ++kernel.acceptCount;
    }
    if (kernel.adaptationOn) {
        const double block = std::ceil(double(kernel.proposeCount) / 50.0);
        const double gain = 1.0 / std::pow(block, 0.75);
        kernel.logStepSize += gain * ((accepted ? 1.0 : 0.0) - kernel.targetRate);
    }
}

}  // namespace profreg
