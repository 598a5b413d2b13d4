#pragma once

#include <string>
#include <vector>

#include "profreg/model.hpp"

namespace profreg {

/// Generator for simulated profile-regression data.
///
/// Covariate columns are laid out as: informative discrete, informative
/// continuous, noise discrete, noise continuous.
struct SyntheticSpec {
    int nSubjects = 1000;
    ResponseKind responseKind = ResponseKind::Bernoulli;
    std::vector<double> proportions;  // one per cluster, sums to 1

    // [cluster][informative discrete column][category]
    std::vector<std::vector<std::vector<double>>> profiles;
    // [cluster][informative continuous column]
    std::vector<std::vector<double>> contMeans;
    double contSd = 1.0;

    // Cluster-independent category probabilities, one entry per noise column.
    std::vector<std::vector<double>> noiseProfiles;
    int nNoiseContinuous = 0;

    std::vector<std::vector<double>> theta;  // [cluster][response dim]
    std::vector<double> beta;                // fixed effects, W ~ N(0, 1); first response dim only
    double sigmaY = 1.0;                     // Normal response
    int trials = 10;                         // Binomial response
    double offset = 1.0;                     // Poisson exposure

    int nClusters() const { return int(proportions.size()); }
    /// Throws ConfigError.
    void validate() const;
};

struct SyntheticData {
    Dataset data;
    std::vector<int> truth;  // 1-based cluster labels
};

/// Cluster sizes by largest remainder of proportion * n (ties go to the lower cluster).
std::vector<int> balancedSizes(const std::vector<double>& proportions, int n);

SyntheticData generateSampleData(const SyntheticSpec& spec, RngStream& rng);

/// Built-in presets: "bernoulliDiscrete" and "varSelectBernoulliDiscrete".
SyntheticSpec presetSpec(const std::string& name, int nSubjects);
std::vector<std::string> presetNames();

/// key=value spec file. Keys: n, response, clusters, proportions, categories,
/// profile.<c>, categoryProbs.<c>.<j>, contMean.<c>, contSd, noise, noiseProb,
/// noiseContinuous, theta.<c>, risk.<c>, beta, sigmaY, trials, offset.
SyntheticSpec loadSyntheticSpec(const std::string& path);

}  // namespace profreg
