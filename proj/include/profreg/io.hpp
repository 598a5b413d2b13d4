#pragma once

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "profreg/model.hpp"
#include "profreg/postprocess.hpp"
#include "profreg/sampler.hpp"

namespace profreg {

/// Which columns of a data file play which role.
struct DataRoles {
    std::string outcome;
    ResponseKind responseKind = ResponseKind::None;
    std::vector<std::string> covariates;
    std::vector<CovariateKind> kinds;
    std::vector<int> nCategories;  // per covariate; 0 infers max + 1 from the data
    int nResponseCategories = 0;   // 0 infers max + 1
    std::vector<std::string> fixedEffects;
    std::string trials;
    std::string offset;
};

/// Delimited text (tab or comma, detected from the header) with "NA" as the
/// only missing token. NA is accepted in covariate columns only.
Dataset loadDataset(const std::string& path, const DataRoles& roles);
/// Comma-delimited file readable by loadDataset with rolesFor(data).
void writeDataset(const std::string& path, const Dataset& data);
DataRoles rolesFor(const Dataset& data);

/// Shortest round-trip rendering ("%.17g").
std::string formatDouble(double v);

/// Everything a run needs.
struct RunConfig {
    std::string dataPath;
    DataRoles roles;
    HyperParams hp;
    SamplerConfig sampler;
    std::string output = "output";
    std::string predictPath;
    PredictMode predictMode = PredictMode::RandomAllocation;
    bool postprocess = true;
    int kMax = 0;
    std::vector<double> levels{0.05, 0.5, 0.95};
};

/// Apply one key=value setting; unknown keys raise ConfigError.
void applyConfigEntry(RunConfig& cfg, const std::string& key, const std::string& value);
/// Flat key=value file; '#' starts a comment. Relative data/predict paths are
/// resolved against the file's directory.
RunConfig loadRunConfig(const std::string& path);
/// Copy sampler settings that live in HyperParams into SamplerConfig.
void syncSamplerConfig(RunConfig& cfg);
/// Prefix of output files: cfg.output, placed under $PROFREG_OUTPUT_DIR when relative.
std::string outputPrefix(const RunConfig& cfg);

/// Appends one line per archived sweep to the output file set, flushing every line.
class OutputWriter : public SweepSink {
public:
    OutputWriter(const std::string& prefix, const ModelContext& ctx);
    ~OutputWriter() override;
    OutputWriter(const OutputWriter&) = delete;
    OutputWriter& operator=(const OutputWriter&) = delete;

    void onSweep(const SweepRecord& record, const ChainState& state, const ModelContext& ctx) override;
    const SimilarityAccumulator& similarity() const { return similarity_; }
    std::vector<std::string> files() const;

private:
    std::FILE* open(const std::string& suffix);
    std::string prefix_;
    std::map<std::string, std::FILE*> files_;
    SimilarityAccumulator similarity_;
};

std::vector<std::vector<int>> readAllocations(const std::string& path);
std::vector<double> readScalarColumn(const std::string& path);
/// Rebuild per-sweep parameters from the files written by OutputWriter.
std::vector<SweepParams> readSweepParams(const std::string& prefix, const ModelContext& ctx);

/// Scenario file: header with covariate names (and optionally fixed-effect
/// names and the offset column), one scenario per row, NA for missing.
std::vector<PredictionScenario> loadScenarios(const std::string& path, const DataRoles& roles,
                                              const ModelContext& ctx);

void writeMatrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd readMatrix(const std::string& path);
void writePartition(const std::string& path, const Partition& part);
void writeRiskProfile(const std::string& path, const RiskProfile& profile, const ModelContext& ctx);
void writePredictions(const std::string& path, const PredictionResult& result, PredictMode mode);

}  // namespace profreg
