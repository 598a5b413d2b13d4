#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "profreg/errors.hpp"
#include "profreg/io.hpp"
#include "profreg/postprocess.hpp"
#include "profreg/sampler.hpp"
#include "profreg/synthetic.hpp"

using namespace profreg;

namespace {

struct ConfigArgs {
    std::string configPath;
    std::vector<std::string> sets;
    std::string data, output;
    std::string seed, nSweeps, nBurn, nClusInit;
};

void addConfigOptions(CLI::App* cmd, ConfigArgs& a, bool runFlags) {
    cmd->add_option("-c,--config", a.configPath, "key=value configuration file");
    cmd->add_option("--set", a.sets, "override one setting, key=value (repeatable)");
    cmd->add_option("--data", a.data, "data file");
    cmd->add_option("--output", a.output, "output prefix");
    if (runFlags) {
        cmd->add_option("--seed", a.seed, "random seed");
        cmd->add_option("--nSweeps", a.nSweeps, "archived sweeps");
        cmd->add_option("--nBurn", a.nBurn, "burn-in sweeps");
        cmd->add_option("--nClusInit", a.nClusInit, "initial number of clusters");
    }
}

RunConfig buildConfig(const ConfigArgs& a) {
    RunConfig cfg = a.configPath.empty() ? RunConfig{} : loadRunConfig(a.configPath);
    auto apply = [&](const std::string& key, const std::string& value) {
        if (!value.empty()) applyConfigEntry(cfg, key, value);
    };
    apply("data", a.data);
    apply("output", a.output);
    apply("seed", a.seed);
    apply("nSweeps", a.nSweeps);
    apply("nBurn", a.nBurn);
    apply("nClusInit", a.nClusInit);
    for (const auto& s : a.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        applyConfigEntry(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    syncSamplerConfig(cfg);
    if (cfg.dataPath.empty()) throw ConfigError("no data file given");
    return cfg;
}

void runPostprocess(const RunConfig& cfg, const ModelContext& ctx, const std::string& prefix,
                    const Eigen::MatrixXd* similarity) {
    const auto archive = readAllocations(prefix + "_z.txt");
    if (archive.empty()) throw Error("no archived sweeps under '" + prefix + "'");
    const Eigen::MatrixXd s = similarity != nullptr ? *similarity : buildSimilarity(archive);
    writeMatrix(prefix + "_similarity.txt", s);
    const Partition part = pamOptimalPartition(s, cfg.kMax);
    writePartition(prefix + "_optimalPartition.txt", part);
    const auto sweeps = readSweepParams(prefix, ctx);
    writeRiskProfile(prefix + "_riskProfile.txt", riskProfiles(sweeps, part, ctx, cfg.levels), ctx);
    std::cerr << "partition: k=" << part.k << " silhouette=" << part.score << '\n';
}

void runPredict(const RunConfig& cfg, const ModelContext& ctx, const std::string& prefix, PredictMode mode) {
    const auto scenarios = loadScenarios(cfg.predictPath, cfg.roles, ctx);
    const auto sweeps = readSweepParams(prefix, ctx);
    RngStream rng = RngStream(cfg.hp.seed).split(0x9e3779b9ULL);
    const auto result = predict(sweeps, scenarios, ctx, mode, rng);
    writePredictions(prefix + "_predictions.txt", result, mode);
    for (std::size_t s = 0; s < result.mean.size(); ++s) {
        std::cout << "scenario " << s + 1 << " mean";
        for (Eigen::Index c = 0; c < result.mean[s].size(); ++c) std::cout << ' ' << formatDouble(result.mean[s][c]);
        std::cout << '\n';
    }
}

int cmdRun(const ConfigArgs& a) {
    RunConfig cfg = buildConfig(a);
    const Dataset data = loadDataset(cfg.dataPath, cfg.roles);
    const std::string prefix = outputPrefix(cfg);
    const auto start = std::chrono::steady_clock::now();

    Sampler sampler(data, cfg.hp, cfg.sampler);
    OutputWriter writer(prefix, sampler.context());
    if (cfg.sampler.reportEvery > 0) {
        sampler.progress = [&](int sweep, const Sampler& s) {
            std::cerr << "sweep " << sweep << " clusters " << s.state().alloc.zStar << " alpha "
                      << s.state().sticks.alpha << '\n';
        };
    }
    sampler.initialize();
    sampler.run(&writer, false);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    nlohmann::json info;
    info["data"] = cfg.dataPath;
    info["n"] = data.n();
    info["seed"] = cfg.hp.seed;
    info["nSweeps"] = cfg.hp.nSweeps;
    info["nBurn"] = cfg.hp.nBurn;
    info["sampler"] = toString(cfg.hp.variant);
    info["yModel"] = toString(data.responseKind);
    info["varSelectType"] = toString(cfg.hp.varSelectType);
    const auto& ls = sampler.labelSwitchStats();
    for (int m = 0; m < 3; ++m) {
        info["labelSwitch"]["move" + std::to_string(m + 1)] = {{"proposed", ls.proposed[std::size_t(m)]},
                                                               {"accepted", ls.accepted[std::size_t(m)]}};
    }
    // Names only, so the file does not depend on where the run was written.
    std::vector<std::string> names;
    for (const auto& f : writer.files()) names.push_back(std::filesystem::path(f).filename().string());
    info["files"] = names;
    std::ofstream(prefix + "_runInfo.json") << info.dump(2) << '\n';

    if (cfg.postprocess) {
        const Eigen::MatrixXd s = writer.similarity().matrix();
        runPostprocess(cfg, sampler.context(), prefix, &s);
    }
    if (!cfg.predictPath.empty()) runPredict(cfg, sampler.context(), prefix, cfg.predictMode);
    std::cerr << "done in " << seconds << " s, output prefix " << prefix << '\n';
    return 0;
}

int cmdPostprocess(const ConfigArgs& a) {
    const RunConfig cfg = buildConfig(a);
    const Dataset data = loadDataset(cfg.dataPath, cfg.roles);
    const ModelContext ctx(data, cfg.hp);
    runPostprocess(cfg, ctx, outputPrefix(cfg), nullptr);
    return 0;
}

int cmdPredict(const ConfigArgs& a, const std::string& scenarios, const std::string& mode) {
    RunConfig cfg = buildConfig(a);
    if (!scenarios.empty()) cfg.predictPath = scenarios;
    if (!mode.empty()) cfg.predictMode = parsePredictMode(mode);
    if (cfg.predictPath.empty()) throw ConfigError("no scenario file given");
    const Dataset data = loadDataset(cfg.dataPath, cfg.roles);
    const ModelContext ctx(data, cfg.hp);
    runPredict(cfg, ctx, outputPrefix(cfg), cfg.predictMode);
    return 0;
}

int cmdGenerate(const std::string& preset, const std::string& specPath, int n, std::uint64_t seed,
                const std::string& out) {
    SyntheticSpec spec;
    if (!specPath.empty()) {
        spec = loadSyntheticSpec(specPath);
        if (n > 0) spec.nSubjects = n;
    } else {
        spec = presetSpec(preset, n > 0 ? n : 1000);
    }
    RngStream rng(seed);
    const SyntheticData sd = generateSampleData(spec, rng);
    writeDataset(out, sd.data);
    {
        std::ofstream truth(out + ".truth.txt");
        for (int z : sd.truth) truth << z << '\n';
    }
    const DataRoles roles = rolesFor(sd.data);
    std::ofstream cfg(out + ".cfg");
    cfg << "data = " << std::filesystem::path(out).filename().string() << '\n';
    if (sd.data.responseKind != ResponseKind::None) {
        cfg << "outcome = " << roles.outcome << "\nyModel = " << toString(sd.data.responseKind) << '\n';
    }
    cfg << "covariates = ";
    for (std::size_t j = 0; j < roles.covariates.size(); ++j) cfg << (j ? "," : "") << roles.covariates[j];
    cfg << '\n';
    std::vector<std::string> cont;
    for (std::size_t j = 0; j < roles.kinds.size(); ++j) {
        if (roles.kinds[j] == CovariateKind::Continuous) cont.push_back(roles.covariates[j]);
    }
    if (cont.size() == roles.covariates.size()) {
        cfg << "xModel = Normal\n";
    } else if (!cont.empty()) {
        cfg << "continuousCovariates = ";
        for (std::size_t j = 0; j < cont.size(); ++j) cfg << (j ? "," : "") << cont[j];
        cfg << '\n';
    }
    if (!roles.fixedEffects.empty()) {
        cfg << "fixedEffects = ";
        for (std::size_t l = 0; l < roles.fixedEffects.size(); ++l) cfg << (l ? "," : "") << roles.fixedEffects[l];
        cfg << '\n';
    }
    if (!roles.trials.empty()) cfg << "trials = " << roles.trials << '\n';
    if (!roles.offset.empty()) cfg << "offset = " << roles.offset << '\n';
    cfg << "output = " << std::filesystem::path(out).stem().string() << "_run\n";
    std::cerr << "wrote " << out << " (" << sd.data.n() << " subjects)\n";
    return 0;
}

double median(std::vector<double> v) { return empiricalQuantile(std::move(v), 0.5); }
double iqr(const std::vector<double>& v) { return empiricalQuantile(v, 0.75) - empiricalQuantile(v, 0.25); }

int cmdMargModPost(const std::vector<std::string>& prefixes, int burn) {
    std::vector<std::vector<double>> scores;
    std::printf("%-30s %8s %14s %12s\n", "run", "sweeps", "median", "IQR");
    for (const auto& p : prefixes) {
        auto v = readScalarColumn(p + "_margModPost.txt");
        if (int(v.size()) <= burn) throw Error("'" + p + "' has no values after the first " + std::to_string(burn));
        v.erase(v.begin(), v.begin() + burn);
        std::printf("%-30s %8zu %14.4f %12.4f\n", p.c_str(), v.size(), median(v), iqr(v));
        scores.push_back(std::move(v));
    }
    bool stable = true;
    for (std::size_t a = 0; a < scores.size(); ++a) {
        for (std::size_t b = a + 1; b < scores.size(); ++b) {
            const double diff = std::abs(median(scores[a]) - median(scores[b]));
            std::vector<double> pooled = scores[a];
            pooled.insert(pooled.end(), scores[b].begin(), scores[b].end());
            const double bound = 2.0 * iqr(pooled);
            const bool ok = diff < bound;
            stable = stable && ok;
            std::printf("%zu vs %zu: |median diff| %.4f, 2 x IQR %.4f %s\n", a + 1, b + 1, diff, bound,
                        ok ? "ok" : "DIFFERENT");
        }
    }
    std::printf("overall: %s\n", stable ? "stable" : "not stable");
    return stable ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian profile regression"};
    app.require_subcommand(1);

    ConfigArgs runArgs, postArgs, predArgs;
    auto* run = app.add_subcommand("run", "run the sampler, then postprocess");
    addConfigOptions(run, runArgs, true);

    auto* post = app.add_subcommand("postprocess", "similarity matrix, partition and risk profiles from a finished run");
    addConfigOptions(post, postArgs, false);

    std::string scenarios, mode;
    auto* pred = app.add_subcommand("predict", "predictions for scenario profiles from a finished run");
    addConfigOptions(pred, predArgs, false);
    pred->add_option("--scenarios", scenarios, "scenario file");
    pred->add_option("--mode", mode, "RandomAllocation or RaoBlackwell");

    std::string preset = "varSelectBernoulliDiscrete", specPath, out;
    int n = 0;
    std::uint64_t seed = 1;
    auto* gen = app.add_subcommand("generate", "write a simulated data set");
    gen->add_option("--preset", preset, "built-in generator preset");
    gen->add_option("--spec", specPath, "key=value generator spec file");
    gen->add_option("--n", n, "number of subjects");
    gen->add_option("--seed", seed, "random seed");
    gen->add_option("--out", out, "output data file")->required();

    std::vector<std::string> prefixes;
    int burn = 0;
    auto* mmp = app.add_subcommand("margmodpost", "compare marginal model posterior traces across runs");
    mmp->add_option("prefixes", prefixes, "output prefixes")->required();
    mmp->add_option("--burn", burn, "leading values to drop from each trace");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmdRun(runArgs);
        if (*post) return cmdPostprocess(postArgs);
        if (*pred) return cmdPredict(predArgs, scenarios, mode);
        if (*gen) return cmdGenerate(preset, specPath, n, seed, out);
        if (*mmp) return cmdMargModPost(prefixes, burn);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
