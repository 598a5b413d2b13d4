#include "profreg/io.hpp"

#include <algorithm>
#include <cmath>
#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "profreg/errors.hpp"

namespace profreg {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    std::string out = s.substr(b, e - b + 1);
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, delim)) out.push_back(trim(field));
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

std::vector<std::string> splitList(const std::string& value) {
    std::vector<std::string> out;
    for (auto& item : split(value, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

bool parseDouble(const std::string& s, double& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && errno == 0;
}

double toDouble(const std::string& s, const std::string& what) {
    double v = 0;
    if (!parseDouble(s, v)) throw ConfigError("cannot parse '" + s + "' as a number for " + what);
    return v;
}

int toInt(const std::string& s, const std::string& what) {
    const double v = toDouble(s, what);
    if (v != std::floor(v)) throw ConfigError("expected an integer for " + what + ", got '" + s + "'");
    return int(v);
}

bool toBool(const std::string& s, const std::string& what) {
    if (s == "true" || s == "1" || s == "TRUE" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "FALSE" || s == "no") return false;
    throw ConfigError("expected true/false for " + what + ", got '" + s + "'");
}

std::vector<double> toDoubles(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const auto& item : splitList(s)) out.push_back(toDouble(item, what));
    return out;
}

Eigen::MatrixXd toMatrix(const std::string& s, const std::string& what) {
    const auto v = toDoubles(s, what);
    const auto n = Eigen::Index(std::llround(std::sqrt(double(v.size()))));
    if (n * n == Eigen::Index(v.size()) && v.size() > 1) {
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) m(i, j) = v[std::size_t(i * n + j)];
        }
        // A J-vector with J a perfect square is ambiguous; full matrices must be symmetric.
        if (m.isApprox(m.transpose())) return m;
    }
    Eigen::VectorXd d(Eigen::Index(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) d[Eigen::Index(i)] = v[i];
    return d.asDiagonal();
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> lines;
};

Table readTable(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file '" + path + "'");
    Table t;
    std::string line;
    int lineNo = 0;
    char delim = ',';
    while (std::getline(in, line)) {
        ++lineNo;
        if (trim(line).empty()) continue;
        if (t.header.empty()) {
            if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line = line.substr(3);
            delim = line.find('\t') != std::string::npos ? '\t' : ',';
            t.header = split(line, delim);
            continue;
        }
        auto fields = split(line, delim);
        if (fields.size() != t.header.size()) {
            throw DataError(path + ":" + std::to_string(lineNo) + ": expected " + std::to_string(t.header.size()) +
                            " fields, found " + std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
        t.lines.push_back(lineNo);
    }
    if (t.header.empty()) throw DataError("data file '" + path + "' is empty");
    return t;
}

int columnIndex(const Table& t, const std::string& name, const std::string& path) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) throw DataError("column '" + name + "' not found in '" + path + "'");
    return int(it - t.header.begin());
}

std::string cell(const Table& t, std::size_t row, int col, const std::string& path) {
    (void)path;
    return t.rows[row][std::size_t(col)];
}

}  // namespace

std::string formatDouble(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Dataset loadDataset(const std::string& path, const DataRoles& roles) {
    const Table t = readTable(path);
    Dataset d;
    const auto n = Eigen::Index(t.rows.size());
    const auto J = Eigen::Index(roles.covariates.size());
    if (roles.kinds.size() != roles.covariates.size()) {
        throw ConfigError("every covariate needs a kind");
    }
    auto where = [&](std::size_t row, int col) {
        return path + ":" + std::to_string(t.lines[row]) + ", column '" + t.header[std::size_t(col)] + "'";
    };
    auto number = [&](std::size_t row, int col) {
        const std::string s = cell(t, row, col, path);
        double v = 0;
        if (s == "NA") throw DataError("missing value not allowed at " + where(row, col));
        if (!parseDouble(s, v)) throw DataError("non-numeric value '" + s + "' at " + where(row, col));
        return v;
    };

    d.responseKind = roles.responseKind;
    d.x.resize(n, J);
    d.kinds = roles.kinds;
    d.covariateNames = roles.covariates;
    d.missing.assign(std::size_t(n * J), 0);
    for (Eigen::Index j = 0; j < J; ++j) {
        const int col = columnIndex(t, roles.covariates[std::size_t(j)], path);
        for (Eigen::Index i = 0; i < n; ++i) {
            const std::string s = cell(t, std::size_t(i), col, path);
            if (s == "NA") {
                d.missing[std::size_t(i * J + j)] = 1;
                d.x(i, j) = 0.0;
                continue;
            }
            double v = 0;
            if (!parseDouble(s, v)) throw DataError("non-numeric value '" + s + "' at " + where(std::size_t(i), col));
            d.x(i, j) = v;
        }
    }
    if (std::none_of(d.missing.begin(), d.missing.end(), [](std::uint8_t m) { return m != 0; })) d.missing.clear();
    d.nCategories.assign(std::size_t(J), 0);
    for (Eigen::Index j = 0; j < J; ++j) {
        if (d.kinds[std::size_t(j)] != CovariateKind::Discrete) continue;
        int k = roles.nCategories.size() == std::size_t(J) ? roles.nCategories[std::size_t(j)] : 0;
        if (k <= 0) {
            double mx = 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!d.isMissing(int(i), int(j))) mx = std::max(mx, d.x(i, j));
            }
            k = int(mx) + 1;
        }
        d.nCategories[std::size_t(j)] = k;
        const int col = columnIndex(t, roles.covariates[std::size_t(j)], path);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = d.x(i, j);
            if (d.isMissing(int(i), int(j)) || (v >= 0 && v < k && v == std::floor(v))) continue;
            throw DataError("category " + cell(t, std::size_t(i), col, path) + " out of range [0, " +
                            std::to_string(k) + ") at " + where(std::size_t(i), col));
        }
    }

    d.fixedEffectNames = roles.fixedEffects;
    d.w.resize(n, Eigen::Index(roles.fixedEffects.size()));
    for (std::size_t l = 0; l < roles.fixedEffects.size(); ++l) {
        const int col = columnIndex(t, roles.fixedEffects[l], path);
        for (Eigen::Index i = 0; i < n; ++i) d.w(i, Eigen::Index(l)) = number(std::size_t(i), col);
    }

    if (roles.responseKind != ResponseKind::None) {
        d.outcomeName = roles.outcome;
        const int col = columnIndex(t, roles.outcome, path);
        for (Eigen::Index i = 0; i < n; ++i) d.y.push_back(number(std::size_t(i), col));
        if (roles.responseKind == ResponseKind::Binomial) {
            if (roles.trials.empty()) throw ConfigError("Binomial response needs a trials column");
            const int tc = columnIndex(t, roles.trials, path);
            for (Eigen::Index i = 0; i < n; ++i) d.trials.push_back(int(number(std::size_t(i), tc)));
        }
        if (roles.responseKind == ResponseKind::Poisson) {
            if (roles.offset.empty()) throw ConfigError("Poisson response needs an offset column");
            const int oc = columnIndex(t, roles.offset, path);
            for (Eigen::Index i = 0; i < n; ++i) d.offset.push_back(number(std::size_t(i), oc));
        }
        if (roles.responseKind == ResponseKind::Categorical) {
            int r = roles.nResponseCategories;
            if (r <= 0) {
                double mx = 1;
                for (double y : d.y) mx = std::max(mx, y);
                r = int(mx) + 1;
            }
            d.nResponseCategories = r;
        }
    }
    try {
        d.validate();
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
    return d;
}

DataRoles rolesFor(const Dataset& data) {
    DataRoles r;
    r.responseKind = data.responseKind;
    r.outcome = data.outcomeName;
    r.kinds = data.kinds;
    r.nCategories = data.nCategories;
    r.nResponseCategories = data.nResponseCategories;
    r.fixedEffects = data.fixedEffectNames;
    for (int j = 0; j < data.nCovariates(); ++j) {
        r.covariates.push_back(std::size_t(j) < data.covariateNames.size() ? data.covariateNames[std::size_t(j)]
                                                                           : "x" + std::to_string(j + 1));
    }
    for (int l = int(r.fixedEffects.size()); l < data.nFixedEffects(); ++l) r.fixedEffects.push_back("w" + std::to_string(l + 1));
    if (!data.trials.empty()) r.trials = "trials";
    if (!data.offset.empty()) r.offset = "offset";
    return r;
}

void writeDataset(const std::string& path, const Dataset& data) {
    const DataRoles r = rolesFor(data);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write data file '" + path + "'");
    std::vector<std::string> header;
    if (data.responseKind != ResponseKind::None) header.push_back(r.outcome);
    header.insert(header.end(), r.covariates.begin(), r.covariates.end());
    header.insert(header.end(), r.fixedEffects.begin(), r.fixedEffects.end());
    if (!r.trials.empty()) header.push_back(r.trials);
    if (!r.offset.empty()) header.push_back(r.offset);
    for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
    out << '\n';
    for (int i = 0; i < data.n(); ++i) {
        std::vector<std::string> row;
        if (data.responseKind != ResponseKind::None) row.push_back(formatDouble(data.y[std::size_t(i)]));
        for (int j = 0; j < data.nCovariates(); ++j) {
            row.push_back(data.isMissing(i, j) ? "NA" : formatDouble(data.x(i, j)));
        }
        for (int l = 0; l < data.nFixedEffects(); ++l) row.push_back(formatDouble(data.w(i, l)));
        if (!data.trials.empty()) row.push_back(std::to_string(data.trials[std::size_t(i)]));
        if (!data.offset.empty()) row.push_back(formatDouble(data.offset[std::size_t(i)]));
        for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
        out << '\n';
    }
}

void applyConfigEntry(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto& hp = cfg.hp;
    auto& roles = cfg.roles;
    if (key.rfind("hyper.", 0) == 0) {
        const std::string name = key.substr(6);
        const std::map<std::string, double*> scalars{
            {"shapeAlpha", &hp.shapeAlpha}, {"rateAlpha", &hp.rateAlpha}, {"alpha", &hp.alphaFixed},
            {"muTheta", &hp.muTheta},       {"sigmaTheta", &hp.sigmaTheta}, {"muBeta", &hp.muBeta},
            {"sigmaBeta", &hp.sigmaBeta},   {"dofT", &hp.tDof},           {"sTauY", &hp.sTauY},
            {"rTauY", &hp.rTauY},           {"sTauEps", &hp.sTauEps},     {"rTauEps", &hp.rTauEps},
            {"aRho", &hp.aRho},             {"bRho", &hp.bRho},           {"aPhi", &hp.aPhi},
            {"kappa0", &hp.kappa0},
        };
        if (auto it = scalars.find(name); it != scalars.end()) {
            *it->second = toDouble(value, key);
        } else if (name == "mu0") {
            const auto v = toDoubles(value, key);
            hp.mu0 = Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
        } else if (name == "Sigma0") {
            hp.Sigma0 = toMatrix(value, key);
        } else if (name == "R0") {
            hp.R0 = toMatrix(value, key);
        } else {
            throw ConfigError("unknown hyperparameter '" + name + "'");
        }
        return;
    }
    if (key == "data") cfg.dataPath = value;
    else if (key == "output") cfg.output = value;
    else if (key == "outcome") roles.outcome = value;
    else if (key == "yModel") roles.responseKind = parseResponseKind(value);
    else if (key == "covariates") {
        roles.covariates = splitList(value);
        roles.kinds.assign(roles.covariates.size(), CovariateKind::Discrete);
    } else if (key == "xModel") {
        if (value == "Mixed") return;  // kinds come from continuousCovariates
        const CovariateKind kind = parseCovariateKind(value);
        for (auto& k : roles.kinds) k = kind;
        if (roles.covariates.empty()) throw ConfigError("xModel must follow covariates");
    } else if (key == "continuousCovariates") {
        for (const auto& name : splitList(value)) {
            const auto it = std::find(roles.covariates.begin(), roles.covariates.end(), name);
            if (it == roles.covariates.end()) throw ConfigError("continuous covariate '" + name + "' is not listed in covariates");
            roles.kinds[std::size_t(it - roles.covariates.begin())] = CovariateKind::Continuous;
        }
    } else if (key == "nCategories") {
        roles.nCategories.clear();
        for (const auto& item : splitList(value)) roles.nCategories.push_back(toInt(item, key));
    } else if (key == "nResponseCategories") roles.nResponseCategories = toInt(value, key);
    else if (key == "fixedEffects") roles.fixedEffects = splitList(value);
    else if (key == "trials") roles.trials = value;
    else if (key == "offset") roles.offset = value;
    else if (key == "nSweeps") hp.nSweeps = toInt(value, key);
    else if (key == "nBurn") hp.nBurn = toInt(value, key);
    else if (key == "nClusInit") hp.nClusInit = toInt(value, key);
    else if (key == "seed") hp.seed = std::uint64_t(toDouble(value, key));
    else if (key == "sampler") hp.variant = parseSamplerVariant(value);
    else if (key == "truncationC") hp.truncationC = toInt(value, key);
    else if (key == "kappaSlice") hp.kappaSlice = toDouble(value, key);
    else if (key == "varSelectType") hp.varSelectType = parseVarSelectType(value);
    else if (key == "extraYVar") hp.responseExtraVariation = toBool(value, key);
    else if (key == "reportEvery") cfg.sampler.reportEvery = toInt(value, key);
    else if (key == "labelSwitching") cfg.sampler.labelSwitching = toBool(value, key);
    else if (key == "computeMargModPost") cfg.sampler.computeMargModPost = toBool(value, key);
    else if (key == "predict") cfg.predictPath = value;
    else if (key == "predictMode") cfg.predictMode = parsePredictMode(value);
    else if (key == "postprocess") cfg.postprocess = toBool(value, key);
    else if (key == "kMax") cfg.kMax = toInt(value, key);
    else if (key == "levels") cfg.levels = toDoubles(value, key);
    else throw ConfigError("unknown configuration key '" + key + "'");
}

RunConfig loadRunConfig(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
    RunConfig cfg;
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineNo) + ": expected key=value");
        try {
            applyConfigEntry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(lineNo) + ": " + e.what());
        }
    }
    const fs::path base = fs::path(path).parent_path();
    for (auto* p : {&cfg.dataPath, &cfg.predictPath}) {
        if (!p->empty() && fs::path(*p).is_relative() && !base.empty()) *p = (base / *p).string();
    }
    syncSamplerConfig(cfg);
    return cfg;
}

void syncSamplerConfig(RunConfig& cfg) {
    cfg.sampler.nSweeps = cfg.hp.nSweeps;
    cfg.sampler.nBurn = cfg.hp.nBurn;
}

std::string outputPrefix(const RunConfig& cfg) {
    const char* dir = std::getenv("PROFREG_OUTPUT_DIR");
    if (dir != nullptr && *dir != '\0' && fs::path(cfg.output).is_relative()) {
        return (fs::path(dir) / cfg.output).string();
    }
    return cfg.output;
}

OutputWriter::OutputWriter(const std::string& prefix, const ModelContext& ctx)
    : prefix_(prefix), similarity_(ctx.n()) {
    const fs::path parent = fs::path(prefix).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    for (const char* s : {"_z", "_alpha", "_nClusters", "_theta", "_beta", "_rho", "_margModPost", "_clusterParams"}) {
        open(s);
    }
    if (ctx.data.responseKind == ResponseKind::Normal) open("_tauY");
    if (ctx.extraVariation()) open("_tauEps");
    if (ctx.hp.varSelectType == VarSelectType::Continuous) open("_zeta");
}

OutputWriter::~OutputWriter() {
    for (auto& [name, f] : files_) std::fclose(f);
}

std::FILE* OutputWriter::open(const std::string& suffix) {
    const std::string path = prefix_ + suffix + ".txt";
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) throw Error("cannot open output file '" + path + "'");
    files_[suffix] = f;
    return f;
}

std::vector<std::string> OutputWriter::files() const {
    std::vector<std::string> out;
    for (const auto& [name, f] : files_) out.push_back(prefix_ + name + ".txt");
    return out;
}

void OutputWriter::onSweep(const SweepRecord& record, const ChainState& state, const ModelContext& ctx) {
    auto line = [&](const std::string& suffix, const std::vector<double>& values) {
        const auto it = files_.find(suffix);
        if (it == files_.end()) return;
        std::string s;
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (k) s += ' ';
            s += formatDouble(values[k]);
        }
        s += '\n';
        std::fputs(s.c_str(), it->second);
        std::fflush(it->second);
    };
    std::vector<double> z(record.z.begin(), record.z.end());
    line("_z", z);
    line("_alpha", {record.alpha});
    line("_nClusters", {double(record.zStar)});
    std::vector<double> theta{double(record.theta.size())};
    for (const auto& t : record.theta) theta.insert(theta.end(), t.data(), t.data() + t.size());
    line("_theta", theta);
    std::vector<double> beta;
    for (Eigen::Index r = 0; r < record.beta.rows(); ++r) {
        for (Eigen::Index l = 0; l < record.beta.cols(); ++l) beta.push_back(record.beta(r, l));
    }
    line("_beta", beta);
    line("_rho", std::vector<double>(record.rho.data(), record.rho.data() + record.rho.size()));
    line("_margModPost", {record.logMargModPost});
    line("_tauY", {record.tauY});
    line("_tauEps", {record.tauEps});
    line("_zeta", std::vector<double>(record.zeta.data(), record.zeta.data() + record.zeta.size()));

    const int cStar = state.alloc.cStar;
    std::vector<double> params{double(cStar)};
    params.insert(params.end(), state.sticks.psi.begin(), state.sticks.psi.begin() + cStar);
    for (int c = 1; c <= cStar; ++c) {
        const auto& cl = state.cluster(c);
        params.insert(params.end(), cl.theta.data(), cl.theta.data() + cl.theta.size());
        for (const auto& phi : cl.phi) params.insert(params.end(), phi.data(), phi.data() + phi.size());
        if (ctx.nCont() > 0) {
            params.insert(params.end(), cl.mu.data(), cl.mu.data() + cl.mu.size());
            params.insert(params.end(), cl.Sigma.data(), cl.Sigma.data() + cl.Sigma.size());
        }
        if (ctx.hp.varSelectType == VarSelectType::BinaryCluster) params.insert(params.end(), cl.gamma.begin(), cl.gamma.end());
    }
    line("_clusterParams", params);
    similarity_.add(record.z);
}

namespace {

std::vector<std::vector<double>> readRows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::vector<double> row;
        std::string tok;
        while (ss >> tok) {
            double v = 0;
            if (!parseDouble(tok, v)) throw Error("non-numeric token '" + tok + "' in '" + path + "'");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::vector<std::vector<int>> readAllocations(const std::string& path) {
    std::vector<std::vector<int>> out;
    for (const auto& row : readRows(path)) {
        if (row.empty()) continue;
        out.emplace_back(row.begin(), row.end());
    }
    return out;
}

std::vector<double> readScalarColumn(const std::string& path) {
    std::vector<double> out;
    for (const auto& row : readRows(path)) {
        if (!row.empty()) out.push_back(row[0]);
    }
    return out;
}

std::vector<SweepParams> readSweepParams(const std::string& prefix, const ModelContext& ctx) {
    const auto z = readAllocations(prefix + "_z.txt");
    const auto params = readRows(prefix + "_clusterParams.txt");
    const auto beta = readRows(prefix + "_beta.txt");
    const auto rho = readRows(prefix + "_rho.txt");
    std::vector<std::vector<double>> zeta, tauY;
    if (ctx.hp.varSelectType == VarSelectType::Continuous) zeta = readRows(prefix + "_zeta.txt");
    if (ctx.data.responseKind == ResponseKind::Normal) tauY = readRows(prefix + "_tauY.txt");
    const std::size_t nSweeps = std::min({z.size(), params.size(), beta.size()});
    const int jc = ctx.nCont();
    const int J = ctx.data.nCovariates();
    std::vector<SweepParams> out;
    out.reserve(nSweeps);
    for (std::size_t t = 0; t < nSweeps; ++t) {
        SweepParams p;
        p.z = z[t];
        const auto& row = params[t];
        std::size_t pos = 0;
        auto next = [&] {
            if (pos >= row.size()) throw Error("truncated cluster parameter record at sweep " + std::to_string(t + 1));
            return row[pos++];
        };
        const int cStar = int(next());
        for (int c = 0; c < cStar; ++c) p.psi.push_back(next());
        for (int c = 0; c < cStar; ++c) {
            ClusterParams cl;
            cl.theta.resize(ctx.responseDim);
            for (int r = 0; r < ctx.responseDim; ++r) cl.theta[r] = next();
            for (int jj = 0; jj < ctx.nDisc(); ++jj) {
                Eigen::VectorXd phi(ctx.data.nCategories[std::size_t(ctx.discCols[std::size_t(jj)])]);
                for (Eigen::Index k = 0; k < phi.size(); ++k) phi[k] = next();
                cl.phi.push_back(phi);
            }
            if (jc > 0) {
                cl.mu.resize(jc);
                for (int k = 0; k < jc; ++k) cl.mu[k] = next();
                cl.Sigma.resize(jc, jc);
                for (Eigen::Index k = 0; k < cl.Sigma.size(); ++k) cl.Sigma.data()[k] = next();
            }
            if (ctx.hp.varSelectType == VarSelectType::BinaryCluster) {
                for (int j = 0; j < J; ++j) cl.gamma.push_back(std::uint8_t(next()));
            }
            p.clusters.push_back(std::move(cl));
        }
        p.beta.resize(ctx.responseDim, ctx.nFixed());
        for (Eigen::Index r = 0; r < p.beta.rows(); ++r) {
            for (Eigen::Index l = 0; l < p.beta.cols(); ++l) p.beta(r, l) = beta[t][std::size_t(r * p.beta.cols() + l)];
        }
        if (t < rho.size()) p.rho = Eigen::Map<const Eigen::VectorXd>(rho[t].data(), Eigen::Index(rho[t].size()));
        if (t < zeta.size()) p.zeta = Eigen::Map<const Eigen::VectorXd>(zeta[t].data(), Eigen::Index(zeta[t].size()));
        if (t < tauY.size()) p.tauY = tauY[t][0];
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<PredictionScenario> loadScenarios(const std::string& path, const DataRoles& roles,
                                              const ModelContext& ctx) {
    const Table t = readTable(path);
    std::vector<int> covCols;
    for (const auto& name : roles.covariates) covCols.push_back(columnIndex(t, name, path));
    std::vector<int> wCols;
    bool haveW = !roles.fixedEffects.empty();
    for (const auto& name : roles.fixedEffects) {
        const auto it = std::find(t.header.begin(), t.header.end(), name);
        if (it == t.header.end()) {
            haveW = false;
            break;
        }
        wCols.push_back(int(it - t.header.begin()));
    }
    int offsetCol = -1;
    if (!roles.offset.empty()) {
        const auto it = std::find(t.header.begin(), t.header.end(), roles.offset);
        if (it != t.header.end()) offsetCol = int(it - t.header.begin());
    }
    std::vector<PredictionScenario> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        PredictionScenario sc;
        for (std::size_t j = 0; j < covCols.size(); ++j) {
            const std::string& s = t.rows[r][std::size_t(covCols[j])];
            double v = 0;
            if (s == "NA") {
                sc.x.push_back(0.0);
                sc.missing.push_back(1);
                continue;
            }
            if (!parseDouble(s, v)) {
                throw DataError(path + ":" + std::to_string(t.lines[r]) + ": non-numeric value '" + s + "'");
            }
            if (ctx.data.kinds[j] == CovariateKind::Discrete &&
                (v != std::floor(v) || v < 0 || v >= ctx.data.nCategories[j])) {
                throw DataError(path + ":" + std::to_string(t.lines[r]) + ": category " + s + " out of range for '" +
                                roles.covariates[j] + "'");
            }
            sc.x.push_back(v);
            sc.missing.push_back(0);
        }
        if (haveW) {
            for (int c : wCols) sc.w.push_back(toDouble(t.rows[r][std::size_t(c)], "fixed effect"));
        }
        if (offsetCol >= 0) sc.offset = toDouble(t.rows[r][std::size_t(offsetCol)], "offset");
        out.push_back(std::move(sc));
    }
    return out;
}

void writeMatrix(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << formatDouble(m(i, j));
        out << '\n';
    }
}

Eigen::MatrixXd readMatrix(const std::string& path) {
    const auto rows = readRows(path);
    if (rows.empty()) return {};
    Eigen::MatrixXd m(Eigen::Index(rows.size()), Eigen::Index(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) throw Error("ragged matrix in '" + path + "'");
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
    }
    return m;
}

void writePartition(const std::string& path, const Partition& part) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "method\t" << part.method << "\nk\t" << part.k << "\nscore\t" << formatDouble(part.score) << "\nlabels";
    for (int l : part.labels) out << '\t' << l;
    out << '\n';
}

void writeRiskProfile(const std::string& path, const RiskProfile& profile, const ModelContext& ctx) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "cluster\tsize\tquantity\tcomponent\tmean";
    for (double l : profile.levels) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "\tq%g", l);
        out << buf;
    }
    out << '\n';
    auto row = [&](int k, int size, const std::string& what, const std::string& comp, const QuantileSummary& q) {
        out << k << '\t' << size << '\t' << what << '\t' << comp << '\t' << formatDouble(q.mean);
        for (double v : q.values) out << '\t' << formatDouble(v);
        out << '\n';
    };
    for (std::size_t k = 0; k < profile.clusters.size(); ++k) {
        const auto& cp = profile.clusters[k];
        for (std::size_t r = 0; r < cp.risk.size(); ++r) row(int(k + 1), cp.size, "risk", std::to_string(r), cp.risk[r]);
        for (std::size_t jj = 0; jj < cp.phi.size(); ++jj) {
            const int j = ctx.discCols[jj];
            const std::string name = std::size_t(j) < ctx.data.covariateNames.size() ? ctx.data.covariateNames[std::size_t(j)]
                                                                                    : std::to_string(j + 1);
            for (std::size_t cat = 0; cat < cp.phi[jj].size(); ++cat) {
                row(int(k + 1), cp.size, "phi:" + name, std::to_string(cat), cp.phi[jj][cat]);
            }
        }
        for (std::size_t q = 0; q < cp.mu.size(); ++q) {
            const int j = ctx.contCols[q];
            const std::string name = std::size_t(j) < ctx.data.covariateNames.size() ? ctx.data.covariateNames[std::size_t(j)]
                                                                                    : std::to_string(j + 1);
            row(int(k + 1), cp.size, "mu:" + name, "0", cp.mu[q]);
        }
    }
}

void writePredictions(const std::string& path, const PredictionResult& result, PredictMode mode) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "# mode " << (mode == PredictMode::RaoBlackwell ? "RaoBlackwell" : "RandomAllocation") << '\n';
    out << "sweep\tscenario\tcomponent\tvalue\n";
    for (std::size_t s = 0; s < result.perSweep.size(); ++s) {
        const auto& m = result.perSweep[s];
        for (Eigen::Index t = 0; t < m.rows(); ++t) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                out << t + 1 << '\t' << s + 1 << '\t' << c << '\t' << formatDouble(m(t, c)) << '\n';
            }
        }
    }
}

}  // namespace profreg
