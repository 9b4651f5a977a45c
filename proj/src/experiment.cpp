#include "pacascade/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace pacascade {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
    if (std::abs(alpha) > 1.0) throw ConfigError("alpha: |alpha| must be <= 1");
    if (!(sigma_sq >= 0.0)) throw ConfigError("sigma_sq must be >= 0");
    if (!(G > 0.0)) throw ConfigError("G must be > 0");
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must be in [0, 1)");
    for (int k : K_range)
        if (k < 1) throw ConfigError("K_range entries must be >= 1");
    if (symbols < 1) throw ConfigError("symbols must be >= 1");
    if (oversampling < 2) throw ConfigError("oversampling must be >= 2");
    if (!(rolloff > 0.0 && rolloff <= 1.0)) throw ConfigError("rolloff must be in (0, 1]");
    if (static_cast<long>(symbols) * oversampling < kDefaultSegmentLength)
        throw ConfigError("symbols * oversampling must be at least the PSD segment length (" +
                          std::to_string(kDefaultSegmentLength) + ")");
    // adjacent channels must fit inside +-oversampling/2
    if (1.5 * (1.0 + rolloff) > 0.5 * oversampling)
        throw ConfigError("oversampling too low for adjacent-channel measurement at this rolloff");
}

ExcitationSpec ExperimentConfig::excitation() const {
    ExcitationSpec spec;
    spec.symbols = static_cast<std::size_t>(symbols);
    spec.oversampling = oversampling;
    spec.rolloff = rolloff;
    spec.span_symbols = kSpanSymbols;
    spec.seed = seed;
    return spec;
}

CascadeConfig ExperimentConfig::cascade(int stages, Scenario scenario) const {
    CascadeConfig cfg = CascadeConfig::uniform(static_cast<std::size_t>(stages), alpha, 1.0, std::sqrt(sigma_sq));
    cfg.reference_gain = G;
    cfg.epsilon = epsilon;
    return with_scenario(std::move(cfg), scenario);
}

namespace {

template <typename T>
T get_as(const nlohmann::json& j, const char* key) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known{"alpha",   "sigma_sq",     "G",       "epsilon", "K_range",   "symbols",
                                             "oversampling", "rolloff", "seed", "modes", "output_dir"};
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");

    ExperimentConfig c;
    if (j.contains("alpha")) {
        const auto& a = j.at("alpha");
        if (!a.is_object() || a.size() != 2 || !a.contains("re") || !a.contains("im"))
            throw ConfigError("config key 'alpha' must be {\"re\": number, \"im\": number}");
        c.alpha = Complex(get_as<double>(a.at("re"), "alpha.re"), get_as<double>(a.at("im"), "alpha.im"));
    }
    if (j.contains("sigma_sq")) c.sigma_sq = get_as<double>(j.at("sigma_sq"), "sigma_sq");
    if (j.contains("G")) c.G = get_as<double>(j.at("G"), "G");
    if (j.contains("epsilon")) c.epsilon = get_as<double>(j.at("epsilon"), "epsilon");
    if (j.contains("K_range")) c.K_range = get_as<std::vector<int>>(j.at("K_range"), "K_range");
    if (j.contains("symbols")) c.symbols = get_as<int>(j.at("symbols"), "symbols");
    if (j.contains("oversampling")) c.oversampling = get_as<int>(j.at("oversampling"), "oversampling");
    if (j.contains("rolloff")) c.rolloff = get_as<double>(j.at("rolloff"), "rolloff");
    if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j.at("seed"), "seed");
    if (j.contains("modes")) {
        c.modes.clear();
        for (const auto& name : get_as<std::vector<std::string>>(j.at("modes"), "modes")) {
            try {
                c.modes.push_back(parse_mode(name));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("config key 'modes': ") + e.what());
            }
        }
    }
    if (j.contains("output_dir")) c.output_dir = get_as<std::string>(j.at("output_dir"), "output_dir");
    c.validate();
    return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c, bool include_output_dir) {
    nlohmann::json j;
    j["alpha"] = {{"re", c.alpha.real()}, {"im", c.alpha.imag()}};
    j["sigma_sq"] = c.sigma_sq;
    j["G"] = c.G;
    j["epsilon"] = c.epsilon;
    j["K_range"] = c.K_range;
    j["symbols"] = c.symbols;
    j["oversampling"] = c.oversampling;
    j["rolloff"] = c.rolloff;
    j["seed"] = c.seed;
    auto modes = nlohmann::json::array();
    for (Mode m : c.modes) modes.push_back(std::string(to_string(m)));
    j["modes"] = modes;
    if (include_output_dir) j["output_dir"] = c.output_dir;
    return j;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Realizations draw_realizations(const ExperimentConfig& config) {
    config.validate();
    Realizations r;
    r.excitation = make_excitation(config.excitation());
    const int stages = config.K_range.empty() ? 1 : *std::max_element(config.K_range.begin(), config.K_range.end());
    const std::size_t n = r.excitation.size();
    r.optimization_noise = draw_noise(stages, n, derive_seed(config.seed, kOptimizationNoiseStream));
    r.evaluation_noise = draw_noise(stages, n, derive_seed(config.seed, kEvaluationNoiseStream));
    return r;
}

// ---------------------------------------------------------------------------
// Runs

std::string ScenarioRun::label() const { return scenario == Scenario::One ? "scenario1" : "scenario2"; }

std::string OptimizationRun::label() const {
    if (mode == Mode::PowerOnly) return start == Scenario::One ? "power-scenario1" : "power-scenario2";
    return std::string(to_string(mode));
}

bool RunRecord::any_failed() const {
    return std::any_of(optimizations.begin(), optimizations.end(), [](const auto& r) { return r.failed; });
}

MetricsReport measure(const Signal& desired, const Signal& input, const Signal& output,
                      const ExperimentConfig& config) {
    ReportOptions opts;
    opts.channels.rolloff = config.rolloff;
    opts.amam_decimation = kAmAmDecimation;
    return evaluate(desired, input, output, opts);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Evaluation {
    Signal input;
    Signal output;
    std::vector<std::size_t> saturated;
};

Evaluation run_cascade(const Signal& x0_unit, const CascadeConfig& cfg, const NoiseRealization& noise) {
    Evaluation e;
    e.input = scaled(x0_unit, std::sqrt(cfg.input_power));
    auto trace = cascade_forward(e.input, cfg, noise, Retention::Streaming);
    e.output = std::move(trace.output);
    e.saturated = std::move(trace.saturated_stages);
    return e;
}

void add_scenarios(RunRecord& rec, const Realizations& real, const std::vector<Scenario>& scenarios) {
    const auto& c = rec.config;
    for (int K : c.K_range) {
        for (Scenario s : scenarios) {
            if (s == Scenario::Two && c.alpha == Complex(0.0, 0.0)) continue;
            const auto t0 = Clock::now();
            ScenarioRun run;
            run.K = K;
            run.scenario = s;
            auto e = run_cascade(real.excitation, c.cascade(K, s), real.evaluation_noise);
            run.metrics = measure(rec.desired, e.input, e.output, c);
            run.input = std::move(e.input);
            run.output = std::move(e.output);
            run.saturated_stages = std::move(e.saturated);
            rec.timings_s.emplace_back("K" + std::to_string(K) + "_" + run.label(), seconds_since(t0));
            rec.scenarios.push_back(std::move(run));
        }
    }
}

OptimizationRun optimize_one(const ExperimentConfig& c, const Realizations& real, const Signal& desired, int K,
                             Mode mode, Scenario start) {
    OptimizationRun run;
    run.K = K;
    run.mode = mode;
    run.start = start;

    const CascadeConfig base = c.cascade(K, start);
    auto before = run_cascade(real.excitation, base, real.evaluation_noise);
    run.before = measure(desired, before.input, before.output, c);

    try {
        const CascadeObjective objective(real.excitation, base, real.optimization_noise, mode);
        const auto spec = OptimizationSpec::for_config(mode, base, start);
        run.result = solve(spec, objective);
        run.params = objective.expand(run.result.parameters);
        auto after = run_cascade(real.excitation, objective.configure(run.result.parameters), real.evaluation_noise);
        run.after = measure(desired, after.input, after.output, c);
        run.input = std::move(after.input);
        run.output = std::move(after.output);
    } catch (const std::exception& e) {
        run.failed = true;
        run.error = e.what();
    }
    return run;
}

void add_optimizations(RunRecord& rec, const Realizations& real) {
    const auto& c = rec.config;
    for (int K : c.K_range) {
        for (Mode mode : c.modes) {
            std::vector<Scenario> starts{Scenario::One};
            if (mode == Mode::PowerOnly && c.alpha != Complex(0.0, 0.0)) starts.push_back(Scenario::Two);
            for (Scenario s : starts) {
                const auto t0 = Clock::now();
                auto run = optimize_one(c, real, rec.desired, K, mode, s);
                if (run.failed) rec.warnings.push_back("K=" + std::to_string(K) + " " + run.label() + ": " + run.error);
                rec.timings_s.emplace_back("K" + std::to_string(K) + "_" + run.label(), seconds_since(t0));
                rec.optimizations.push_back(std::move(run));
            }
        }
    }
}

RunRecord start_record(const ExperimentConfig& config, const Realizations& real) {
    RunRecord rec;
    rec.config = config;
    rec.desired = scaled(real.excitation, config.G);
    if (config.K_range.empty()) rec.warnings.emplace_back("K_range is empty; nothing to run");
    if (config.alpha == Complex(0.0, 0.0))
        rec.warnings.emplace_back("alpha = 0: scenario 2 has no saturation point and is skipped");
    return rec;
}

}  // namespace

RunRecord run_scenarios(const ExperimentConfig& config, const std::vector<Scenario>& scenarios) {
    const auto real = draw_realizations(config);
    auto rec = start_record(config, real);
    add_scenarios(rec, real, scenarios);
    return rec;
}

RunRecord run_optimizations(const ExperimentConfig& config) {
    const auto real = draw_realizations(config);
    auto rec = start_record(config, real);
    add_optimizations(rec, real);
    return rec;
}

RunRecord run_sweep(const ExperimentConfig& config) {
    const auto real = draw_realizations(config);
    auto rec = start_record(config, real);
    add_scenarios(rec, real, {Scenario::One, Scenario::Two});
    add_optimizations(rec, real);
    return rec;
}

// ---------------------------------------------------------------------------
// Output

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256: digest failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[md[i] >> 4]);
        out.push_back(kHex[md[i] & 0xf]);
    }
    return out;
}

namespace {

std::string db_field(double db) { return format_double(finite_db(db)); }

std::string amam_csv(const std::vector<AmAmPoint>& points) {
    std::string s = "input_mag,output_mag\n";
    for (const auto& p : points) s += format_double(p.input_mag) + ',' + format_double(p.output_mag) + '\n';
    return s;
}

std::string psd_csv(const PsdEstimate& psd) {
    std::string s = "freq_symrate,psd_db\n";
    for (std::size_t i = 0; i < psd.frequencies.size(); ++i)
        s += format_double(psd.frequencies[i]) + ',' + db_field(psd.power_density[i]) + '\n';
    return s;
}

class Writer {
public:
    explicit Writer(fs::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& content, bool record = true) {
        const fs::path target = dir_ / name;
        const fs::path tmp = dir_ / (name + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
            out.write(content.data(), static_cast<std::streamsize>(content.size()));
            out.flush();
            if (!out) throw IoError("write failed for " + tmp.string());
        }
        std::error_code ec;
        fs::rename(tmp, target, ec);
        if (ec) {
            fs::remove(tmp, ec);
            throw IoError("cannot rename " + tmp.string() + " to " + target.string() + ": " + ec.message());
        }
        written_.push_back(target);
        if (record) files_.push_back({name, sha256_hex(content), content.size()});
    }

    void rollback() {
        std::error_code ec;
        for (const auto& p : written_) fs::remove(p, ec);
        written_.clear();
    }

    const std::vector<EmittedFile>& files() const { return files_; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
    std::vector<EmittedFile> files_;
};

std::string file_tag(int K, const std::string& label) { return "K" + std::to_string(K) + "_" + label + ".csv"; }

bool optimizes_gains(Mode mode) { return mode != Mode::PowerOnly; }

nlohmann::json manifest_json(const RunRecord& rec, const EmitResult& result) {
    nlohmann::json m;
    m["config"] = config_to_json(rec.config, false);
    m["seed"] = rec.config.seed;
    m["conventions"] = {
        {"excitation", "16qam-rrc-unit-peak"},
        {"span_symbols", kSpanSymbols},
        {"psd_segment_length", kDefaultSegmentLength},
        {"psd_overlap_fraction", kDefaultOverlap},
        {"amam_decimation", kAmAmDecimation},
        {"below_floor_db", kBelowFloorDb},
        {"optimization_noise_seed", derive_seed(rec.config.seed, kOptimizationNoiseStream)},
        {"evaluation_noise_seed", derive_seed(rec.config.seed, kEvaluationNoiseStream)},
    };
    auto runs = nlohmann::json::array();
    for (const auto& r : rec.optimizations) {
        nlohmann::json o{{"case", r.label()}, {"K", r.K}, {"failed", r.failed}};
        if (r.failed) {
            o["error"] = r.error;
        } else {
            o["status"] = std::string(to_string(r.result.status));
            o["iterations"] = r.result.iterations;
            o["objective"] = r.result.objective;
        }
        runs.push_back(std::move(o));
    }
    m["solver_runs"] = runs;
    m["warnings"] = rec.warnings;
    auto files = nlohmann::json::array();
    for (const auto& f : result.files) files.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    m["files"] = files;
    m["digest"] = result.digest;
    return m;
}

}  // namespace

EmitResult emit_outputs(const RunRecord& rec, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

    Writer w(dir);
    try {
        const bool any_runs = !rec.scenarios.empty() || !rec.optimizations.empty();

        for (const auto& s : rec.scenarios) {
            w.write("amam_" + file_tag(s.K, s.label()), amam_csv(s.metrics.amam));
            w.write("psd_" + file_tag(s.K, s.label()), psd_csv(s.metrics.psd));
        }
        for (const auto& o : rec.optimizations) {
            if (o.failed) continue;
            if (o.mode == Mode::JointEqualGains || o.mode == Mode::JointUnequalGains) {
                w.write("amam_" + file_tag(o.K, o.label()), amam_csv(o.after.amam));
                w.write("psd_" + file_tag(o.K, o.label()), psd_csv(o.after.psd));
            }
        }

        if (any_runs) {
            std::string metrics = "K,scenario_or_mode,nmse_db,aclr_db\n";
            for (const auto& s : rec.scenarios)
                metrics += std::to_string(s.K) + ',' + s.label() + ',' + db_field(s.metrics.nmse_db) + ',' +
                           db_field(s.metrics.aclr_db) + '\n';
            for (const auto& o : rec.optimizations) {
                if (o.failed) continue;
                metrics += std::to_string(o.K) + ',' + o.label() + ',' + db_field(o.after.nmse_db) + ',' +
                           db_field(o.after.aclr_db) + '\n';
            }
            w.write("metrics_vs_K.csv", metrics);
        }

        std::string power = "case,K,p0\n";
        std::string gains = "case,K,k,gain\n";
        bool have_power = false;
        bool have_gains = false;
        for (const auto& o : rec.optimizations) {
            if (o.failed) continue;
            if (optimizes_power(o.mode)) {
                power += o.label() + ',' + std::to_string(o.K) + ',' + format_double(o.params.input_power) + '\n';
                have_power = true;
            }
            if (optimizes_gains(o.mode)) {
                for (std::size_t k = 0; k < o.params.gains.size(); ++k)
                    gains += o.label() + ',' + std::to_string(o.K) + ',' + std::to_string(k + 1) + ',' +
                             format_double(o.params.gains[k]) + '\n';
                have_gains = true;
            }
        }
        if (have_power) w.write("table_power.csv", power);
        if (have_gains) w.write("table_gains.csv", gains);

        EmitResult result;
        result.files = w.files();
        std::string listing;
        for (const auto& f : result.files) listing += f.name + ':' + f.sha256 + '\n';
        result.digest = sha256_hex(listing);

        w.write("manifest.json", manifest_json(rec, result).dump(2) + '\n', false);
        return result;
    } catch (const IoError&) {
        w.rollback();
        throw;
    } catch (const std::exception& e) {
        w.rollback();
        throw IoError(std::string("emitting outputs to ") + dir.string() + ": " + e.what());
    }
}

}  // namespace pacascade
