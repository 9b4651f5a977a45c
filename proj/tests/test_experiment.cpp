#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "pacascade/experiment.hpp"

using namespace pacascade;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("pacascade_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.symbols = 256;
    c.K_range = {1, 2, 3};
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(f);
        rows.push_back(fields);
    }
    return rows;
}

}  // namespace

TEST_CASE("config JSON round trip") {
    ExperimentConfig c;
    c.alpha = Complex(-0.2, 0.01);
    c.sigma_sq = 0.0;
    c.K_range = {2, 4};
    c.modes = {Mode::JointEqualGains, Mode::PowerOnly};
    c.seed = 1234567890123ull;
    c.output_dir = "somewhere";
    const auto back = config_from_json(config_to_json(c));
    CHECK(back.alpha == c.alpha);
    CHECK(back.sigma_sq == c.sigma_sq);
    CHECK(back.K_range == c.K_range);
    CHECK(back.modes == c.modes);
    CHECK(back.seed == c.seed);
    CHECK(back.output_dir == c.output_dir);
    CHECK(config_to_json(back) == config_to_json(c));
}

TEST_CASE("config JSON validation") {
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"sigma", 0.1}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"alpha", -0.3}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"symbols", "many"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"modes", {"power", "gains"}}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), ConfigError);

    const auto partial = config_from_json(nlohmann::json{{"G", 1.0}, {"K_range", {3}}});
    CHECK(partial.K_range == std::vector<int>{3});
    CHECK(partial.alpha == Complex(-0.33, 0.033));
    CHECK(partial.epsilon == 0.3);

    ExperimentConfig bad;
    bad.oversampling = 2;  // adjacent channels past Nyquist
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ExperimentConfig{};
    bad.symbols = 16;  // shorter than one PSD segment
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ExperimentConfig{};
    bad.epsilon = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_NOTHROW(ExperimentConfig{}.validate());
}

TEST_CASE("load_config reports unreadable and malformed files") {
    TempDir tmp("cfg");
    fs::create_directories(tmp.path);
    CHECK_THROWS_AS(load_config(tmp.path / "missing.json"), ConfigError);
    std::ofstream(tmp.path / "bad.json") << "{ not json";
    CHECK_THROWS_AS(load_config(tmp.path / "bad.json"), ConfigError);
    std::ofstream(tmp.path / "ok.json") << R"({"alpha": {"re": -0.1, "im": 0.0}, "seed": 9})";
    const auto c = load_config(tmp.path / "ok.json");
    CHECK(c.alpha == Complex(-0.1, 0.0));
    CHECK(c.seed == 9);
}

TEST_CASE("seed streams are distinct and stable") {
    CHECK(derive_seed(1, 1) == derive_seed(1, 1));
    CHECK(derive_seed(1, 1) != derive_seed(1, 2));
    CHECK(derive_seed(1, 1) != derive_seed(2, 1));
}

TEST_CASE("format_double round-trips") {
    for (double v : {0.0, 1.0, -0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -300.0}) {
        const auto s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("scenario sweep trends") {
    auto c = small_config();
    c.symbols = 1024;
    c.K_range = {1, 2, 3, 4, 5};
    const auto rec = run_scenarios(c);
    std::map<std::string, std::vector<double>> nmse;
    for (const auto& s : rec.scenarios) nmse[s.label()].push_back(s.metrics.nmse_db);
    REQUIRE(nmse["scenario1"].size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(nmse["scenario1"][i] < nmse["scenario2"][i]);
        if (i > 0) CHECK(nmse["scenario1"][i] > nmse["scenario1"][i - 1]);
    }
}

TEST_CASE("linear chain without noise is exact") {
    auto c = small_config();
    c.alpha = Complex(0.0, 0.0);
    c.sigma_sq = 0.0;
    TempDir tmp("linear");
    const auto rec = run_scenarios(c);
    CHECK(rec.scenarios.size() == 3);  // scenario 2 skipped
    CHECK_FALSE(rec.warnings.empty());
    for (const auto& s : rec.scenarios) CHECK(s.metrics.nmse_db == -std::numeric_limits<double>::infinity());
    emit_outputs(rec, tmp.path);
    const auto rows = read_csv(tmp.path / "metrics_vs_K.csv");
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][2] == "-300");
}

TEST_CASE("empty K_range writes a manifest only") {
    auto c = small_config();
    c.K_range = {};
    TempDir tmp("empty");
    const auto rec = run_sweep(c);
    CHECK_FALSE(rec.warnings.empty());
    const auto out = emit_outputs(rec, tmp.path);
    CHECK(out.files.empty());
    std::vector<fs::path> present;
    for (const auto& e : fs::directory_iterator(tmp.path)) present.push_back(e.path().filename());
    REQUIRE(present.size() == 1);
    CHECK(present[0] == "manifest.json");
}

TEST_CASE("sweep outputs: names, schemas, consistency") {
    auto c = small_config();
    c.symbols = 512;
    TempDir tmp("sweep");
    const auto rec = run_sweep(c);
    CHECK_FALSE(rec.any_failed());
    const auto out = emit_outputs(rec, tmp.path);

    for (int K : c.K_range) {
        for (const char* s : {"scenario1", "scenario2", "joint-equal", "joint-unequal"}) {
            const std::string tag = "K" + std::to_string(K) + "_" + s + ".csv";
            CHECK(fs::exists(tmp.path / ("amam_" + tag)));
            CHECK(fs::exists(tmp.path / ("psd_" + tag)));
        }
    }
    CHECK(read_csv(tmp.path / "amam_K1_scenario1.csv")[0] == std::vector<std::string>{"input_mag", "output_mag"});
    CHECK(read_csv(tmp.path / "psd_K2_scenario2.csv")[0] == std::vector<std::string>{"freq_symrate", "psd_db"});

    SUBCASE("every file is LF-only and listed in the manifest") {
        const auto manifest = nlohmann::json::parse(slurp(tmp.path / "manifest.json"));
        CHECK(manifest["digest"] == out.digest);
        CHECK(manifest["files"].size() == out.files.size());
        for (const auto& f : manifest["files"]) {
            const auto body = slurp(tmp.path / f["name"].get<std::string>());
            CHECK(body.find('\r') == std::string::npos);
            CHECK(sha256_hex(body) == f["sha256"]);
            CHECK(body.size() == f["bytes"].get<std::size_t>());
        }
        CHECK_FALSE(manifest["config"].contains("output_dir"));
        CHECK(manifest["seed"] == c.seed);
    }

    SUBCASE("table_gains is triangular") {
        const auto rows = read_csv(tmp.path / "table_gains.csv");
        CHECK(rows[0] == std::vector<std::string>{"case", "K", "k", "gain"});
        std::map<std::pair<std::string, int>, std::vector<int>> seen;
        for (std::size_t i = 1; i < rows.size(); ++i) seen[{rows[i][0], std::stoi(rows[i][1])}].push_back(std::stoi(rows[i][2]));
        CHECK(seen.size() == 4 * c.K_range.size());
        for (const auto& [key, ks] : seen) {
            std::vector<int> expected(static_cast<std::size_t>(key.second));
            for (int k = 0; k < key.second; ++k) expected[static_cast<std::size_t>(k)] = k + 1;
            CHECK(ks == expected);
        }
    }

    SUBCASE("table_power rows") {
        const auto rows = read_csv(tmp.path / "table_power.csv");
        CHECK(rows[0] == std::vector<std::string>{"case", "K", "p0"});
        std::map<std::string, int> count;
        for (std::size_t i = 1; i < rows.size(); ++i) ++count[rows[i][0]];
        CHECK(count["power-scenario1"] == 3);
        CHECK(count["power-scenario2"] == 3);
        CHECK(count["joint-equal"] == 3);
        CHECK(count["joint-unequal"] == 3);
    }

    SUBCASE("metrics match recomputation") {
        const auto rows = read_csv(tmp.path / "metrics_vs_K.csv");
        CHECK(rows[0] == std::vector<std::string>{"K", "scenario_or_mode", "nmse_db", "aclr_db"});
        std::map<std::string, std::pair<double, double>> table;
        for (std::size_t i = 1; i < rows.size(); ++i)
            table[rows[i][0] + "_" + rows[i][1]] = {std::stod(rows[i][2]), std::stod(rows[i][3])};

        auto check_run = [&](int K, const std::string& label, const Signal& output) {
            CAPTURE(label);
            const auto [nmse_csv, aclr_csv] = table.at(std::to_string(K) + "_" + label);
            CHECK(std::abs(nmse(rec.desired.samples, output.samples) - nmse_csv) < 1e-9);
            // ACLR from the emitted PSD file alone
            const auto psd_rows = read_csv(tmp.path / ("psd_K" + std::to_string(K) + "_" + label + ".csv"));
            if (psd_rows.size() < 2) return;
            PsdEstimate psd;
            for (std::size_t i = 1; i < psd_rows.size(); ++i) {
                psd.frequencies.push_back(std::stod(psd_rows[i][0]));
                psd.density.push_back(std::pow(10.0, std::stod(psd_rows[i][1]) / 10.0));
            }
            psd.bin_width = psd.frequencies[1] - psd.frequencies[0];
            CHECK(std::abs(aclr(psd, ChannelPlan{c.rolloff}) - aclr_csv) < 1e-9);
        };
        for (const auto& s : rec.scenarios) check_run(s.K, s.label(), s.output);
        for (const auto& o : rec.optimizations)
            if (o.mode == Mode::JointEqualGains || o.mode == Mode::JointUnequalGains) check_run(o.K, o.label(), o.output);
    }
}

TEST_CASE("outputs are byte-identical across reruns") {
    auto c = small_config();
    c.K_range = {1, 2};
    TempDir a("det_a"), b("det_b");
    const auto ra = emit_outputs(run_sweep(c), a.path);
    const auto rb = emit_outputs(run_sweep(c), b.path);
    CHECK(ra.digest == rb.digest);
    CHECK(slurp(a.path / "manifest.json") == slurp(b.path / "manifest.json"));

    c.seed = 2;
    TempDir d("det_c");
    CHECK(emit_outputs(run_sweep(c), d.path).digest != ra.digest);
}

TEST_CASE("unwritable output directory is an I/O error") {
    TempDir tmp("io");
    fs::create_directories(tmp.path);
    std::ofstream(tmp.path / "blocker") << "x";
    auto c = small_config();
    c.K_range = {1};
    const auto rec = run_scenarios(c);
    CHECK_THROWS_AS(emit_outputs(rec, tmp.path / "blocker" / "sub"), IoError);
}

TEST_CASE("optimization runs record parameters inside the box") {
    auto c = small_config();
    c.K_range = {2};
    const auto rec = run_optimizations(c);
    CHECK(rec.optimizations.size() == 6);  // power from two starts plus four modes
    for (const auto& o : rec.optimizations) {
        CAPTURE(o.label());
        CHECK_FALSE(o.failed);
        CHECK(o.params.input_power <= 1.0);
        CHECK(o.params.input_power >= kMinInputPower);
        for (double g : o.params.gains) {
            if (o.mode == Mode::PowerOnly) continue;
            CHECK(g >= 0.7 - 1e-12);
            CHECK(g <= 1.3 + 1e-12);
        }
        CHECK(o.after.nmse_db <= o.before.nmse_db + 0.1);
    }
}

TEST_CASE("joint unequal K = 2 drives both gains to the upper bound") {
    ExperimentConfig c;
    c.K_range = {2};
    c.modes = {Mode::JointUnequalGains};
    const auto rec = run_optimizations(c);
    REQUIRE(rec.optimizations.size() == 1);
    const auto& run = rec.optimizations[0];
    CHECK(run.params.gains[0] == doctest::Approx(1.3).epsilon(1e-9));
    CHECK(run.params.gains[1] == doctest::Approx(1.3).epsilon(1e-9));
    CHECK(run.params.input_power == doctest::Approx(0.40).epsilon(0.05 / 0.40));
}
