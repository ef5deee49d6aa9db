#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli/commands.hpp"
#include "pbitsim/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int code;
    std::string out;
    std::string err;
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        root_ = fs::temp_directory_path() /
                (std::string("pbitsim_cli_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    RunResult run(std::vector<std::string> args) {
        std::ostringstream out;
        std::ostringstream err;
        const int code = pbitsim::cli::run(args, out, err);
        return {code, out.str(), err.str()};
    }

    std::string dir(const std::string& name) const { return (root_ / name).string(); }

    std::string write_file(const std::string& name, const std::string& content) const {
        const auto path = root_ / name;
        std::ofstream(path) << content;
        return path.string();
    }

    static std::string slurp(const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    static json read_json(const fs::path& path) { return json::parse(slurp(path)); }

    static std::set<std::string> listing(const fs::path& d) {
        std::set<std::string> names;
        for (const auto& e : fs::directory_iterator(d)) {
            names.insert(e.path().filename().string());
        }
        return names;
    }

    fs::path root_;
};

const std::vector<std::string> kFastTrace = {"smtj-trace", "--duration", "2", "--tau", "1e-3"};
const std::vector<std::string> kFastSweep = {"field-sweep", "--averaging-time", "0.5",
                                             "--step", "5e-5"};
const std::vector<std::string> kFastTransfer = {"transfer", "--samples", "100", "--grid-step",
                                                "0.005"};
const std::vector<std::string> kFastGate = {"gate", "--sweeps", "20000"};

std::vector<std::string> with(std::vector<std::string> base, const std::vector<std::string>& more) {
    base.insert(base.end(), more.begin(), more.end());
    return base;
}

}  // namespace

TEST_F(Cli, HelpExitsZero) {
    const RunResult r = run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("smtj-trace"), std::string::npos);
}

TEST_F(Cli, ParseErrorsExitTwo) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"bogus"}).code, 2);
    EXPECT_EQ(run({"metrics", "--seed", "-1"}).code, 2);
    EXPECT_EQ(run({"metrics", "--no-such-flag"}).code, 2);
}

TEST_F(Cli, SmtjTraceDefaultsRecoverDevice) {
    const RunResult r = run({"smtj-trace", "--out", dir("o")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(listing(dir("o")), (std::set<std::string>{"trace.csv", "analysis.json", "acf.csv"}));
    const json a = read_json(root_ / "o" / "analysis.json");
    EXPECT_NEAR(a["tmr"].get<double>(), 0.145, 0.001);
    EXPECT_NEAR(a["dwell"]["acf_s"].get<double>(), 4.2e-3, 0.1 * 4.2e-3);
    EXPECT_NEAR(a["dwell"]["direct_s"].get<double>(), 4.2e-3, 0.1 * 4.2e-3);
    EXPECT_EQ(a["source"], "simulated");
    EXPECT_EQ(a["n_samples"], 5'000'000);
    EXPECT_DOUBLE_EQ(a["truth"]["dwell_s"].get<double>(), 4.2e-3);

    // Export window: 1 s at 10 us.
    std::ifstream trace(root_ / "o" / "trace.csv");
    std::string line;
    std::size_t rows = 0;
    std::getline(trace, line);
    EXPECT_EQ(line.rfind("# pbitsim ", 0), 0u);
    std::getline(trace, line);
    EXPECT_EQ(line, "time_s,resistance_ohm,state");
    while (std::getline(trace, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, 100'000u);
}

TEST_F(Cli, SmtjTraceAnalyzesVoltageExport) {
    // Telegraph signal with geometric run lengths (mean 40 samples) read out
    // as a voltage across the junction plus a 0.05 V amplifier offset.
    std::mt19937_64 rng(3);
    std::geometric_distribution<int> run_length(1.0 / 40.0);
    std::ostringstream csv;
    csv << "time_s,voltage_V\n";
    const double current = 1e-5;
    bool high = false;
    int left = run_length(rng) + 1;
    for (int i = 0; i < 200000; ++i) {
        if (--left == 0) {
            high = !high;
            left = run_length(rng) + 1;
        }
        csv << pbitsim::io::format_double(i * 1e-5) << ','
            << pbitsim::io::format_double((high ? 31602.0 : 27600.0) * current + 0.05) << '\n';
    }
    const auto input = write_file("scope.csv", csv.str());
    const auto sidecar = write_file("scope.json", R"({"bias_current_A": 1e-5})");
    const RunResult r = run({"smtj-trace", "--input", input, "--sidecar", sidecar, "--offset", "5000",
                       "--out", dir("o")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json a = read_json(root_ / "o" / "analysis.json");
    EXPECT_EQ(a["source"], "file");
    EXPECT_FALSE(a.contains("truth"));
    EXPECT_NEAR(a["levels"]["r_low_ohm"].get<double>(), 27600.0, 1e-6);
    EXPECT_NEAR(a["levels"]["r_high_ohm"].get<double>(), 31602.0, 1e-6);
    EXPECT_NEAR(a["dwell"]["direct_s"].get<double>(), 40e-5, 0.05 * 40e-5);
    EXPECT_NEAR(a["dwell"]["acf_s"].get<double>(), 40e-5, 0.1 * 40e-5);
}

TEST_F(Cli, SmtjTraceConfigErrors) {
    EXPECT_EQ(run({"smtj-trace", "--duration", "0", "--out", dir("a")}).code, 2);
    EXPECT_EQ(run({"smtj-trace", "--dt", "-1", "--out", dir("b")}).code, 2);
    EXPECT_EQ(run({"smtj-trace", "--tau", "0", "--out", dir("c")}).code, 2);
    EXPECT_EQ(run({"smtj-trace", "--input", dir("missing.csv"), "--out", dir("d")}).code, 2);
    EXPECT_EQ(run({"smtj-trace", "--sidecar", dir("x.json"), "--out", dir("e")}).code, 2);
    EXPECT_EQ(run({"smtj-trace", "--duration", "1e6", "--out", dir("f")}).code, 2);
    const auto bad = write_file("bad.csv", "time_s,resistance_ohm\n0,1\n1,oops\n");
    EXPECT_EQ(run({"smtj-trace", "--input", bad, "--out", dir("g")}).code, 2);
    for (const char* d : {"a", "b", "c", "d", "e", "f", "g"}) {
        EXPECT_FALSE(fs::exists(root_ / d)) << d;
    }
}

TEST_F(Cli, SmtjTraceUnimodalExitsThree) {
    const RunResult r = run({"smtj-trace", "--tmr", "0", "--duration", "1", "--out", dir("o")});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("UnimodalTrace"), std::string::npos);
    EXPECT_FALSE(fs::exists(root_ / "o"));
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
    const auto cfg = write_file("c.json", R"({"duration_s": 3, "smtj": {"tau_mean_s": 1e-3}})");
    ASSERT_EQ(run({"smtj-trace", "--config", cfg, "--duration", "2", "--out", dir("o")}).code, 0);
    const json a = read_json(root_ / "o" / "analysis.json");
    EXPECT_EQ(a["config"]["duration_s"], 2.0);
    EXPECT_EQ(a["config"]["smtj"]["tau_mean_s"], 1e-3);
    EXPECT_EQ(a["config"]["smtj"]["r_parallel_ohm"], 27.6e3);
    EXPECT_EQ(a["n_samples"], 200'000);

    EXPECT_EQ(run({"smtj-trace", "--config", write_file("u.json", R"({"duration": 3})"), "--out",
                   dir("u")}).code,
              2);
    EXPECT_EQ(run({"smtj-trace", "--config", write_file("t.json", R"({"duration_s": "3"})"),
                   "--out", dir("t")}).code,
              2);
    EXPECT_EQ(run({"smtj-trace", "--config", write_file("j.json", "{"), "--out", dir("j")}).code,
              2);
    EXPECT_EQ(run({"smtj-trace", "--config", dir("none.json"), "--out", dir("n")}).code, 2);
    EXPECT_EQ(run(with(kFastTrace, {"--jobs", "0", "--out", dir("z")})).code, 2);
}

TEST_F(Cli, MetadataHeaderOnEveryCsvAndMetaInJson) {
    ASSERT_EQ(run(with(kFastGate, {"--all-modes", "--seed", "9", "--out", dir("o")})).code, 0);
    std::string hash;
    for (const auto& name : listing(dir("o"))) {
        const std::string text = slurp(root_ / "o" / name);
        if (name.ends_with(".csv")) {
            const std::string first = text.substr(0, text.find('\n'));
            EXPECT_EQ(first.rfind("# pbitsim ", 0), 0u) << name;
            EXPECT_NE(first.find("seed=9"), std::string::npos) << name;
            const std::string h = first.substr(first.find("config_hash=") + 12);
            if (hash.empty()) {
                hash = h;
            }
            EXPECT_EQ(h, hash) << name;
        } else {
            const json j = json::parse(text);
            EXPECT_EQ(j["meta"]["seed"], 9);
            EXPECT_EQ(j["meta"]["config_hash"], hash);
            EXPECT_EQ(j["meta"]["tool"], "pbitsim");
        }
    }
    EXPECT_EQ(hash.size(), 16u);
}

TEST_F(Cli, ConfigHashTracksConfig) {
    ASSERT_EQ(run({"metrics", "--out", dir("a")}).code, 0);
    ASSERT_EQ(run(with(kFastGate, {"--out", dir("b")})).code, 0);
    ASSERT_EQ(run(with(kFastGate, {"--i0", "1", "--out", dir("c")})).code, 0);
    const auto hash = [&](const char* d, const char* f) {
        return read_json(root_ / d / f)["meta"]["config_hash"].get<std::string>();
    };
    EXPECT_NE(hash("b", "summary.json"), hash("c", "summary.json"));
    EXPECT_NE(hash("a", "metrics.json"), hash("b", "summary.json"));
}

TEST_F(Cli, FieldSweepDefaultWindow) {
    const RunResult r = run({"field-sweep", "--out", dir("o")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json w = read_json(root_ / "o" / "window.json");
    EXPECT_NEAR(w["b_5050_T"].get<double>(), -7.22e-3, 0.02e-3);
    EXPECT_NEAR(w["b_low_T"].get<double>(), -7.5e-3, 0.05e-3);
    EXPECT_NEAR(w["b_high_T"].get<double>(), -6.9e-3, 0.05e-3);
}

TEST_F(Cli, FieldSweepNarrowFixture) {
    ASSERT_EQ(run({"field-sweep", "--width", "0.2e-3", "--step", "1e-5", "--out", dir("o")}).code,
              0);
    const json w = read_json(root_ / "o" / "window.json");
    EXPECT_NEAR(w["width_T"].get<double>(), 0.2e-3, 0.2 * 0.2e-3);
}

TEST_F(Cli, FieldSweepOutsideWindowExitsThree) {
    const RunResult r = run({"field-sweep", "--start", "-5e-3", "--stop", "-4e-3", "--out", dir("o")});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("NoWindow"), std::string::npos);
    EXPECT_FALSE(fs::exists(root_ / "o"));
    EXPECT_EQ(run({"field-sweep", "--step", "0", "--out", dir("s")}).code, 2);
    EXPECT_EQ(run({"field-sweep", "--start", "-7e-3", "--stop", "-7e-3", "--out", dir("t")}).code,
              2);
}

TEST_F(Cli, FieldSweepJobsInvariant) {
    ASSERT_EQ(run(with(kFastSweep, {"--out", dir("a")})).code, 0);
    ASSERT_EQ(run(with(kFastSweep, {"--jobs", "4", "--out", dir("b")})).code, 0);
    EXPECT_EQ(slurp(root_ / "a" / "sweep.csv"), slurp(root_ / "b" / "sweep.csv"));
    EXPECT_EQ(slurp(root_ / "a" / "window.json"), slurp(root_ / "b" / "window.json"));
}

TEST_F(Cli, TransferCalibratedDefaults) {
    const RunResult r = run({"transfer", "--detail", "--out", dir("o")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json s = read_json(root_ / "o" / "sigmoid.json");
    EXPECT_GE(s["center_V"].get<double>(), 0.595);
    EXPECT_LE(s["center_V"].get<double>(), 0.605);
    EXPECT_TRUE(s["rail_to_rail"].get<bool>());
    ASSERT_EQ(s["detail"].size(), 3u);
    const double low = s["detail"][0]["high_fraction"];
    const double mid = s["detail"][1]["high_fraction"];
    const double high = s["detail"][2]["high_fraction"];
    EXPECT_LT(low, 0.2);
    EXPECT_GT(mid, 0.3);
    EXPECT_LT(mid, 0.7);
    EXPECT_GT(high, 0.8);
    EXPECT_TRUE(fs::exists(root_ / "o" / "transfer_detail.csv"));
    EXPECT_TRUE(fs::exists(root_ / "o" / "transfer_samples.csv"));
    EXPECT_TRUE(fs::exists(root_ / "o" / "transfer_mean.csv"));
}

TEST_F(Cli, TransferGridErrors) {
    EXPECT_EQ(run({"transfer", "--config", write_file("g.json", R"({"grid_V": []})"), "--out",
                   dir("a")}).code,
              2);
    EXPECT_EQ(run({"transfer", "--grid", "0.6,0.59,0.61", "--out", dir("b")}).code, 2);
    EXPECT_EQ(run({"transfer", "--grid", "0.6,0.61", "--out", dir("c")}).code, 2);
    EXPECT_EQ(run({"transfer", "--seeding", "random", "--out", dir("d")}).code, 2);
    EXPECT_EQ(run({"transfer", "--samples", "0", "--out", dir("e")}).code, 2);
    const auto cfg = write_file("v.json", R"({"pbit": {"v_dd_V": 1.0}})");
    EXPECT_EQ(run({"transfer", "--config", cfg, "--out", dir("f")}).code, 2);
    for (const char* d : {"a", "b", "c", "d", "e", "f"}) {
        EXPECT_FALSE(fs::exists(root_ / d)) << d;
    }
}

TEST_F(Cli, TransferExplicitGridAndJobs) {
    const auto base = with(kFastTransfer, {"--grid", "0.59,0.598,0.6,0.602,0.61", "--seeding",
                                           "per_point"});
    ASSERT_EQ(run(with(base, {"--out", dir("a")})).code, 0);
    ASSERT_EQ(run(with(base, {"--jobs", "3", "--out", dir("b")})).code, 0);
    for (const char* f : {"transfer_samples.csv", "transfer_mean.csv", "sigmoid.json"}) {
        EXPECT_EQ(slurp(root_ / "a" / f), slurp(root_ / "b" / f)) << f;
    }
    const std::string means = slurp(root_ / "a" / "transfer_mean.csv");
    EXPECT_NE(means.find("\n0.598,"), std::string::npos);
}

TEST_F(Cli, GateExamples) {
    ASSERT_EQ(run({"gate", "--gate", "or", "--clamp", "C=0", "--out", dir("or0")}).code, 0);
    json s = read_json(root_ / "or0" / "summary.json");
    EXPECT_EQ(s["scenarios"][0]["modal_word"], "000");
    EXPECT_LT(s["scenarios"][0]["l1"].get<double>(), 0.02);

    ASSERT_EQ(run({"gate", "--gate", "and", "--clamp", "C=1", "--out", dir("and1")}).code, 0);
    s = read_json(root_ / "and1" / "summary.json");
    const json& row = s["scenarios"][0];
    EXPECT_EQ(row["modal_word"], "111");
    EXPECT_NEAR(row["modal_frequency"].get<double>(), row["oracle_modal_probability"].get<double>(),
                0.02);

    ASSERT_EQ(run({"gate", "--gate", "or", "--clamp", "C=1", "--out", dir("or1")}).code, 0);
    std::ifstream hist(root_ / "or1" / "histogram.csv");
    std::string line;
    double mass = 0.0;
    while (std::getline(hist, line)) {
        for (const char* w : {"011,", "101,", "111,"}) {
            if (line.rfind(w, 0) == 0) {
                mass += std::stod(line.substr(line.rfind(',') + 1));
            }
        }
    }
    EXPECT_GE(mass, 0.95);
}

TEST_F(Cli, GateAllModesAndJobs) {
    ASSERT_EQ(run(with(kFastGate, {"--all-modes", "--out", dir("a")})).code, 0);
    ASSERT_EQ(run(with(kFastGate, {"--all-modes", "--jobs", "4", "--out", dir("b")})).code, 0);
    const auto names = listing(dir("a"));
    EXPECT_EQ(names.size(), 9u);
    for (const char* s : {"or_C0", "or_C1", "and_C0", "and_C1"}) {
        EXPECT_TRUE(names.count(std::string("histogram_") + s + ".csv")) << s;
        EXPECT_TRUE(names.count(std::string("oracle_") + s + ".csv")) << s;
    }
    for (const auto& n : names) {
        EXPECT_EQ(slurp(root_ / "a" / n), slurp(root_ / "b" / n)) << n;
    }
    const json s = read_json(root_ / "a" / "summary.json");
    ASSERT_EQ(s["scenarios"].size(), 4u);
    EXPECT_EQ(s["scenarios"][0]["ground_states"], json({"000"}));
    EXPECT_EQ(s["scenarios"][3]["ground_states"], json({"111"}));
}

TEST_F(Cli, GateErrors) {
    const RunResult all = run({"gate", "--clamp", "A=1", "--clamp", "B=1", "--clamp", "C=1", "--out",
                         dir("a")});
    EXPECT_EQ(all.code, 3);
    EXPECT_NE(all.err.find("AllClamped"), std::string::npos);
    EXPECT_FALSE(fs::exists(root_ / "a"));
    EXPECT_EQ(run({"gate", "--clamp", "C=2", "--out", dir("b")}).code, 2);
    EXPECT_EQ(run({"gate", "--clamp", "D=1", "--out", dir("c")}).code, 2);
    EXPECT_EQ(run({"gate", "--gate", "xor", "--out", dir("d")}).code, 2);
    EXPECT_EQ(run({"gate", "--activation", "relu", "--out", dir("e")}).code, 2);
    EXPECT_EQ(run({"gate", "--sweeps", "0", "--out", dir("f")}).code, 2);
    EXPECT_EQ(run({"gate", "--gate", "custom", "--out", dir("g")}).code, 2);
}

TEST_F(Cli, GateCustomCircuit) {
    const auto circuit = write_file(
        "ferro.json", R"({"n": 2, "J": [[0, 1], [1, 0]], "h": [0, 0], "i0": 1, "clamps": {}})");
    const RunResult r = run({"gate", "--circuit", circuit, "--i0", "0.5", "--clamp", "0=1", "--sweeps",
                       "200000", "--out", dir("o")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json s = read_json(root_ / "o" / "summary.json");
    const json& row = s["scenarios"][0];
    EXPECT_EQ(row["gate"], "custom");
    EXPECT_EQ(row["clamps"], json({{"0", 1}}));
    EXPECT_EQ(row["modal_word"], "11");
    EXPECT_LT(row["l1"].get<double>(), 0.01);
}

TEST_F(Cli, GateDeviceActivation) {
    const RunResult r = run(with(kFastGate, {"--activation", "device", "--out", dir("o")}));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(root_ / "o" / "activation.csv"));
    const json s = read_json(root_ / "o" / "summary.json");
    EXPECT_EQ(s["scenarios"][0]["modal_word"], "111");
}

TEST_F(Cli, MetricsTable) {
    ASSERT_EQ(run({"metrics", "--out", dir("o")}).code, 0);
    const json m = read_json(root_ / "o" / "metrics.json");
    const double p4 = m["projection"]["total_W"];
    EXPECT_GE(p4, 4.8e-6);
    EXPECT_LE(p4, 4.9e-6);
    const std::string csv = slurp(root_ / "o" / "perf_points.csv");
    EXPECT_NE(csv.find("\nP1,"), std::string::npos);
    EXPECT_NE(csv.find("\nP2,"), std::string::npos);
    EXPECT_NE(csv.find("\nP4,"), std::string::npos);
    ASSERT_EQ(m["points"].size(), 5u);
    EXPECT_NEAR(m["points"][2]["throughput_flips_per_ns"].get<double>(), 2.4e-7, 0.05e-7);
    EXPECT_NEAR(m["points"][3]["throughput_flips_per_ns"].get<double>(), 1.45e-5, 0.01e-5);
}

TEST_F(Cli, SvgOutputs) {
    ASSERT_EQ(run(with(kFastTrace, {"--svg", "--out", dir("t")})).code, 0);
    ASSERT_EQ(run(with(kFastSweep, {"--svg", "--out", dir("s")})).code, 0);
    ASSERT_EQ(run(with(kFastTransfer, {"--svg", "--out", dir("x")})).code, 0);
    ASSERT_EQ(run(with(kFastGate, {"--svg", "--out", dir("g")})).code, 0);
    ASSERT_EQ(run({"metrics", "--svg", "--out", dir("m")}).code, 0);
    for (const char* f : {"t/trace.svg", "t/acf.svg", "s/sweep.svg", "x/transfer.svg",
                          "g/histogram.svg", "m/perf_points.svg"}) {
        const std::string text = slurp(root_ / f);
        EXPECT_EQ(text.rfind("<svg ", 0), 0u) << f;
        EXPECT_TRUE(text.ends_with("</svg>\n")) << f;
        EXPECT_EQ(text.find("nan"), std::string::npos) << f;
    }
}

TEST_F(Cli, EveryCommandIsSeedReproducible) {
    const std::vector<std::vector<std::string>> commands = {
        kFastTrace, kFastSweep, with(kFastTransfer, {"--detail"}),
        with(kFastGate, {"--all-modes"}), {"metrics"}};
    for (const auto& cmd : commands) {
        const std::string name = cmd.front();
        ASSERT_EQ(run(with(cmd, {"--seed", "5", "--svg", "--out", dir(name + "1")})).code, 0);
        ASSERT_EQ(run(with(cmd, {"--seed", "5", "--svg", "--out", dir(name + "2")})).code, 0);
        const auto files = listing(dir(name + "1"));
        EXPECT_EQ(files, listing(dir(name + "2")));
        for (const auto& f : files) {
            EXPECT_EQ(slurp(root_ / (name + "1") / f), slurp(root_ / (name + "2") / f))
                << name << '/' << f;
        }
        if (name != "metrics") {
            ASSERT_EQ(run(with(cmd, {"--seed", "6", "--out", dir(name + "3")})).code, 0);
            const auto data = name == "smtj-trace"    ? "trace.csv"
                              : name == "field-sweep" ? "sweep.csv"
                              : name == "transfer"    ? "transfer_samples.csv"
                                                      : "histogram_or_C1.csv";
            const std::string a = slurp(root_ / (name + "1") / data);
            const std::string b = slurp(root_ / (name + "3") / data);
            EXPECT_NE(a.substr(a.find('\n')), b.substr(b.find('\n'))) << name;
        }
    }
}
