// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cli/commands.hpp"
#include "oracles/oracles.hpp"
#include "pbitsim/metrics.hpp"
#include "pbitsim/pbit_device.hpp"
#include "pbitsim/pcircuit.hpp"
#include "pbitsim/smtj.hpp"
#include "pbitsim/trace_analysis.hpp"

using namespace pbitsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

void parallel(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                fn(i);
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
}

Outcome tmr_round_trip() {
    const analysis::LevelEstimate levels{27.6e3, 31.602e3, 0.5 * (27.6e3 + 31.602e3)};
    const double direct = analysis::tmr_from_levels(levels);

    // Same levels recovered from a noise-free two-level trace.
    smtj::SmtjParams p;
    const auto trace = smtj::sample_trajectory(p, p.b_5050, 5.0, 1e-5, 11, WarningFn{});
    const auto thr = analysis::threshold_states(trace);
    const double recovered = analysis::tmr_from_levels(thr.levels);
    const bool pass = std::abs(direct - 0.145) <= 0.0005 && std::abs(recovered - 0.145) <= 0.0005;
    return {pass, fmt("TMR from levels %.6f, from thresholded trace %.6f (target 0.145 +- 0.0005)",
                      direct, recovered)};
}

Outcome dwell_estimation() {
    struct Fixture {
        const char* name;
        double tau;
        double dt;
        double duration;
    };
    const Fixture fixtures[] = {{"4.2 ms", 4.2e-3, 1e-5, 50.0}, {"68.9 us", 68.9e-6, 1e-6, 1.0}};
    bool pass = true;
    std::string detail;
    for (const Fixture& f : fixtures) {
        smtj::SmtjParams p;
        p.tau_mean = f.tau;
        std::vector<int> ok(100, 0);
        std::vector<std::size_t> transitions(100, 0);
        parallel(100, [&](std::size_t seed) {
            const auto trace =
                smtj::sample_trajectory(p, p.b_5050, f.duration, f.dt, 1000 + seed, WarningFn{});
            try {
                const auto thr = analysis::threshold_states(trace);
                const auto d = analysis::analyze_dwell(thr.trace);
                transitions[seed] = analysis::count_runs(*thr.trace.labels) - 1;
                ok[seed] = std::abs(d.fit.tau - f.tau) <= 0.1 * f.tau &&
                           std::abs(d.fit.tau - d.direct) <= 0.1 * d.direct;
            } catch (const std::exception&) {
                ok[seed] = 0;
            }
        });
        const int passed = std::accumulate(ok.begin(), ok.end(), 0);
        const std::size_t min_transitions = *std::min_element(transitions.begin(), transitions.end());
        pass = pass && passed >= 90 && min_transitions >= 10000;
        detail += fmt("%s: %d/100 seeds within 10%% (min transitions %zu); ", f.name, passed,
                      min_transitions);
    }
    return {pass, detail};
}

Outcome stochastic_window() {
    smtj::SmtjParams p;
    const analysis::LevelEstimate levels{p.r_parallel, smtj::r_antiparallel(p),
                                         0.5 * (p.r_parallel + smtj::r_antiparallel(p))};
    const auto wide_grid = analysis::field_grid(-8.2e-3, -6.2e-3, 2e-5);
    const auto wide = analysis::extract_stochastic_window(
        analysis::simulate_field_sweep(p, wide_grid, 2.0, 1e-4, 21), levels);

    smtj::SmtjParams narrow_p = p;
    narrow_p.window_width = 0.2e-3;
    const auto narrow_grid = analysis::field_grid(-7.8e-3, -6.6e-3, 1e-5);
    const auto narrow = analysis::extract_stochastic_window(
        analysis::simulate_field_sweep(narrow_p, narrow_grid, 2.0, 1e-4, 22), levels);

    const bool pass = std::abs(wide.b_5050 - (-7.22e-3)) <= 0.02e-3 &&
                      std::abs(narrow.width() - 0.2e-3) <= 0.2 * 0.2e-3;
    return {pass, fmt("b_5050 %.4f mT (target -7.22 +- 0.02), window [%.3f, %.3f] mT; "
                      "0.2 mT fixture width %.4f mT (target within 20%%)",
                      wide.b_5050 * 1e3, wide.b_low * 1e3, wide.b_high * 1e3,
                      narrow.width() * 1e3)};
}

device::PbitParams calibrated() {
    return device::with_calibrated_nmos({});
}

Outcome transfer_curve() {
    const device::PbitParams p = calibrated();
    const auto grid = device::voltage_grid(0.58, 0.62, 0.002);
    const auto curve =
        device::transfer_curve(p, grid, 500, 0.1, p.smtj.b_5050, 31, device::GridSeeding::Shared,
                               WarningFn{});
    const auto fit = device::fit_sigmoid(curve, p.v_dd);

    bool rails = true;
    for (const auto& pt : curve.points) {
        rails = rails && pt.samples.size() == 500;
        for (double v : pt.samples) {
            rails = rails && (v == 0.0 || v == p.v_dd);
        }
    }
    std::vector<double> smooth;
    const auto& pts = curve.points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = std::min(i + 1, pts.size() - 1);
        double acc = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) {
            acc += pts[k].mean_v_out;
        }
        smooth.push_back(acc / static_cast<double>(hi - lo + 1));
    }
    const bool monotone = std::is_sorted(smooth.begin(), smooth.end());
    const bool pass = std::abs(fit.center - 0.6) <= 5e-3 && rails && monotone;
    return {pass, fmt("center %.5f V (target 0.6 +- 0.005), rail-to-rail %s, smoothed means "
                      "monotone %s",
                      fit.center, rails ? "yes" : "no", monotone ? "yes" : "no")};
}

Outcome plateau_widening() {
    const device::PbitParams base = calibrated();
    device::PbitParams high = base;
    high.smtj.tmr = 0.30;
    const auto grid = device::voltage_grid(0.58, 0.62, 0.0005);
    const auto c1 = device::transfer_curve(base, grid, 500, 0.1, base.smtj.b_5050, 41,
                                           device::GridSeeding::Shared, WarningFn{});
    const auto c2 = device::transfer_curve(high, grid, 500, 0.1, high.smtj.b_5050, 41,
                                           device::GridSeeding::Shared, WarningFn{});
    const double s1 = device::mixed_region_span(c1, base.v_dd);
    const double s2 = device::mixed_region_span(c2, high.v_dd);
    return {s2 > s1, fmt("mixed-region span %.2f mV at TMR 0.145 -> %.2f mV at TMR 0.30",
                         s1 * 1e3, s2 * 1e3)};
}

std::string words(const std::vector<circuit::Word>& ws) {
    std::string s;
    for (circuit::Word w : ws) {
        s += (s.empty() ? "" : ",") + circuit::word_string(w, 3);
    }
    return "{" + s + "}";
}

Outcome gate_ground_states() {
    bool pass = true;
    std::string detail;
    for (bool is_and : {true, false}) {
        const circuit::PCircuit c = is_and ? circuit::and_gate() : circuit::or_gate();
        const auto lib = circuit::ground_states(c);
        const auto ref = oracle::enumerate_ground_states(c.n, c.coupling, c.bias);
        std::vector<circuit::Word> truth;
        for (circuit::Word a = 0; a < 2; ++a) {
            for (circuit::Word b = 0; b < 2; ++b) {
                const circuit::Word out = is_and ? (a & b) : (a | b);
                truth.push_back(a << 2 | b << 1 | out);
            }
        }
        std::sort(truth.begin(), truth.end());
        std::vector<circuit::Word> sorted_lib = lib;
        std::sort(sorted_lib.begin(), sorted_lib.end());
        std::vector<circuit::Word> sorted_ref(ref.begin(), ref.end());
        std::sort(sorted_ref.begin(), sorted_ref.end());
        pass = pass && sorted_lib == truth && sorted_ref == truth;
        detail += fmt("%s ground states %s (truth table %s); ", is_and ? "AND" : "OR",
                      words(sorted_lib).c_str(), words(truth).c_str());
    }
    return {pass, detail};
}

Outcome gate_reproduction() {
    struct Mode {
        bool is_and;
        int c;
    };
    const Mode modes[] = {{false, 0}, {false, 1}, {true, 0}, {true, 1}};
    std::vector<circuit::StateHistogram> hists(4);
    parallel(4, [&](std::size_t k) {
        const auto base = modes[k].is_and ? circuit::and_gate(2.0) : circuit::or_gate(2.0);
        hists[k] = circuit::gibbs_run(circuit::clamp(base, 2, modes[k].c), circuit::IdealTanh{},
                                      1'000'000, 1000, 700 + k);
    });

    auto mass = [](const circuit::StateHistogram& h, std::initializer_list<circuit::Word> ws) {
        double m = 0.0;
        for (circuit::Word w : ws) {
            m += h.frequency(w);
        }
        return m;
    };

    bool pass = true;
    std::string detail;
    for (std::size_t k = 0; k < 4; ++k) {
        const Mode& m = modes[k];
        const auto base = m.is_and ? circuit::and_gate(2.0) : circuit::or_gate(2.0);
        const auto exact = oracle::enumerate_boltzmann(base.n, base.coupling, base.bias, 2.0,
                                                       {{2, m.c == 1 ? 1 : -1}});
        double l1 = 0.0;
        for (circuit::Word w = 0; w < 8; ++w) {
            const auto it = exact.find(w);
            l1 += std::abs(hists[k].frequency(w) - (it == exact.end() ? 0.0 : it->second));
        }
        const auto& h = hists[k];
        bool modal_ok = false;
        std::string check;
        if (!m.is_and && m.c == 0) {
            modal_ok = h.modal() == 0b000;
            check = "modal " + circuit::word_string(h.modal(), 3) + " (want 000)";
        } else if (!m.is_and && m.c == 1) {
            const double consistent = mass(h, {0b011, 0b101, 0b111});
            modal_ok = consistent >= 0.95;
            check = fmt("mass{011,101,111}=%.4f (want >= 0.95); as-labelled mass{001,010,111}=%.4f",
                        consistent, mass(h, {0b001, 0b010, 0b111}));
        } else if (m.is_and && m.c == 0) {
            const double consistent = mass(h, {0b000, 0b010, 0b100});
            modal_ok = consistent >= 0.95;
            check = fmt("mass{000,010,100}=%.4f (want >= 0.95); as-labelled mass{000,001,010}=%.4f",
                        consistent, mass(h, {0b000, 0b001, 0b010}));
        } else {
            modal_ok = h.modal() == 0b111;
            check = "modal " + circuit::word_string(h.modal(), 3) + " (want 111)";
        }
        pass = pass && l1 < 0.02 && modal_ok;
        detail += fmt("%s C=%d: L1 %.4f, %s; ", m.is_and ? "AND" : "OR", m.c, l1, check.c_str());
    }
    return {pass, detail};
}

Outcome metrics_projection() {
    const auto b = metrics::projection_breakdown();
    const double fast = metrics::throughput_from_dwell(68.9e-6);
    const bool pass = b.total_w >= 4.8e-6 && b.total_w <= 4.9e-6 &&
                      std::abs(b.inverter_w - 810e-9) <= 0.02 * 810e-9 &&
                      std::abs(b.throughput - 1.0) < 1e-12 && std::abs(fast - 1.45e-5) <= 0.005e-5;
    return {pass, fmt("P4 %.4f uW (static %.4f + inverter %.1f nW) at %.3g flips/ns; "
                      "68.9 us -> %.4g flips/ns",
                      b.total_w * 1e6, b.static_w * 1e6, b.inverter_w * 1e9, b.throughput, fast)};
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome cli_determinism() {
    const fs::path root = fs::temp_directory_path() / "pbitsim_acceptance_determinism";
    fs::remove_all(root);
    const std::vector<std::vector<std::string>> commands = {
        {"smtj-trace"}, {"field-sweep"}, {"transfer", "--detail"}, {"gate", "--all-modes"},
        {"metrics"}};
    bool pass = true;
    std::size_t files = 0;
    std::string detail;
    for (const auto& cmd : commands) {
        bool same = true;
        std::set<std::string> names[2];
        for (int rep = 0; rep < 2; ++rep) {
            std::vector<std::string> args = cmd;
            const fs::path out = root / (cmd.front() + std::to_string(rep));
            args.insert(args.end(), {"--seed", "2024", "--svg", "--out", out.string()});
            std::ostringstream sink;
            if (cli::run(args, sink, sink) != 0) {
                same = false;
                continue;
            }
            for (const auto& e : fs::directory_iterator(out)) {
                names[rep].insert(e.path().filename().string());
            }
        }
        same = same && !names[0].empty() && names[0] == names[1];
        for (const auto& n : names[0]) {
            same = same && slurp(root / (cmd.front() + "0") / n) == slurp(root / (cmd.front() + "1") / n);
            ++files;
        }
        pass = pass && same;
        if (!same) {
            detail += cmd.front() + " differs; ";
        }
    }
    fs::remove_all(root);
    detail += fmt("%zu files compared across 5 commands", files);
    return {pass, detail};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        Outcome (*check)();
    };
    const Criterion criteria[] = {
        {1, "TMR round trip", tmr_round_trip},
        {2, "dwell estimation", dwell_estimation},
        {3, "stochastic window", stochastic_window},
        {4, "transfer curve", transfer_curve},
        {5, "plateau widening", plateau_widening},
        {6, "gate ground states", gate_ground_states},
        {7, "inverted gate sampling", gate_reproduction},
        {8, "power and throughput", metrics_projection},
        {9, "CLI determinism", cli_determinism},
    };
    int failed = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %d %s: %s (%.1f s) %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL",
                    secs, o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d/9 criteria passed\n", 9 - failed);
    return failed == 0 ? 0 : 1;
}
