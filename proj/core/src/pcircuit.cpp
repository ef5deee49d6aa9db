#include "pbitsim/pcircuit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "pbitsim/errors.hpp"
#include "pbitsim/random.hpp"

namespace pbitsim::circuit {

namespace {

void require(bool ok, const char* message) {
    if (!ok) {
        throw std::invalid_argument(message);
    }
}

bool clamp_consistent(const PCircuit& c, std::span<const int> m) {
    return std::all_of(c.clamps.begin(), c.clamps.end(),
                       [&](const auto& kv) { return m[kv.first] == kv.second; });
}

PCircuit gate_with_bias(double i0, std::vector<double> bias) {
    PCircuit c;
    c.n = 3;
    c.coupling = {0.0, -1.0, 2.0,
                  -1.0, 0.0, 2.0,
                  2.0, 2.0, 0.0};
    c.bias = std::move(bias);
    c.i0 = i0;
    c.validate();
    return c;
}

}  // namespace

void PCircuit::validate() const {
    require(n >= 1, "PCircuit: need at least one node");
    require(coupling.size() == n * n, "PCircuit: coupling must be n x n");
    require(bias.size() == n, "PCircuit: bias must have n entries");
    require(std::isfinite(i0) && i0 > 0.0, "PCircuit: i0 must be > 0");
    for (std::size_t i = 0; i < n; ++i) {
        require(J(i, i) == 0.0, "PCircuit: coupling diagonal must be zero");
        require(std::isfinite(bias[i]), "PCircuit: bias must be finite");
        for (std::size_t j = i + 1; j < n; ++j) {
            require(std::isfinite(J(i, j)) && J(i, j) == J(j, i),
                    "PCircuit: coupling must be symmetric");
        }
    }
    for (const auto& [node, value] : clamps) {
        require(node < n, "PCircuit: clamp node out of range");
        require(value == -1 || value == 1, "PCircuit: clamp value must be +-1");
    }
}

std::vector<double> synapse(const PCircuit& c, std::span<const int> m) {
    require(m.size() == c.n, "synapse: state size does not match circuit");
    std::vector<double> input(c.n);
    for (std::size_t i = 0; i < c.n; ++i) {
        double acc = c.bias[i];
        for (std::size_t j = 0; j < c.n; ++j) {
            acc += c.J(i, j) * m[j];
        }
        input[i] = c.i0 * acc;
    }
    return input;
}

double energy(const PCircuit& c, std::span<const int> m) {
    require(m.size() == c.n, "energy: state size does not match circuit");
    double acc = 0.0;
    for (std::size_t i = 0; i < c.n; ++i) {
        acc += c.bias[i] * m[i];
        for (std::size_t j = i + 1; j < c.n; ++j) {
            acc += c.J(i, j) * m[i] * m[j];
        }
    }
    return -c.i0 * acc;
}

double EmpiricalActivation::probability(double input) const {
    const double v = 0.5 * v_dd + scale * input;
    if (v <= v_in.front()) {
        return p_high.front();
    }
    if (v >= v_in.back()) {
        return p_high.back();
    }
    const auto it = std::upper_bound(v_in.begin(), v_in.end(), v);
    const auto hi = static_cast<std::size_t>(it - v_in.begin());
    const std::size_t lo = hi - 1;
    const double f = (v - v_in[lo]) / (v_in[hi] - v_in[lo]);
    return p_high[lo] + f * (p_high[hi] - p_high[lo]);
}

double probability_high(const ActivationModel& act, double input) {
    if (std::holds_alternative<IdealTanh>(act)) {
        return 0.5 * (1.0 + std::tanh(input));
    }
    return std::get<EmpiricalActivation>(act).probability(input);
}

int pbit_update(double input, const ActivationModel& act, double draw) {
    return draw < probability_high(act, input) ? 1 : -1;
}

std::vector<double> isotonic_non_decreasing(std::span<const double> y) {
    struct Block {
        double sum;
        std::size_t count;
    };
    std::vector<Block> blocks;
    for (double v : y) {
        blocks.push_back({v, 1});
        while (blocks.size() > 1) {
            const Block& b = blocks[blocks.size() - 1];
            const Block& a = blocks[blocks.size() - 2];
            if (a.sum / static_cast<double>(a.count) <= b.sum / static_cast<double>(b.count)) {
                break;
            }
            const Block merged{a.sum + b.sum, a.count + b.count};
            blocks.pop_back();
            blocks.back() = merged;
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (const Block& b : blocks) {
        out.insert(out.end(), b.count, b.sum / static_cast<double>(b.count));
    }
    return out;
}

EmpiricalActivation empirical_activation(const device::TransferCurve& curve, double v_dd) {
    require(curve.points.size() >= 3, "empirical_activation: need at least 3 curve points");
    device::TransferCurve sorted = curve;
    std::sort(sorted.points.begin(), sorted.points.end(),
              [](const auto& a, const auto& b) { return a.v_in < b.v_in; });

    EmpiricalActivation act;
    act.v_dd = v_dd;
    std::vector<double> raw;
    for (const auto& tp : sorted.points) {
        require(act.v_in.empty() || tp.v_in > act.v_in.back(),
                "empirical_activation: duplicate input voltages");
        act.v_in.push_back(tp.v_in);
        raw.push_back(device::high_fraction(tp, v_dd));
    }
    act.p_high = isotonic_non_decreasing(raw);
    act.scale = 2.0 * device::fit_sigmoid(sorted, v_dd).width;
    return act;
}

Word to_word(std::span<const int> m) {
    require(m.size() <= 32, "to_word: at most 32 nodes");
    Word w = 0;
    for (int v : m) {
        w = (w << 1) | (v > 0 ? 1u : 0u);
    }
    return w;
}

StateVector from_word(Word w, std::size_t n) {
    StateVector m(n);
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = ((w >> (n - 1 - i)) & 1u) ? 1 : -1;
    }
    return m;
}

std::string word_string(Word w, std::size_t n) {
    std::string s(n, '0');
    for (std::size_t i = 0; i < n; ++i) {
        if ((w >> (n - 1 - i)) & 1u) {
            s[i] = '1';
        }
    }
    return s;
}

void StateHistogram::add(Word w, std::uint64_t count) {
    counts_[w] += count;
    total_ += count;
}

void StateHistogram::merge(const StateHistogram& other) {
    require(other.n_bits_ == n_bits_, "StateHistogram::merge: node counts differ");
    for (const auto& [w, c] : other.counts_) {
        add(w, c);
    }
}

std::uint64_t StateHistogram::count(Word w) const {
    const auto it = counts_.find(w);
    return it == counts_.end() ? 0 : it->second;
}

double StateHistogram::frequency(Word w) const {
    return total_ == 0 ? 0.0 : static_cast<double>(count(w)) / static_cast<double>(total_);
}

Word StateHistogram::modal() const {
    require(total_ > 0, "StateHistogram::modal: empty histogram");
    Word best = 0;
    std::uint64_t best_count = 0;
    for (const auto& [w, c] : counts_) {
        if (c > best_count) {
            best = w;
            best_count = c;
        }
    }
    return best;
}

StateHistogram gibbs_run(const PCircuit& c, const ActivationModel& act, std::size_t n_sweeps,
                         std::size_t burn_in, std::uint64_t seed) {
    c.validate();
    require(n_sweeps >= 1, "gibbs_run: n_sweeps must be >= 1");
    require(c.n <= 32, "gibbs_run: at most 32 nodes");

    std::vector<std::size_t> free_nodes;
    for (std::size_t i = 0; i < c.n; ++i) {
        if (!c.clamps.contains(i)) {
            free_nodes.push_back(i);
        }
    }
    if (free_nodes.empty()) {
        throw Error(ErrorKind::AllClamped, "every node is clamped");
    }

    Rng rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    StateVector m(c.n);
    for (std::size_t i = 0; i < c.n; ++i) {
        const auto it = c.clamps.find(i);
        m[i] = it != c.clamps.end() ? it->second : (uniform(rng) < 0.5 ? -1 : 1);
    }

    StateHistogram hist(c.n);
    std::vector<std::size_t> order = free_nodes;
    for (std::size_t sweep = 0; sweep < burn_in + n_sweeps; ++sweep) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i : order) {
            double acc = c.bias[i];
            for (std::size_t j = 0; j < c.n; ++j) {
                acc += c.J(i, j) * m[j];
            }
            m[i] = pbit_update(c.i0 * acc, act, uniform(rng));
        }
        if (sweep >= burn_in) {
            hist.add(to_word(m));
        }
    }
    return hist;
}

Distribution boltzmann_exact(const PCircuit& c) {
    c.validate();
    if (c.n > kMaxExactNodes) {
        throw Error(ErrorKind::TooLarge, "exact enumeration limited to 20 nodes");
    }
    const Word states = Word{1} << c.n;
    std::vector<std::pair<Word, double>> energies;
    double e_min = std::numeric_limits<double>::infinity();
    for (Word w = 0; w < states; ++w) {
        const StateVector m = from_word(w, c.n);
        if (!clamp_consistent(c, m)) {
            continue;
        }
        const double e = energy(c, m);
        energies.emplace_back(w, e);
        e_min = std::min(e_min, e);
    }
    double z = 0.0;
    for (const auto& [w, e] : energies) {
        z += std::exp(-(e - e_min));
    }
    Distribution dist;
    for (const auto& [w, e] : energies) {
        dist[w] = std::exp(-(e - e_min)) / z;
    }
    return dist;
}

std::vector<Word> ground_states(const PCircuit& c, double tolerance) {
    c.validate();
    if (c.n > kMaxExactNodes) {
        throw Error(ErrorKind::TooLarge, "exact enumeration limited to 20 nodes");
    }
    const Word states = Word{1} << c.n;
    double e_min = std::numeric_limits<double>::infinity();
    std::vector<std::pair<Word, double>> energies;
    for (Word w = 0; w < states; ++w) {
        const StateVector m = from_word(w, c.n);
        if (!clamp_consistent(c, m)) {
            continue;
        }
        energies.emplace_back(w, energy(c, m));
        e_min = std::min(e_min, energies.back().second);
    }
    std::vector<Word> out;
    for (const auto& [w, e] : energies) {
        if (e <= e_min + tolerance) {
            out.push_back(w);
        }
    }
    return out;
}

PCircuit and_gate(double i0) {
    return gate_with_bias(i0, {1.0, 1.0, -2.0});
}

PCircuit or_gate(double i0) {
    return gate_with_bias(i0, {-1.0, -1.0, 2.0});
}

PCircuit clamp(PCircuit c, std::size_t node, int value) {
    require(node < c.n, "clamp: node index out of range");
    require(value == 0 || value == 1, "clamp: value must be 0 or 1");
    c.clamps[node] = 2 * value - 1;
    return c;
}

double compare_to_oracle(const StateHistogram& hist, const Distribution& exact) {
    require(hist.total() > 0, "compare_to_oracle: empty histogram");
    double l1 = 0.0;
    for (const auto& [w, p] : exact) {
        l1 += std::abs(hist.frequency(w) - p);
    }
    for (const auto& [w, count] : hist.counts()) {
        if (!exact.contains(w)) {
            l1 += hist.frequency(w);
        }
    }
    return l1;
}

}  // namespace pbitsim::circuit
