#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pbitsim/pbit_device.hpp"

namespace pbitsim::circuit {

/// Bipolar node values, each -1 or +1.
using StateVector = std::vector<int>;

/// Digitized network state: bit = (m + 1) / 2, node 0 is the most
/// significant bit.
using Word = std::uint32_t;

inline constexpr std::size_t kMaxExactNodes = 20;

/// Weighted network of P-Bits. Couplings are row-major n x n.
struct PCircuit {
    std::size_t n = 0;
    std::vector<double> coupling;
    std::vector<double> bias;
    double i0 = 1.0;
    std::map<std::size_t, int> clamps;  // node -> +-1

    [[nodiscard]] double J(std::size_t i, std::size_t j) const { return coupling[i * n + j]; }

    /// Throws std::invalid_argument unless J is symmetric with zero diagonal,
    /// bias has n entries, i0 > 0 and every clamp is a valid node at +-1.
    void validate() const;
};

/// I_i = i0 (h_i + sum_j J_ij m_j).
[[nodiscard]] std::vector<double> synapse(const PCircuit& c, std::span<const int> m);

/// E(m) = -i0 (sum_i h_i m_i + sum_{i<j} J_ij m_i m_j).
[[nodiscard]] double energy(const PCircuit& c, std::span<const int> m);

struct IdealTanh {};

/// Activation looked up from a measured transfer curve: dimensionless input
/// I maps to v_in = v_dd/2 + scale * I, and the probability of a high output
/// is interpolated from the monotone table.
struct EmpiricalActivation {
    std::vector<double> v_in;    // V, ascending
    std::vector<double> p_high;  // non-decreasing
    double v_dd = 1.2;           // V
    double scale = 1.0;          // V per unit input

    [[nodiscard]] double probability(double input) const;
};

using ActivationModel = std::variant<IdealTanh, EmpiricalActivation>;

/// Probability of +1 for input I: (1 + tanh I) / 2 for IdealTanh.
[[nodiscard]] double probability_high(const ActivationModel& act, double input);

/// +1 when `draw` (uniform in [0, 1)) falls below probability_high.
[[nodiscard]] int pbit_update(double input, const ActivationModel& act, double draw);

/// Builds an Empirical activation from a transfer curve: per-point fraction
/// of samples above v_dd/2, pool-adjacent-violators cleanup to a monotone
/// table, and scale = 2 * fitted logistic width so the slope at the center
/// matches tanh.
[[nodiscard]] EmpiricalActivation empirical_activation(const device::TransferCurve& curve,
                                                       double v_dd);

/// Pool-adjacent-violators isotonic regression (equal weights).
[[nodiscard]] std::vector<double> isotonic_non_decreasing(std::span<const double> y);

[[nodiscard]] Word to_word(std::span<const int> m);
[[nodiscard]] StateVector from_word(Word w, std::size_t n);
[[nodiscard]] std::string word_string(Word w, std::size_t n);

class StateHistogram {
public:
    explicit StateHistogram(std::size_t n_bits = 0) : n_bits_(n_bits) {}

    void add(Word w, std::uint64_t count = 1);
    /// Associative, commutative accumulation of another run.
    void merge(const StateHistogram& other);

    [[nodiscard]] std::size_t n_bits() const noexcept { return n_bits_; }
    [[nodiscard]] std::uint64_t total() const noexcept { return total_; }
    [[nodiscard]] std::uint64_t count(Word w) const;
    [[nodiscard]] double frequency(Word w) const;
    [[nodiscard]] const std::map<Word, std::uint64_t>& counts() const noexcept { return counts_; }
    /// Most frequent word; ties resolve to the smallest word.
    [[nodiscard]] Word modal() const;

private:
    std::size_t n_bits_;
    std::map<Word, std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

using Distribution = std::map<Word, double>;

/// Sequential Gibbs sampling: free nodes start uniformly at random; each sweep
/// updates every free node once in a freshly shuffled order; after burn_in
/// sweeps, n_sweeps states are recorded (one per sweep).
/// Throws Error(AllClamped) when no node is free.
[[nodiscard]] StateHistogram gibbs_run(const PCircuit& c, const ActivationModel& act,
                                       std::size_t n_sweeps, std::size_t burn_in,
                                       std::uint64_t seed);

/// Exact Boltzmann distribution p(m) ~ exp(-E(m)) over the clamp-consistent
/// states. Throws Error(TooLarge) for n > 20.
[[nodiscard]] Distribution boltzmann_exact(const PCircuit& c);

/// Clamp-consistent states within `tolerance` of the minimum energy.
[[nodiscard]] std::vector<Word> ground_states(const PCircuit& c, double tolerance = 1e-9);

/// Three nodes (A, B, C), J = [[0,-1,2],[-1,0,2],[2,2,0]], h = (1,1,-2).
[[nodiscard]] PCircuit and_gate(double i0 = 2.0);
/// Same couplings, h = (-1,-1,2).
[[nodiscard]] PCircuit or_gate(double i0 = 2.0);

/// Fixes `node` at the bipolar image of `value` (0 -> -1, 1 -> +1).
[[nodiscard]] PCircuit clamp(PCircuit c, std::size_t node, int value);

/// L1 distance sum_w |f_hist(w) - p(w)| over the union of supports.
[[nodiscard]] double compare_to_oracle(const StateHistogram& hist, const Distribution& exact);

}  // namespace pbitsim::circuit
