#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdht/engine.hpp"
#include "sdht/group.hpp"
#include "sdht/prob.hpp"
#include "sdht/rng.hpp"

namespace sdht {

// Fan-in-2 boolean formula over per-client input bits.
struct BooleanFormula {
  enum class Kind { kLeaf, kNot, kAnd, kOr };

  Kind kind = Kind::kLeaf;
  std::size_t client = 0;  // leaf only
  std::size_t bit = 0;     // leaf only
  std::vector<BooleanFormula> children;

  static BooleanFormula leaf(std::size_t client, std::size_t bit = 0);
  static BooleanFormula negation(BooleanFormula f);
  static BooleanFormula conjunction(BooleanFormula lhs, BooleanFormula rhs);
  static BooleanFormula disjunction(BooleanFormula lhs, BooleanFormula rhs);

  // Negations are free in the compiler, so they do not add depth.
  unsigned depth() const;
  bool evaluate(const std::vector<uint32_t>& inputs) const;
  std::size_t num_clients() const;
  // Per-client input domain sizes: 2^(highest referenced bit + 1).
  std::vector<uint64_t> input_sizes() const;
};

struct ProgramInstruction {
  std::size_t client = 0;
  std::size_t bit = 0;
  uint32_t g_if_0 = 0;
  uint32_t g_if_1 = 0;
};

// Group program: the product of selected elements lands in {identity,
// accept_element} for every input.
struct PermBranchingProgram {
  Group group;
  std::vector<ProgramInstruction> instructions;
  uint32_t accept_element = 0;
  std::vector<uint64_t> input_sizes;  // per-client input domains
};

uint32_t program_product(const PermBranchingProgram& program,
                         const std::vector<uint32_t>& inputs);

// Enumerates all inputs and checks the two-coset invariant; throws
// precondition_error on violation, budget_error when the input space is not
// enumerable.
void validate_program(const PermBranchingProgram& program);

// Width-5 compilation over the symmetric group on 5 points; length is at
// most 4^depth. Deterministic: fixed base commutator pair and lowest-index
// conjugator search.
PermBranchingProgram barrington_compile(const BooleanFormula& formula);

// Cyclic-group program for 1{sum of the n input bits mod m lies in S}.
// Requires the reachable sums to land in exactly two cosets: identity for
// the 0-labeled sums and one fixed nonzero residue for the 1-labeled ones.
PermBranchingProgram counter_program(uint32_t n, uint32_t modulus,
                                     const std::vector<uint32_t>& residues);

// Majority of three bits over the unit upper-triangular group: eight
// instructions whose product is (0, 0, maj) in the (a, b, c) coordinates.
PermBranchingProgram majority3_program();

// One-round PSM protocol with an enumerable mixed-radix key domain.
// Messages are per-position symbol vectors so that long group programs do
// not need packed message indices.
struct PsmProtocol {
  std::size_t num_clients = 0;
  std::vector<uint64_t> input_sizes;
  std::vector<uint64_t> key_radixes;
  std::vector<std::vector<uint64_t>> message_symbol_alphabets;  // [client][pos]
  std::function<std::vector<uint32_t>(std::size_t client, uint64_t x,
                                      const std::vector<uint64_t>& key)>
      encode;
  // Returns 0/1, or -1 when the messages decode to neither coset.
  std::function<int(const std::vector<std::vector<uint32_t>>&)> decode;
  // Coarse transcript statistic used by sampled verification; defaults to
  // the decoded bit when unset (product_alphabet == 0).
  std::function<uint64_t(const std::vector<std::vector<uint32_t>>&)>
      product_statistic;
  uint64_t product_alphabet = 0;

  uint64_t key_count() const;  // saturates at UINT64_MAX
  uint64_t key_bits() const;
  uint64_t comm_bits() const;  // sum over clients of ceil(log2 message space)
  std::vector<uint64_t> key_at(uint64_t index) const;
  std::vector<uint64_t> sample_key(CounterRng& rng) const;
};

// Two-party one-time-table protocol: the key is a uniform permutation of
// client 2's domain plus a uniform pad; client 1 sends its permuted padded
// table row, client 2 sends its permuted index and that pad bit.
PsmProtocol fkn_two_party(const std::vector<std::vector<int>>& truth_table);

// Randomizes a validated group program with uniform in-between elements
// g_1..g_{L-1}: instruction j's owner sends g_{j-1}^{-1} sigma_j(x) g_j.
PsmProtocol kilian_randomize(const PermBranchingProgram& program);

enum class VerifyMode { kExhaustive, kSampled };

struct PsmVerifyReport {
  std::string mode;
  bool correctness_ok = false;
  bool privacy_ok = false;
  uint64_t trials = 0;   // sampled mode
  uint64_t seed = 0;     // sampled mode
  std::vector<double> p_values;
  double min_p_value = 1.0;
  double significance = 0.0;  // Bonferroni-adjusted per-test threshold
  std::vector<std::string> counterexamples;

  bool passed() const { return correctness_ok && privacy_ok; }
};

// Checks both protocol clauses against a flat truth table indexed with
// client 0 fastest: index = x_0 + |X_0| (x_1 + |X_1| (x_2 + ...)).
PsmVerifyReport psm_verify(const PsmProtocol& protocol,
                           const std::vector<int>& f_table, VerifyMode mode,
                           uint64_t trials = 100000, uint64_t seed = 1);

// Verifies the protocol, then evaluates it as an SDHT scheme: epsilon is the
// detection error of f under the classes, delta the measured transcript
// divergence (pairwise within classes and against the per-output anchor
// laws). Throws audit_error if delta exceeds epsilon beyond tolerance.
EvaluationReport psm_to_sdht(const std::vector<int>& f_table,
                             const PsmProtocol& protocol,
                             const std::vector<FiniteDistribution>& h0,
                             const std::vector<FiniteDistribution>& h1,
                             VerifyMode mode, uint64_t trials = 100000,
                             uint64_t seed = 1);

struct CostTargets {
  unsigned comm_exponent = 0;
  unsigned key_exponent = 0;
  double comm_bits_bound = 0.0;
  double key_bits_bound = 0.0;
};

// Reference asymptotic cost targets for report footers: communication
// exponent 2*ceil(|X|/3), key exponent one higher.
CostTargets reference_cost_targets(uint32_t n, std::size_t alphabet_size);

}  // namespace sdht
