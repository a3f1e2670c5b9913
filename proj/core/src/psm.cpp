#include "sdht/psm.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "sdht/errors.hpp"
#include "sdht/stats.hpp"

namespace sdht {
namespace {

constexpr uint64_t kExhaustiveWorkBudget = 200'000'000;
constexpr uint64_t kDenseTranscriptLimit = uint64_t{1} << 25;

uint64_t ceil_log2_u64(uint64_t x) {
  if (x <= 1) return 0;
  return static_cast<uint64_t>(std::bit_width(x - 1));
}

std::string coords_string(const std::vector<uint64_t>& coords) {
  std::string s = "(";
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(coords[i]);
  }
  s += ")";
  return s;
}

std::vector<uint64_t> unflatten(uint64_t flat,
                                const std::vector<uint64_t>& sizes) {
  std::vector<uint64_t> coords(sizes.size(), 0);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    coords[i] = flat % sizes[i];
    flat /= sizes[i];
  }
  return coords;
}

// Product of sizes, saturating at UINT64_MAX.
uint64_t flat_count(const std::vector<uint64_t>& sizes) {
  uint64_t count = 1;
  for (uint64_t s : sizes) {
    if (s == 0) throw precondition_error("flat_count: empty domain");
    if (count > std::numeric_limits<uint64_t>::max() / s) {
      return std::numeric_limits<uint64_t>::max();
    }
    count *= s;
  }
  return count;
}

// In-place mixed-radix counter over a key (or input) domain. Visits every
// word starting from all-zeros; advance() returns false after the last one.
struct Odometer {
  const std::vector<uint64_t>& radixes;
  std::vector<uint64_t> word;

  explicit Odometer(const std::vector<uint64_t>& r)
      : radixes(r), word(r.size(), 0) {}

  bool advance() {
    for (std::size_t i = 0; i < word.size(); ++i) {
      if (++word[i] < radixes[i]) return true;
      word[i] = 0;
    }
    return false;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Boolean formulas

BooleanFormula BooleanFormula::leaf(std::size_t client, std::size_t bit) {
  BooleanFormula f;
  f.kind = Kind::kLeaf;
  f.client = client;
  f.bit = bit;
  return f;
}

BooleanFormula BooleanFormula::negation(BooleanFormula f) {
  BooleanFormula g;
  g.kind = Kind::kNot;
  g.children.push_back(std::move(f));
  return g;
}

BooleanFormula BooleanFormula::conjunction(BooleanFormula lhs,
                                           BooleanFormula rhs) {
  BooleanFormula g;
  g.kind = Kind::kAnd;
  g.children.push_back(std::move(lhs));
  g.children.push_back(std::move(rhs));
  return g;
}

BooleanFormula BooleanFormula::disjunction(BooleanFormula lhs,
                                           BooleanFormula rhs) {
  BooleanFormula g;
  g.kind = Kind::kOr;
  g.children.push_back(std::move(lhs));
  g.children.push_back(std::move(rhs));
  return g;
}

namespace {

void check_arity(const BooleanFormula& f) {
  const std::size_t want = f.kind == BooleanFormula::Kind::kLeaf ? 0
                           : f.kind == BooleanFormula::Kind::kNot ? 1
                                                                  : 2;
  if (f.children.size() != want) {
    throw precondition_error("BooleanFormula: malformed node");
  }
}

}  // namespace

unsigned BooleanFormula::depth() const {
  check_arity(*this);
  switch (kind) {
    case Kind::kLeaf:
      return 0;
    case Kind::kNot:
      return children[0].depth();
    case Kind::kAnd:
    case Kind::kOr:
      return 1 + std::max(children[0].depth(), children[1].depth());
  }
  throw precondition_error("BooleanFormula: bad node kind");
}

bool BooleanFormula::evaluate(const std::vector<uint32_t>& inputs) const {
  check_arity(*this);
  switch (kind) {
    case Kind::kLeaf:
      if (client >= inputs.size()) {
        throw dimension_error("BooleanFormula::evaluate: missing client input");
      }
      return ((inputs[client] >> bit) & 1u) != 0;
    case Kind::kNot:
      return !children[0].evaluate(inputs);
    case Kind::kAnd:
      return children[0].evaluate(inputs) && children[1].evaluate(inputs);
    case Kind::kOr:
      return children[0].evaluate(inputs) || children[1].evaluate(inputs);
  }
  throw precondition_error("BooleanFormula: bad node kind");
}

namespace {

void collect_bits(const BooleanFormula& f, std::vector<std::size_t>& bits) {
  check_arity(f);
  if (f.kind == BooleanFormula::Kind::kLeaf) {
    if (f.client >= bits.size()) bits.resize(f.client + 1, 1);
    bits[f.client] = std::max(bits[f.client], f.bit + 1);
    return;
  }
  for (const auto& child : f.children) collect_bits(child, bits);
}

}  // namespace

std::size_t BooleanFormula::num_clients() const {
  std::vector<std::size_t> bits;
  collect_bits(*this, bits);
  return bits.empty() ? 1 : bits.size();
}

std::vector<uint64_t> BooleanFormula::input_sizes() const {
  std::vector<std::size_t> bits;
  collect_bits(*this, bits);
  if (bits.empty()) bits.assign(1, 1);
  std::vector<uint64_t> sizes(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] >= 63) {
      throw precondition_error("BooleanFormula: client input wider than 62 bits");
    }
    sizes[i] = std::max<std::size_t>(bits[i], 1);
    sizes[i] = uint64_t{1} << sizes[i];
  }
  return sizes;
}

// ---------------------------------------------------------------------------
// Group programs

uint32_t program_product(const PermBranchingProgram& program,
                         const std::vector<uint32_t>& inputs) {
  uint32_t acc = program.group.identity();
  for (const auto& ins : program.instructions) {
    if (ins.client >= inputs.size()) {
      throw dimension_error("program_product: instruction references a missing client");
    }
    const bool bit = ((inputs[ins.client] >> ins.bit) & 1u) != 0;
    acc = program.group.mul(acc, bit ? ins.g_if_1 : ins.g_if_0);
  }
  return acc;
}

void validate_program(const PermBranchingProgram& program) {
  if (program.instructions.empty()) {
    throw precondition_error("validate_program: empty instruction list");
  }
  if (program.accept_element == program.group.identity()) {
    throw precondition_error(
        "validate_program: accept element coincides with the identity");
  }
  if (program.accept_element >= program.group.order()) {
    throw precondition_error("validate_program: accept element outside the group");
  }
  if (program.input_sizes.empty()) {
    throw precondition_error("validate_program: missing input domain sizes");
  }
  for (const auto& ins : program.instructions) {
    if (ins.client >= program.input_sizes.size()) {
      throw precondition_error(
          "validate_program: instruction references a missing client");
    }
    if (ins.g_if_0 >= program.group.order() ||
        ins.g_if_1 >= program.group.order()) {
      throw precondition_error("validate_program: instruction element outside the group");
    }
  }
  const uint64_t combos = flat_count(program.input_sizes);
  if (combos > kEnumerationBudget) {
    throw budget_error(
        "validate_program: input enumeration exceeds the budget");
  }
  std::vector<uint32_t> inputs(program.input_sizes.size(), 0);
  for (uint64_t flat = 0; flat < combos; ++flat) {
    const uint32_t prod = program_product(program, inputs);
    if (prod != program.group.identity() &&
        prod != program.accept_element) {
      throw precondition_error(
          "validate_program: product escapes the identity/accept pair");
    }
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (++inputs[i] < program.input_sizes[i]) break;
      inputs[i] = 0;
    }
  }
}

namespace {

// Deterministic: first group element (by index) conjugating `from` to `to`.
uint32_t find_conjugator(const Group& g, uint32_t from, uint32_t to) {
  for (uint32_t c = 0; c < g.order(); ++c) {
    if (g.mul(g.mul(c, from), g.inverse(c)) == to) return c;
  }
  throw construction_error(
      "barrington_compile: target is not conjugate to the base commutator");
}

// Emits instructions whose product is `target` when f holds and the identity
// otherwise.
void compile_into(const Group& g, uint32_t sigma, uint32_t tau, uint32_t kappa,
                  const BooleanFormula& f, uint32_t target,
                  std::vector<ProgramInstruction>& out) {
  check_arity(f);
  switch (f.kind) {
    case BooleanFormula::Kind::kLeaf:
      out.push_back({f.client, f.bit, g.identity(), target});
      return;
    case BooleanFormula::Kind::kNot: {
      // Child emits target^{ -1 } on true; appending a fixed right factor of
      // target to the last instruction swaps the two outcomes.
      compile_into(g, sigma, tau, kappa, f.children[0], g.inverse(target), out);
      ProgramInstruction& last = out.back();
      last.g_if_0 = g.mul(last.g_if_0, target);
      last.g_if_1 = g.mul(last.g_if_1, target);
      return;
    }
    case BooleanFormula::Kind::kOr: {
      BooleanFormula rewritten = BooleanFormula::negation(
          BooleanFormula::conjunction(BooleanFormula::negation(f.children[0]),
                                      BooleanFormula::negation(f.children[1])));
      compile_into(g, sigma, tau, kappa, rewritten, target, out);
      return;
    }
    case BooleanFormula::Kind::kAnd: {
      // target = c kappa c^{-1} = [c sigma c^{-1}, c tau c^{-1}].
      const uint32_t c = find_conjugator(g, kappa, target);
      const uint32_t alpha = g.mul(g.mul(c, sigma), g.inverse(c));
      const uint32_t beta = g.mul(g.mul(c, tau), g.inverse(c));
      compile_into(g, sigma, tau, kappa, f.children[0], alpha, out);
      compile_into(g, sigma, tau, kappa, f.children[1], beta, out);
      compile_into(g, sigma, tau, kappa, f.children[0], g.inverse(alpha), out);
      compile_into(g, sigma, tau, kappa, f.children[1], g.inverse(beta), out);
      return;
    }
  }
  throw precondition_error("BooleanFormula: bad node kind");
}

}  // namespace

PermBranchingProgram barrington_compile(const BooleanFormula& formula) {
  PermBranchingProgram program;
  program.group = Group::symmetric(5);
  const Group& g = program.group;
  const uint32_t sigma = g.element_of_perm({1, 2, 3, 4, 0});
  const uint32_t tau = g.element_of_perm({1, 3, 0, 4, 2});
  const uint32_t kappa =
      g.mul(g.mul(g.mul(sigma, tau), g.inverse(sigma)), g.inverse(tau));
  compile_into(g, sigma, tau, kappa, formula, sigma, program.instructions);
  program.accept_element = sigma;
  program.input_sizes = formula.input_sizes();
  return program;
}

PermBranchingProgram counter_program(uint32_t n, uint32_t modulus,
                                     const std::vector<uint32_t>& residues) {
  if (n == 0) throw precondition_error("counter_program: need at least one client");
  if (modulus < 2) throw precondition_error("counter_program: modulus must be at least 2");
  if (residues.empty()) throw precondition_error("counter_program: empty residue set");
  std::vector<bool> in_set(modulus, false);
  for (uint32_t r : residues) {
    if (r >= modulus) throw precondition_error("counter_program: residue outside the modulus");
    in_set[r] = true;
  }
  if (in_set[0]) {
    throw precondition_error(
        "counter_program: residue 0 would put accepted sums in the identity coset");
  }
  // The product on input x is (sum x_i) mod modulus, so every reachable sum
  // must land on the identity or on one shared accept residue.
  std::optional<uint32_t> accept;
  for (uint32_t k = 0; k <= n; ++k) {
    const uint32_t r = k % modulus;
    if (in_set[r]) {
      if (accept && *accept != r) {
        throw precondition_error(
            "counter_program: accepted sums spread over several residues");
      }
      accept = r;
    } else if (r != 0) {
      throw precondition_error(
          "counter_program: reachable sum lands outside the identity/accept residues");
    }
  }
  if (!accept) {
    throw precondition_error(
        "counter_program: predicate is constant over the reachable sums");
  }
  PermBranchingProgram program;
  program.group = Group::cyclic(modulus);
  program.accept_element = *accept;
  program.input_sizes.assign(n, 2);
  program.instructions.reserve(n);
  for (uint32_t j = 0; j < n; ++j) {
    program.instructions.push_back({j, 0, 0u, 1u});
  }
  return program;
}

PermBranchingProgram majority3_program() {
  PermBranchingProgram program;
  program.group = Group::unitriangular3_f2();
  // Elements by index a + 2b + 4c.
  const uint32_t a = 1;  // (1,0,0)
  const uint32_t b = 2;  // (0,1,0)
  // Interleaved so the running product ends at (0, 0, x0 x1 + x1 x2 + x0 x2).
  program.instructions = {
      {1, 0, 0, a}, {0, 0, 0, b}, {2, 0, 0, b}, {1, 0, 0, a},
      {0, 0, 0, a}, {2, 0, 0, b}, {0, 0, 0, a}, {0, 0, 0, b},
  };
  program.accept_element = 4;  // (0,0,1)
  program.input_sizes = {2, 2, 2};
  return program;
}

// ---------------------------------------------------------------------------
// Protocol plumbing

uint64_t PsmProtocol::key_count() const { return flat_count(key_radixes); }

uint64_t PsmProtocol::key_bits() const {
  const uint64_t count = key_count();
  if (count != std::numeric_limits<uint64_t>::max()) return ceil_log2_u64(count);
  long double bits = 0.0L;
  for (uint64_t r : key_radixes) bits += std::log2(static_cast<long double>(r));
  return static_cast<uint64_t>(std::ceil(bits - 1e-9L));
}

uint64_t PsmProtocol::comm_bits() const {
  uint64_t total = 0;
  for (const auto& alphabets : message_symbol_alphabets) {
    const uint64_t space = flat_count(alphabets);
    if (space != std::numeric_limits<uint64_t>::max()) {
      total += ceil_log2_u64(space);
      continue;
    }
    long double bits = 0.0L;
    for (uint64_t a : alphabets) bits += std::log2(static_cast<long double>(a));
    total += static_cast<uint64_t>(std::ceil(bits - 1e-9L));
  }
  return total;
}

std::vector<uint64_t> PsmProtocol::key_at(uint64_t index) const {
  std::vector<uint64_t> key(key_radixes.size(), 0);
  for (std::size_t i = 0; i < key_radixes.size(); ++i) {
    key[i] = index % key_radixes[i];
    index /= key_radixes[i];
  }
  if (index != 0) {
    throw precondition_error("PsmProtocol::key_at: index outside the key domain");
  }
  return key;
}

std::vector<uint64_t> PsmProtocol::sample_key(CounterRng& rng) const {
  std::vector<uint64_t> key(key_radixes.size());
  for (std::size_t i = 0; i < key_radixes.size(); ++i) {
    key[i] = rng.below(key_radixes[i]);
  }
  return key;
}

// ---------------------------------------------------------------------------
// FKN two-party protocol

namespace {

uint64_t factorial_u64(std::size_t k) {
  uint64_t f = 1;
  for (std::size_t i = 2; i <= k; ++i) f *= i;
  return f;
}

// Image word of the permutation with the given lexicographic rank.
std::vector<uint32_t> unrank_permutation(uint64_t rank, std::size_t k) {
  std::vector<uint32_t> pool(k);
  std::iota(pool.begin(), pool.end(), 0u);
  std::vector<uint64_t> fact(k, 1);
  for (std::size_t i = 1; i < k; ++i) fact[i] = fact[i - 1] * i;
  std::vector<uint32_t> perm(k);
  for (std::size_t i = 0; i < k; ++i) {
    const uint64_t base = fact[k - 1 - i];
    const uint64_t digit = rank / base;
    rank %= base;
    perm[i] = pool[digit];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(digit));
  }
  return perm;
}

}  // namespace

PsmProtocol fkn_two_party(const std::vector<std::vector<int>>& truth_table) {
  if (truth_table.empty() || truth_table[0].empty()) {
    throw precondition_error("fkn_two_party: empty truth table");
  }
  const std::size_t s1 = truth_table.size();
  const std::size_t s2 = truth_table[0].size();
  for (const auto& row : truth_table) {
    if (row.size() != s2) throw dimension_error("fkn_two_party: ragged truth table");
    for (int v : row) {
      if (v != 0 && v != 1) {
        throw precondition_error("fkn_two_party: table entries must be bits");
      }
    }
  }
  if (s2 > 20) {
    throw budget_error("fkn_two_party: second input domain too large");
  }
  const long double work = static_cast<long double>(s1) * s2 *
                           factorial_u64(s2) * std::exp2l(static_cast<long double>(s2));
  if (work > 1e7L) {
    throw budget_error(
        "fkn_two_party: key domain exceeds the verification budget; use a "
        "group-program protocol for this function");
  }

  PsmProtocol p;
  p.num_clients = 2;
  p.input_sizes = {s1, s2};
  p.key_radixes = {factorial_u64(s2), uint64_t{1} << s2};
  p.message_symbol_alphabets = {std::vector<uint64_t>(s2, 2),
                                {static_cast<uint64_t>(s2), 2}};
  p.encode = [truth_table, s1, s2](std::size_t client, uint64_t x,
                                   const std::vector<uint64_t>& key) {
    const auto perm = unrank_permutation(key[0], s2);
    const uint64_t pad = key[1];
    if (client == 0) {
      if (x >= s1) throw precondition_error("fkn encode: input outside the domain");
      std::vector<uint32_t> inv(s2);
      for (std::size_t i = 0; i < s2; ++i) inv[perm[i]] = static_cast<uint32_t>(i);
      std::vector<uint32_t> msg(s2);
      for (std::size_t j = 0; j < s2; ++j) {
        msg[j] = static_cast<uint32_t>(truth_table[x][inv[j]]) ^
                 static_cast<uint32_t>((pad >> j) & 1);
      }
      return msg;
    }
    if (client != 1 || x >= s2) {
      throw precondition_error("fkn encode: input outside the domain");
    }
    const uint32_t j = perm[x];
    return std::vector<uint32_t>{j, static_cast<uint32_t>((pad >> j) & 1)};
  };
  p.decode = [](const std::vector<std::vector<uint32_t>>& msgs) {
    const auto& v = msgs[0];
    const uint32_t j = msgs[1][0];
    const uint32_t b = msgs[1][1];
    if (j >= v.size()) return -1;
    return static_cast<int>(v[j] ^ b);
  };
  return p;
}

// ---------------------------------------------------------------------------
// Kilian randomization

namespace {

struct KilianState {
  PermBranchingProgram program;
  std::vector<std::vector<std::size_t>> owned;  // per client, global indices

  uint32_t product(const std::vector<std::vector<uint32_t>>& msgs) const {
    const Group& g = program.group;
    if (msgs.size() != owned.size()) {
      throw dimension_error("kilian decode: wrong client count");
    }
    std::vector<uint32_t> h(program.instructions.size(), g.identity());
    for (std::size_t i = 0; i < owned.size(); ++i) {
      if (msgs[i].size() != owned[i].size()) {
        throw dimension_error("kilian decode: wrong message length");
      }
      for (std::size_t t = 0; t < owned[i].size(); ++t) {
        if (msgs[i][t] >= g.order()) {
          throw precondition_error("kilian decode: symbol outside the group");
        }
        h[owned[i][t]] = msgs[i][t];
      }
    }
    uint32_t acc = g.identity();
    for (uint32_t e : h) acc = g.mul(acc, e);
    return acc;
  }
};

}  // namespace

PsmProtocol kilian_randomize(const PermBranchingProgram& program) {
  validate_program(program);
  const std::size_t length = program.instructions.size();
  const std::size_t n = program.input_sizes.size();

  auto state = std::make_shared<KilianState>();
  state->program = program;
  state->owned.assign(n, {});
  for (std::size_t j = 0; j < length; ++j) {
    state->owned[program.instructions[j].client].push_back(j);
  }

  PsmProtocol p;
  p.num_clients = n;
  p.input_sizes = program.input_sizes;
  p.key_radixes.assign(length - 1, program.group.order());
  p.message_symbol_alphabets.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    p.message_symbol_alphabets[i].assign(state->owned[i].size(),
                                         program.group.order());
  }
  p.encode = [state](std::size_t client, uint64_t x,
                     const std::vector<uint64_t>& key) {
    const Group& g = state->program.group;
    const std::size_t length = state->program.instructions.size();
    if (client >= state->owned.size()) {
      throw precondition_error("kilian encode: unknown client");
    }
    if (x >= state->program.input_sizes[client]) {
      throw precondition_error("kilian encode: input outside the domain");
    }
    const auto& mine = state->owned[client];
    std::vector<uint32_t> msg;
    msg.reserve(mine.size());
    for (std::size_t j : mine) {
      const auto& ins = state->program.instructions[j];
      const bool bit = ((x >> ins.bit) & 1u) != 0;
      const uint32_t sigma_j = bit ? ins.g_if_1 : ins.g_if_0;
      const uint32_t left =
          (j == 0) ? g.identity() : static_cast<uint32_t>(key[j - 1]);
      const uint32_t right =
          (j + 1 == length) ? g.identity() : static_cast<uint32_t>(key[j]);
      msg.push_back(g.mul(g.mul(g.inverse(left), sigma_j), right));
    }
    return msg;
  };
  p.decode = [state](const std::vector<std::vector<uint32_t>>& msgs) {
    const uint32_t acc = state->product(msgs);
    if (acc == state->program.group.identity()) return 0;
    if (acc == state->program.accept_element) return 1;
    return -1;
  };
  p.product_statistic = [state](const std::vector<std::vector<uint32_t>>& msgs) {
    return static_cast<uint64_t>(state->product(msgs));
  };
  p.product_alphabet = program.group.order();
  return p;
}

// ---------------------------------------------------------------------------
// Verification

namespace {

void validate_protocol(const PsmProtocol& p, const std::vector<int>& f_table) {
  if (p.num_clients == 0) throw precondition_error("psm protocol: no clients");
  if (p.input_sizes.size() != p.num_clients) {
    throw dimension_error("psm protocol: input_sizes does not match num_clients");
  }
  if (p.message_symbol_alphabets.size() != p.num_clients) {
    throw dimension_error(
        "psm protocol: message_symbol_alphabets does not match num_clients");
  }
  if (!p.encode || !p.decode) {
    throw precondition_error("psm protocol: encode and decode must be set");
  }
  for (uint64_t s : p.input_sizes) {
    if (s == 0) throw precondition_error("psm protocol: empty input domain");
  }
  for (uint64_t r : p.key_radixes) {
    if (r == 0) throw precondition_error("psm protocol: zero key radix");
  }
  for (const auto& alphabets : p.message_symbol_alphabets) {
    for (uint64_t a : alphabets) {
      if (a == 0) throw precondition_error("psm protocol: zero message alphabet");
    }
  }
  if (p.product_statistic && p.product_alphabet < 2) {
    throw precondition_error(
        "psm protocol: custom product statistic needs product_alphabet >= 2");
  }
  const uint64_t inputs = flat_count(p.input_sizes);
  if (inputs == std::numeric_limits<uint64_t>::max() ||
      f_table.size() != inputs) {
    throw dimension_error("psm_verify: truth table size does not match the input domain");
  }
  for (int v : f_table) {
    if (v != 0 && v != 1) {
      throw precondition_error("psm_verify: truth table entries must be bits");
    }
  }
}

// Mixed-radix packing of a full transcript into one index; per-symbol bounds
// checks keep a buggy encode from corrupting the dense tallies.
struct TranscriptPacker {
  std::vector<std::vector<uint64_t>> strides;
  std::vector<std::vector<uint64_t>> alphabets;
  uint64_t space = 1;
  bool packable = true;

  explicit TranscriptPacker(const PsmProtocol& p)
      : alphabets(p.message_symbol_alphabets) {
    strides.resize(alphabets.size());
    for (std::size_t i = 0; i < alphabets.size() && packable; ++i) {
      strides[i].resize(alphabets[i].size());
      for (std::size_t t = 0; t < alphabets[i].size(); ++t) {
        strides[i][t] = space;
        const uint64_t a = alphabets[i][t];
        if (space > std::numeric_limits<uint64_t>::max() / a) {
          packable = false;
          break;
        }
        space *= a;
      }
    }
  }

  uint64_t pack_client(std::size_t client,
                       const std::vector<uint32_t>& msg) const {
    if (msg.size() != strides[client].size()) {
      throw dimension_error("psm_verify: encode changed the message length");
    }
    uint64_t idx = 0;
    for (std::size_t t = 0; t < msg.size(); ++t) {
      if (msg[t] >= alphabets[client][t]) {
        throw precondition_error(
            "psm_verify: encode produced a symbol outside its declared alphabet");
      }
      idx += strides[client][t] * msg[t];
    }
    return idx;
  }
};

// Signed tally over transcripts; dense when the packed space is small.
struct TranscriptTally {
  bool dense = false;
  std::vector<int64_t> dense_counts;
  std::unordered_map<uint64_t, int64_t> sparse_counts;

  explicit TranscriptTally(uint64_t space) {
    dense = space <= kDenseTranscriptLimit;
    if (dense) dense_counts.assign(space, 0);
  }

  void reset() {
    if (dense) {
      std::fill(dense_counts.begin(), dense_counts.end(), int64_t{0});
    } else {
      sparse_counts.clear();
    }
  }

  void add(uint64_t idx, int64_t v) {
    if (dense) {
      dense_counts[idx] += v;
    } else {
      sparse_counts[idx] += v;
    }
  }

  bool all_zero() const {
    if (dense) {
      return std::all_of(dense_counts.begin(), dense_counts.end(),
                         [](int64_t v) { return v == 0; });
    }
    return std::all_of(sparse_counts.begin(), sparse_counts.end(),
                       [](const auto& kv) { return kv.second == 0; });
  }
};

PsmVerifyReport verify_exhaustive(const PsmProtocol& p,
                                  const std::vector<int>& f_table) {
  PsmVerifyReport report;
  report.mode = "exhaustive";
  const uint64_t keys = p.key_count();
  if (keys > kEnumerationBudget) {
    throw budget_error(
        "psm_verify: key domain exceeds the enumeration budget; use the "
        "sampled mode");
  }
  const uint64_t inputs = flat_count(p.input_sizes);
  if (inputs > kEnumerationBudget) {
    throw budget_error("psm_verify: input domain exceeds the enumeration budget");
  }
  if (inputs > kExhaustiveWorkBudget / std::max<uint64_t>(keys, 1)) {
    throw budget_error(
        "psm_verify: inputs times keys exceeds the enumeration budget; use "
        "the sampled mode");
  }

  // Correctness: decode must reproduce the table for every key.
  report.correctness_ok = true;
  {
    std::vector<std::vector<std::vector<uint32_t>>> cache(p.num_clients);
    for (std::size_t i = 0; i < p.num_clients; ++i) {
      cache[i].resize(p.input_sizes[i]);
    }
    std::vector<std::vector<uint32_t>> msgs(p.num_clients);
    std::vector<uint64_t> x(p.num_clients, 0);
    Odometer key(p.key_radixes);
    uint64_t key_index = 0;
    bool stop = false;
    do {
      for (std::size_t i = 0; i < p.num_clients; ++i) {
        for (uint64_t v = 0; v < p.input_sizes[i]; ++v) {
          cache[i][v] = p.encode(i, v, key.word);
        }
        msgs[i] = cache[i][0];
        x[i] = 0;
      }
      for (uint64_t flat = 0; flat < inputs; ++flat) {
        const int out = p.decode(msgs);
        if (out != f_table[flat]) {
          report.correctness_ok = false;
          if (report.counterexamples.size() < 5) {
            std::ostringstream os;
            os << "decode(x=" << coords_string(unflatten(flat, p.input_sizes))
               << ", key#" << key_index << ") = " << out << ", table says "
               << f_table[flat];
            report.counterexamples.push_back(os.str());
          } else {
            stop = true;
            break;
          }
        }
        for (std::size_t i = 0; i < p.num_clients; ++i) {
          if (++x[i] < p.input_sizes[i]) {
            msgs[i] = cache[i][x[i]];
            break;
          }
          x[i] = 0;
          msgs[i] = cache[i][0];
        }
      }
      ++key_index;
    } while (!stop && key.advance());
  }

  // Privacy: inputs with the same table value must induce identical
  // transcript distributions over the uniform key.
  report.privacy_ok = true;
  {
    TranscriptPacker packer(p);
    if (!packer.packable) {
      throw budget_error(
          "psm_verify: transcript space is too large to index; use the "
          "sampled mode");
    }
    std::array<std::optional<uint64_t>, 2> anchor;
    std::vector<std::pair<uint64_t, uint64_t>> comparisons;
    for (uint64_t flat = 0; flat < inputs; ++flat) {
      auto& a = anchor[static_cast<std::size_t>(f_table[flat])];
      if (!a) {
        a = flat;
      } else {
        comparisons.emplace_back(*a, flat);
      }
    }
    TranscriptTally tally(packer.space);
    for (const auto& [fa, fb] : comparisons) {
      const auto ca = unflatten(fa, p.input_sizes);
      const auto cb = unflatten(fb, p.input_sizes);
      tally.reset();
      Odometer key(p.key_radixes);
      do {
        uint64_t ia = 0;
        uint64_t ib = 0;
        for (std::size_t i = 0; i < p.num_clients; ++i) {
          ia += packer.pack_client(i, p.encode(i, ca[i], key.word));
          ib += packer.pack_client(i, p.encode(i, cb[i], key.word));
        }
        tally.add(ia, 1);
        tally.add(ib, -1);
      } while (key.advance());
      if (!tally.all_zero()) {
        report.privacy_ok = false;
        if (report.counterexamples.size() < 10) {
          std::ostringstream os;
          os << "inputs " << coords_string(ca) << " and " << coords_string(cb)
             << " share f but induce different transcript laws";
          report.counterexamples.push_back(os.str());
        } else {
          break;
        }
      }
    }
  }
  return report;
}

PsmVerifyReport verify_sampled(const PsmProtocol& p,
                               const std::vector<int>& f_table, uint64_t trials,
                               uint64_t seed) {
  PsmVerifyReport report;
  report.mode = "sampled";
  report.trials = trials;
  report.seed = seed;
  if (trials < 100) {
    throw precondition_error("psm_verify: sampled mode needs at least 100 trials");
  }
  const uint64_t inputs = flat_count(p.input_sizes);

  // Correctness: spread the trial budget over the inputs.
  report.correctness_ok = true;
  {
    const uint64_t reps = std::max<uint64_t>(1, (trials + inputs - 1) / inputs);
    std::vector<std::vector<uint32_t>> msgs(p.num_clients);
    for (uint64_t flat = 0; flat < inputs && report.counterexamples.size() < 5;
         ++flat) {
      const auto coords = unflatten(flat, p.input_sizes);
      CounterRng rng(seed, flat);
      for (uint64_t t = 0; t < reps; ++t) {
        const auto key = p.sample_key(rng);
        for (std::size_t i = 0; i < p.num_clients; ++i) {
          msgs[i] = p.encode(i, coords[i], key);
        }
        const int out = p.decode(msgs);
        if (out != f_table[flat]) {
          report.correctness_ok = false;
          std::ostringstream os;
          os << "decode(x=" << coords_string(coords) << ", sampled key) = "
             << out << ", table says " << f_table[flat];
          report.counterexamples.push_back(os.str());
          break;
        }
      }
    }
  }

  // Privacy: per-position chi-square tests plus the coarse product
  // statistic, anchor versus member, Bonferroni-corrected.
  report.privacy_ok = true;
  {
    struct Position {
      std::size_t client;
      std::size_t slot;
      uint64_t alphabet;
    };
    std::vector<Position> positions;
    for (std::size_t i = 0; i < p.num_clients; ++i) {
      for (std::size_t t = 0; t < p.message_symbol_alphabets[i].size(); ++t) {
        if (p.message_symbol_alphabets[i][t] >= 2) {
          positions.push_back({i, t, p.message_symbol_alphabets[i][t]});
        }
      }
    }
    const uint64_t stat_alphabet =
        p.product_alphabet >= 2 ? p.product_alphabet : 3;
    auto statistic = [&p](const std::vector<std::vector<uint32_t>>& msgs) {
      if (p.product_statistic) return p.product_statistic(msgs);
      return static_cast<uint64_t>(p.decode(msgs) + 1);
    };

    std::array<std::optional<uint64_t>, 2> anchor;
    std::vector<std::pair<uint64_t, uint64_t>> comparisons;
    for (uint64_t flat = 0; flat < inputs; ++flat) {
      auto& a = anchor[static_cast<std::size_t>(f_table[flat])];
      if (!a) {
        a = flat;
      } else {
        comparisons.emplace_back(*a, flat);
      }
    }
    const std::size_t total_tests = comparisons.size() * (positions.size() + 1);
    report.significance = 0.01 / static_cast<double>(std::max<std::size_t>(
                                     total_tests, 1));

    std::vector<std::vector<uint32_t>> msgs(p.num_clients);
    for (std::size_t comp = 0; comp < comparisons.size(); ++comp) {
      const auto [fa, fb] = comparisons[comp];
      const auto ca = unflatten(fa, p.input_sizes);
      const auto cb = unflatten(fb, p.input_sizes);
      std::vector<std::vector<uint64_t>> counts_a(positions.size());
      std::vector<std::vector<uint64_t>> counts_b(positions.size());
      for (std::size_t q = 0; q < positions.size(); ++q) {
        counts_a[q].assign(positions[q].alphabet, 0);
        counts_b[q].assign(positions[q].alphabet, 0);
      }
      std::vector<uint64_t> stat_a(stat_alphabet, 0);
      std::vector<uint64_t> stat_b(stat_alphabet, 0);
      for (int side = 0; side < 2; ++side) {
        const auto& coords = side == 0 ? ca : cb;
        auto& counts = side == 0 ? counts_a : counts_b;
        auto& stat_counts = side == 0 ? stat_a : stat_b;
        CounterRng rng(seed, inputs + 2 * comp + static_cast<uint64_t>(side));
        for (uint64_t t = 0; t < trials; ++t) {
          const auto key = p.sample_key(rng);
          for (std::size_t i = 0; i < p.num_clients; ++i) {
            msgs[i] = p.encode(i, coords[i], key);
          }
          for (std::size_t q = 0; q < positions.size(); ++q) {
            const auto& m = msgs[positions[q].client];
            if (positions[q].slot >= m.size() ||
                m[positions[q].slot] >= positions[q].alphabet) {
              throw precondition_error(
                  "psm_verify: encode produced a symbol outside its declared "
                  "alphabet");
            }
            ++counts[q][m[positions[q].slot]];
          }
          const uint64_t s = statistic(msgs);
          if (s >= stat_alphabet) {
            throw precondition_error(
                "psm_verify: product statistic outside its declared alphabet");
          }
          ++stat_counts[s];
        }
      }
      auto run_test = [&](const std::vector<uint64_t>& a,
                          const std::vector<uint64_t>& b,
                          const std::string& label) {
        const ChiSquareResult r = two_sample_chi_square(a, b);
        report.p_values.push_back(r.p_value);
        report.min_p_value = std::min(report.min_p_value, r.p_value);
        if (r.p_value < report.significance) {
          report.privacy_ok = false;
          if (report.counterexamples.size() < 10) {
            std::ostringstream os;
            os << "inputs " << coords_string(ca) << " vs " << coords_string(cb)
               << ": " << label << " differs (p=" << r.p_value << ")";
            report.counterexamples.push_back(os.str());
          }
        }
      };
      for (std::size_t q = 0; q < positions.size(); ++q) {
        std::ostringstream label;
        label << "message position (client " << positions[q].client << ", slot "
              << positions[q].slot << ")";
        run_test(counts_a[q], counts_b[q], label.str());
      }
      run_test(stat_a, stat_b, "product statistic");
    }
  }
  return report;
}

}  // namespace

PsmVerifyReport psm_verify(const PsmProtocol& protocol,
                           const std::vector<int>& f_table, VerifyMode mode,
                           uint64_t trials, uint64_t seed) {
  validate_protocol(protocol, f_table);
  if (mode == VerifyMode::kExhaustive) {
    return verify_exhaustive(protocol, f_table);
  }
  return verify_sampled(protocol, f_table, trials, seed);
}

// ---------------------------------------------------------------------------
// PSM as an SDHT scheme

EvaluationReport psm_to_sdht(const std::vector<int>& f_table,
                             const PsmProtocol& protocol,
                             const std::vector<FiniteDistribution>& h0,
                             const std::vector<FiniteDistribution>& h1,
                             VerifyMode mode, uint64_t trials, uint64_t seed) {
  validate_protocol(protocol, f_table);
  if (h0.empty() || h1.empty()) {
    throw precondition_error("psm_to_sdht: both classes need at least one member");
  }
  const uint64_t m = protocol.input_sizes[0];
  for (uint64_t s : protocol.input_sizes) {
    if (s != m) {
      throw dimension_error("psm_to_sdht: clients must share one sample alphabet");
    }
  }
  for (const auto* h : {&h0, &h1}) {
    for (const auto& mu : *h) {
      if (mu.size() != m) {
        throw dimension_error(
            "psm_to_sdht: class member alphabet does not match the protocol");
      }
    }
  }

  const PsmVerifyReport verified = psm_verify(protocol, f_table, mode, trials, seed);
  if (!verified.passed()) {
    std::string detail = verified.counterexamples.empty()
                             ? std::string("no counterexample recorded")
                             : verified.counterexamples.front();
    throw precondition_error(
        "psm_to_sdht: protocol failed verification, refusing to evaluate (" +
        detail + ")");
  }

  const uint64_t inputs = flat_count(protocol.input_sizes);
  const std::size_t n = protocol.num_clients;

  // Exact detection error of f itself: the detector is decode, which equals
  // f on every key once verification passed.
  auto member_error = [&](const FiniteDistribution& mu, int label) {
    double err = 0.0;
    std::vector<uint64_t> x(n, 0);
    for (uint64_t flat = 0; flat < inputs; ++flat) {
      if (f_table[flat] != label) {
        double prob = 1.0;
        for (std::size_t i = 0; i < n; ++i) prob *= mu.at(x[i]);
        err += prob;
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (++x[i] < protocol.input_sizes[i]) break;
        x[i] = 0;
      }
    }
    return err;
  };
  double epsilon = 0.0;
  for (const auto& mu : h0) epsilon = std::max(epsilon, member_error(mu, 0));
  for (const auto& mu : h1) epsilon = std::max(epsilon, member_error(mu, 1));

  EvaluationReport report;
  report.epsilon = epsilon;
  report.comm_bits = protocol.comm_bits();
  report.key_bits = protocol.key_bits();

  // Anchor input per output value: its transcript law is the reference the
  // member laws are compared against.
  std::array<std::optional<uint64_t>, 2> anchor;
  for (uint64_t flat = 0; flat < inputs; ++flat) {
    auto& a = anchor[static_cast<std::size_t>(f_table[flat])];
    if (!a) a = flat;
  }

  struct Comparison {
    // Signed weights over flat inputs; an anchor enters with weight -1.
    std::vector<std::pair<uint64_t, double>> terms;
    std::string label;
  };
  std::vector<Comparison> comparisons;
  auto weights_of = [&](const FiniteDistribution& mu) {
    std::vector<std::pair<uint64_t, double>> w;
    std::vector<uint64_t> x(n, 0);
    for (uint64_t flat = 0; flat < inputs; ++flat) {
      double prob = 1.0;
      for (std::size_t i = 0; i < n; ++i) prob *= mu.at(x[i]);
      if (prob != 0.0) w.emplace_back(flat, prob);
      for (std::size_t i = 0; i < n; ++i) {
        if (++x[i] < protocol.input_sizes[i]) break;
        x[i] = 0;
      }
    }
    return w;
  };
  auto add_pairwise = [&](const std::vector<FiniteDistribution>& h,
                          const std::string& cls) {
    for (std::size_t i = 0; i < h.size(); ++i) {
      for (std::size_t j = i + 1; j < h.size(); ++j) {
        Comparison c;
        c.label = cls + " members " + std::to_string(i) + "," + std::to_string(j);
        c.terms = weights_of(h[i]);
        for (auto& [flat, prob] : weights_of(h[j])) {
          c.terms.emplace_back(flat, -prob);
        }
        comparisons.push_back(std::move(c));
      }
    }
  };
  auto add_anchored = [&](const std::vector<FiniteDistribution>& h, int label,
                          const std::string& cls) {
    if (!anchor[static_cast<std::size_t>(label)]) return;
    for (std::size_t i = 0; i < h.size(); ++i) {
      Comparison c;
      c.label = cls + " member " + std::to_string(i) + " vs anchor";
      c.terms = weights_of(h[i]);
      c.terms.emplace_back(*anchor[static_cast<std::size_t>(label)], -1.0);
      comparisons.push_back(std::move(c));
    }
  };
  add_pairwise(h0, "H0");
  add_pairwise(h1, "H1");
  add_anchored(h0, 0, "H0");
  add_anchored(h1, 1, "H1");

  double delta = 0.0;
  double tolerance = 1e-9;

  if (mode == VerifyMode::kExhaustive) {
    const uint64_t keys = protocol.key_count();
    TranscriptPacker packer(protocol);
    // verify_exhaustive already enforced packability and the work budget.
    std::vector<double> law;
    std::unordered_map<uint64_t, double> sparse_law;
    const bool dense = packer.space <= kDenseTranscriptLimit;
    if (dense) law.assign(packer.space, 0.0);
    const double inv_keys = 1.0 / static_cast<double>(keys);
    for (const auto& comparison : comparisons) {
      if (dense) {
        std::fill(law.begin(), law.end(), 0.0);
      } else {
        sparse_law.clear();
      }
      for (const auto& [flat, weight] : comparison.terms) {
        const auto coords = unflatten(flat, protocol.input_sizes);
        Odometer key(protocol.key_radixes);
        do {
          uint64_t idx = 0;
          for (std::size_t i = 0; i < n; ++i) {
            idx += packer.pack_client(i, protocol.encode(i, coords[i], key.word));
          }
          if (dense) {
            law[idx] += weight * inv_keys;
          } else {
            sparse_law[idx] += weight * inv_keys;
          }
        } while (key.advance());
      }
      double tv = 0.0;
      if (dense) {
        for (double v : law) tv += std::abs(v);
      } else {
        for (const auto& [idx, v] : sparse_law) tv += std::abs(v);
      }
      delta = std::max(delta, 0.5 * tv);
    }
    report.delta = delta;
    report.method = "exact";
  } else {
    // Sampled: compare the coarse product-statistic laws; the per-transcript
    // equalities were already tested by the sampled verifier.
    const uint64_t stat_alphabet =
        protocol.product_alphabet >= 2 ? protocol.product_alphabet : 3;
    auto statistic = [&protocol](const std::vector<std::vector<uint32_t>>& msgs) {
      if (protocol.product_statistic) return protocol.product_statistic(msgs);
      return static_cast<uint64_t>(protocol.decode(msgs) + 1);
    };
    constexpr uint64_t kStreamBase = 1'000'000'000;
    std::vector<std::vector<uint32_t>> msgs(n);
    uint64_t stream = kStreamBase;
    auto sample_member = [&](const FiniteDistribution& mu) {
      std::vector<double> hist(stat_alphabet, 0.0);
      CounterRng rng(seed, stream++);
      for (uint64_t t = 0; t < trials; ++t) {
        const auto key = protocol.sample_key(rng);
        for (std::size_t i = 0; i < n; ++i) {
          const uint64_t x = rng.sample(mu.probs());
          msgs[i] = protocol.encode(i, x, key);
        }
        const uint64_t s = statistic(msgs);
        if (s >= stat_alphabet) {
          throw precondition_error(
              "psm_to_sdht: product statistic outside its declared alphabet");
        }
        hist[s] += 1.0;
      }
      for (double& v : hist) v /= static_cast<double>(trials);
      return hist;
    };
    auto sample_anchor = [&](uint64_t flat) {
      std::vector<double> hist(stat_alphabet, 0.0);
      const auto coords = unflatten(flat, protocol.input_sizes);
      CounterRng rng(seed, stream++);
      for (uint64_t t = 0; t < trials; ++t) {
        const auto key = protocol.sample_key(rng);
        for (std::size_t i = 0; i < n; ++i) {
          msgs[i] = protocol.encode(i, coords[i], key);
        }
        const uint64_t s = statistic(msgs);
        if (s >= stat_alphabet) {
          throw precondition_error(
              "psm_to_sdht: product statistic outside its declared alphabet");
        }
        hist[s] += 1.0;
      }
      for (double& v : hist) v /= static_cast<double>(trials);
      return hist;
    };
    std::vector<std::vector<double>> hists0;
    std::vector<std::vector<double>> hists1;
    for (const auto& mu : h0) hists0.push_back(sample_member(mu));
    for (const auto& mu : h1) hists1.push_back(sample_member(mu));
    std::array<std::vector<double>, 2> anchor_hist;
    if (anchor[0]) anchor_hist[0] = sample_anchor(*anchor[0]);
    if (anchor[1]) anchor_hist[1] = sample_anchor(*anchor[1]);

    double max_tv = 0.0;
    double max_tv_spread = 0.0;
    auto consider = [&](const std::vector<double>& a,
                        const std::vector<double>& b) {
      double tv = 0.0;
      double spread = 0.0;
      for (std::size_t t = 0; t < a.size(); ++t) {
        tv += std::abs(a[t] - b[t]);
        spread += std::sqrt(a[t] * (1.0 - a[t]) / static_cast<double>(trials)) +
                  std::sqrt(b[t] * (1.0 - b[t]) / static_cast<double>(trials));
      }
      tv *= 0.5;
      spread *= 0.5;
      if (tv > max_tv) {
        max_tv = tv;
        max_tv_spread = spread;
      }
    };
    for (std::size_t i = 0; i < hists0.size(); ++i) {
      for (std::size_t j = i + 1; j < hists0.size(); ++j) {
        consider(hists0[i], hists0[j]);
      }
      if (anchor[0]) consider(hists0[i], anchor_hist[0]);
    }
    for (std::size_t i = 0; i < hists1.size(); ++i) {
      for (std::size_t j = i + 1; j < hists1.size(); ++j) {
        consider(hists1[i], hists1[j]);
      }
      if (anchor[1]) consider(hists1[i], anchor_hist[1]);
    }
    report.delta = max_tv;
    report.method = "monte_carlo";
    report.trials = trials;
    report.seed = seed;
    tolerance = std::max(1e-9, 4.0 * max_tv_spread);
    report.warnings.push_back(
        "sampled transcript divergence carries positive small-sample bias");
    report.warnings.push_back(
        "detection error is exact (truth table enumeration); only the "
        "divergence is sampled");
  }

  if (report.delta > report.epsilon + tolerance) {
    throw audit_error(
        "psm_to_sdht: measured transcript divergence exceeds the detection "
        "error bound");
  }
  return report;
}

CostTargets reference_cost_targets(uint32_t n, std::size_t alphabet_size) {
  if (n == 0) throw precondition_error("reference_cost_targets: n must be positive");
  if (alphabet_size == 0) {
    throw precondition_error("reference_cost_targets: empty alphabet");
  }
  CostTargets targets;
  targets.comm_exponent = 2 * static_cast<unsigned>((alphabet_size + 2) / 3);
  targets.key_exponent = targets.comm_exponent + 1;
  targets.comm_bits_bound =
      std::pow(static_cast<double>(n), static_cast<double>(targets.comm_exponent));
  targets.key_bits_bound =
      std::pow(static_cast<double>(n), static_cast<double>(targets.key_exponent));
  return targets;
}

}  // namespace sdht
