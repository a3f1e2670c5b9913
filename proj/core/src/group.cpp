#include "sdht/group.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "sdht/errors.hpp"

namespace sdht {

namespace {

void fill_inverses(const std::vector<uint32_t>& table, uint32_t order,
                   std::vector<uint32_t>& inverse) {
  inverse.assign(order, 0);
  for (uint32_t a = 0; a < order; ++a) {
    for (uint32_t b = 0; b < order; ++b) {
      if (table[a * order + b] == 0) {
        inverse[a] = b;
        break;
      }
    }
  }
}

uint64_t pack_word(const std::vector<uint8_t>& word) {
  uint64_t packed = 0;
  for (std::size_t i = 0; i < word.size(); ++i) {
    packed |= static_cast<uint64_t>(word[i]) << (4 * i);
  }
  return packed;
}

}  // namespace

// Words live outside the class to keep Group trivially copyable-ish; they are
// recomputed on demand for element_of_perm/perm_of_element.
namespace {
std::vector<std::vector<uint8_t>> permutation_words(unsigned points) {
  std::vector<uint8_t> word(points);
  std::iota(word.begin(), word.end(), static_cast<uint8_t>(0));
  std::vector<std::vector<uint8_t>> words;
  do {
    words.push_back(word);
  } while (std::next_permutation(word.begin(), word.end()));
  return words;
}
}  // namespace

Group Group::symmetric(unsigned points) {
  if (points == 0 || points > 6) {
    throw precondition_error(
        "Group::symmetric: supported range is 1 to 6 points");
  }
  Group g;
  g.points_ = points;
  g.name_ = "symmetric-" + std::to_string(points);
  std::vector<std::vector<uint8_t>> words = permutation_words(points);
  g.order_ = static_cast<uint32_t>(words.size());
  std::unordered_map<uint64_t, uint32_t> rank;
  rank.reserve(words.size());
  for (uint32_t i = 0; i < g.order_; ++i) rank[pack_word(words[i])] = i;
  g.table_.resize(static_cast<std::size_t>(g.order_) * g.order_);
  std::vector<uint8_t> composed(points);
  for (uint32_t a = 0; a < g.order_; ++a) {
    for (uint32_t b = 0; b < g.order_; ++b) {
      for (unsigned x = 0; x < points; ++x) {
        composed[x] = words[a][words[b][x]];
      }
      g.table_[a * g.order_ + b] = rank.at(pack_word(composed));
    }
  }
  fill_inverses(g.table_, g.order_, g.inverse_);
  return g;
}

Group Group::cyclic(unsigned m) {
  if (m == 0 || m > 4096) {
    throw precondition_error("Group::cyclic: order must lie in 1..4096");
  }
  Group g;
  g.name_ = "cyclic-" + std::to_string(m);
  g.order_ = m;
  g.table_.resize(static_cast<std::size_t>(m) * m);
  for (uint32_t a = 0; a < m; ++a) {
    for (uint32_t b = 0; b < m; ++b) {
      g.table_[a * m + b] = (a + b) % m;
    }
  }
  fill_inverses(g.table_, g.order_, g.inverse_);
  return g;
}

Group Group::unitriangular3_f2() {
  Group g;
  g.name_ = "unitriangular3-f2";
  g.order_ = 8;
  g.table_.resize(64);
  for (uint32_t e = 0; e < 8; ++e) {
    for (uint32_t f = 0; f < 8; ++f) {
      uint32_t a = e & 1, b = (e >> 1) & 1, c = (e >> 2) & 1;
      uint32_t a2 = f & 1, b2 = (f >> 1) & 1, c2 = (f >> 2) & 1;
      uint32_t a3 = a ^ a2;
      uint32_t b3 = b ^ b2;
      uint32_t c3 = c ^ c2 ^ (a & b2);
      g.table_[e * 8 + f] = a3 | (b3 << 1) | (c3 << 2);
    }
  }
  fill_inverses(g.table_, g.order_, g.inverse_);
  return g;
}

Group Group::from_name(const std::string& name) {
  if (name == "unitriangular3-f2") return unitriangular3_f2();
  auto dash = name.rfind('-');
  if (dash != std::string::npos) {
    std::string kind = name.substr(0, dash);
    unsigned param = static_cast<unsigned>(std::stoul(name.substr(dash + 1)));
    if (kind == "symmetric") return symmetric(param);
    if (kind == "cyclic") return cyclic(param);
  }
  throw precondition_error("Group::from_name: unknown descriptor " + name);
}

uint32_t Group::element_of_perm(const std::vector<uint8_t>& image) const {
  if (points_ == 0) {
    throw precondition_error(
        "element_of_perm: only symmetric groups index permutations");
  }
  if (image.size() != points_) {
    throw dimension_error("element_of_perm: wrong image length");
  }
  std::vector<std::vector<uint8_t>> words = permutation_words(points_);
  for (uint32_t i = 0; i < order_; ++i) {
    if (words[i] == image) return i;
  }
  throw precondition_error("element_of_perm: not a permutation");
}

std::vector<uint8_t> Group::perm_of_element(uint32_t e) const {
  if (points_ == 0) {
    throw precondition_error(
        "perm_of_element: only symmetric groups index permutations");
  }
  if (e >= order_) {
    throw dimension_error("perm_of_element: element out of range");
  }
  return permutation_words(points_)[e];
}

}  // namespace sdht
