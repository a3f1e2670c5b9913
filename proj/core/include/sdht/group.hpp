#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sdht {

// Finite group as an explicit Cayley table. Element 0 is the identity.
class Group {
 public:
  // Permutations of {0..points-1} under composition (a*b)(x) = a(b(x)),
  // indexed by lexicographic rank of the image word; rank 0 is the identity.
  static Group symmetric(unsigned points);
  // Integers mod m under addition.
  static Group cyclic(unsigned m);
  // 3x3 unit upper-triangular matrices over GF(2); element index a + 2b + 4c
  // encodes entries (1,2)=a, (2,3)=b, (1,3)=c. Order 8, non-abelian.
  static Group unitriangular3_f2();
  // Parses the descriptors produced by name(): "symmetric-5", "cyclic-7",
  // "unitriangular3-f2".
  static Group from_name(const std::string& name);

  const std::string& name() const { return name_; }
  uint32_t order() const { return order_; }
  uint32_t identity() const { return 0; }
  uint32_t mul(uint32_t a, uint32_t b) const {
    return table_[a * order_ + b];
  }
  uint32_t inverse(uint32_t a) const { return inverse_[a]; }
  bool is_identity(uint32_t a) const { return a == 0; }

  // Symmetric-group element <-> image word; throws for other group kinds.
  uint32_t element_of_perm(const std::vector<uint8_t>& image) const;
  std::vector<uint8_t> perm_of_element(uint32_t e) const;

  // Trivial one-element group; placeholder for default-constructed programs.
  Group() = default;

 private:
  std::string name_ = "trivial";
  uint32_t order_ = 1;
  unsigned points_ = 0;  // nonzero only for symmetric groups
  std::vector<uint32_t> table_{0};
  std::vector<uint32_t> inverse_{0};
};

}  // namespace sdht
