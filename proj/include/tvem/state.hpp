#ifndef TVEM_STATE_HPP
#define TVEM_STATE_HPP

#include <bit>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "tvem/error.hpp"

namespace tvem {

enum class SpaceKind { Binary, Categorical };

// One point of the discrete latent space. For binary spaces the code holds
// the bit pattern with s_1 as the most significant of the H used bits, so
// numeric order on the code equals lexicographic order on (s_1,...,s_H).
// For categorical spaces the code is the 0-based cluster index.
struct LatentState {
  std::uint64_t code = 0;
  auto operator<=>(const LatentState&) const = default;
};

struct StateSpace {
  SpaceKind kind = SpaceKind::Categorical;
  int size = 1;  // H for binary, C for categorical

  bool huge() const { return kind == SpaceKind::Binary && size >= 63; }

  std::uint64_t cardinality() const {
    if (huge()) fail(ErrorCode::SpaceTooLarge, "state space cardinality not representable");
    return kind == SpaceKind::Binary ? (std::uint64_t{1} << size)
                                     : std::uint64_t(size);
  }

  bool contains(LatentState s) const {
    if (kind == SpaceKind::Binary)
      return size >= 63 || s.code < (std::uint64_t{1} << size);
    return s.code < std::uint64_t(size);
  }
};

inline bool state_bit(LatentState s, int h, int H) {
  return (s.code >> (H - 1 - h)) & 1u;
}

inline int active_count(LatentState s) { return std::popcount(s.code); }

LatentState binary_state(const std::vector<int>& bits);
std::string state_to_string(LatentState s, const StateSpace& space);

// All states of the space in canonical order; refuses spaces larger than cap.
std::vector<LatentState> enumerate_states(const StateSpace& space,
                                          std::uint64_t cap);

// Default enumeration cap; overridable via the TVEM_ENUM_CAP env variable.
std::uint64_t enumeration_cap();

}  // namespace tvem

#endif
