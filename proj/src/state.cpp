#include "tvem/state.hpp"

#include <cstdlib>

namespace tvem {

LatentState binary_state(const std::vector<int>& bits) {
  const int H = int(bits.size());
  std::uint64_t code = 0;
  for (int h = 0; h < H; ++h) {
    code <<= 1;
    if (bits[h]) code |= 1u;
  }
  return LatentState{code};
}

std::string state_to_string(LatentState s, const StateSpace& space) {
  if (space.kind == SpaceKind::Categorical)
    return std::to_string(s.code + 1);
  std::string out(space.size, '0');
  for (int h = 0; h < space.size; ++h)
    if (state_bit(s, h, space.size)) out[h] = '1';
  return out;
}

std::vector<LatentState> enumerate_states(const StateSpace& space,
                                          std::uint64_t cap) {
  if (space.huge() || space.cardinality() > cap)
    fail(ErrorCode::SpaceTooLarge,
         "state space exceeds enumeration cap of " + std::to_string(cap));
  const std::uint64_t n = space.cardinality();
  std::vector<LatentState> out;
  out.reserve(n);
  for (std::uint64_t c = 0; c < n; ++c) out.push_back(LatentState{c});
  return out;
}

std::uint64_t enumeration_cap() {
  if (const char* env = std::getenv("TVEM_ENUM_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return v;
  }
  return std::uint64_t{1} << 16;
}

}  // namespace tvem
