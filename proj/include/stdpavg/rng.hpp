#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace stdpavg {

using Philox4x32Ctr = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds (Salmon et al. counter-based generator).
Philox4x32Ctr philox4x32_10(Philox4x32Ctr ctr, Philox4x32Key key);

enum class StreamRole : std::uint32_t {
  presyn = 1,
  thinning = 2,
  discrete_clocks = 3,
  limit_jumps = 4,
  invariant = 5,
};

// Identifies one independent stream. Distinct ids never overlap: the key is
// the seed, the upper counter words carry (role, group, replica) and the lower
// two words count blocks.
struct StreamId {
  std::uint64_t seed = 0;
  std::uint32_t replica = 0;
  std::uint16_t group = 0;
  StreamRole role = StreamRole::presyn;
};

class PhiloxStream {
 public:
  using result_type = std::uint32_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  explicit PhiloxStream(const StreamId& id);

  result_type operator()();
  // Uniform on (0, 1], 53-bit resolution.
  double uniform_pos();
  // Uniform on [0, 1).
  double uniform();
  // Standard exponential variate.
  double exp1();

 private:
  void refill();
  Philox4x32Key key_;
  std::uint32_t hi_;
  std::uint32_t mid_;
  std::uint64_t block_ = 0;
  Philox4x32Ctr buf_{};
  unsigned pos_ = 4;
};

}  // namespace stdpavg
