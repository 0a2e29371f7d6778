#include "stdpavg/rng.hpp"

#include <cmath>

namespace stdpavg {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32Ctr philox4x32_10(Philox4x32Ctr c, Philox4x32Key k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

PhiloxStream::PhiloxStream(const StreamId& id)
    : key_{static_cast<std::uint32_t>(id.seed), static_cast<std::uint32_t>(id.seed >> 32)},
      hi_((static_cast<std::uint32_t>(id.role) << 16) | id.group),
      mid_(id.replica) {}

void PhiloxStream::refill() {
  Philox4x32Ctr ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                    mid_, hi_};
  buf_ = philox4x32_10(ctr, key_);
  ++block_;
  pos_ = 0;
}

PhiloxStream::result_type PhiloxStream::operator()() {
  if (pos_ == 4) refill();
  return buf_[pos_++];
}

double PhiloxStream::uniform() {
  std::uint64_t a = (*this)() >> 5;  // 27 bits
  std::uint64_t b = (*this)() >> 6;  // 26 bits
  return (static_cast<double>(a) * 67108864.0 + static_cast<double>(b)) * 0x1.0p-53;
}

double PhiloxStream::uniform_pos() { return 1.0 - uniform(); }

double PhiloxStream::exp1() { return -std::log(uniform_pos()); }

}  // namespace stdpavg
