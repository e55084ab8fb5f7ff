#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace emconv {

namespace detail {

  // SplitMix64 finalizer; used both as the counter hash and for key mixing.
  constexpr auto mix64(std::uint64_t z) -> std::uint64_t
  {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  constexpr auto fnv1a(std::string_view s) -> std::uint64_t
  {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s)
    {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

  constexpr auto derive_key(std::uint64_t parent, std::string_view label,
                            std::uint64_t index) -> std::uint64_t
  {
    auto k = mix64(parent ^ mix64(fnv1a(label)));
    return mix64(k + (index + 1) * golden_gamma);
  }

}  // namespace detail

//! Counter-based random stream keyed by (master_seed, label, index).
//!
//! Draw k of a stream is a pure function of its key and k, so copying a
//! stream replays it and streams derived with different labels or indices
//! never share state.
class RngStream
{
public:
  RngStream() = default;

  RngStream(std::uint64_t master_seed, std::string_view label,
            std::uint64_t index)
    : key_{detail::derive_key(master_seed, label, index)}
  {
  }

  //! Independent sub-stream; does not advance this stream.
  auto child(std::string_view label, std::uint64_t index = 0) const
      -> RngStream
  {
    auto s = RngStream{};
    s.key_ = detail::derive_key(key_, label, index);
    return s;
  }

  auto key() const -> std::uint64_t { return key_; }
  auto counter() const -> std::uint64_t { return counter_; }

  auto next_u64() -> std::uint64_t
  {
    return detail::mix64(key_ + (++counter_) * detail::golden_gamma);
  }

  //! Uniform on [0, 1) with 53 random bits.
  auto uniform() -> double
  {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  //! Fair bit.
  auto bit() -> bool { return (next_u64() >> 63) != 0; }

  //! Fair sign in {-1, +1}.
  auto sign() -> double { return bit() ? 1.0 : -1.0; }

  auto bernoulli(double p) -> bool { return uniform() < p; }

  //! Standard normal by Box-Muller; the second variate is cached.
  auto normal() -> double
  {
    if (has_spare_)
    {
      has_spare_ = false;
      return spare_;
    }
    // 1 - u lies in (0, 1], so the log is finite.
    const auto u1 = 1.0 - uniform();
    const auto u2 = uniform();
    const auto radius = std::sqrt(-2.0 * std::log(u1));
    const auto angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline auto derive_stream(std::uint64_t master_seed, std::string_view label,
                          std::uint64_t index) -> RngStream
{
  return RngStream{master_seed, label, index};
}

//! 64-bit seed derived from (master_seed, label, index), e.g. a per-trial
//! seed that can be written to disk and used as a master seed later.
inline auto derive_seed(std::uint64_t master_seed, std::string_view label,
                        std::uint64_t index) -> std::uint64_t
{
  return detail::derive_key(master_seed, label, index);
}

}  // namespace emconv
