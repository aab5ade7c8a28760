#ifndef STREAMFORGE_RNG_HPP
#define STREAMFORGE_RNG_HPP

// MRG31k3p combined multiple recursive generator with stream creation by
// jump-ahead. Two order-3 components:
//
//   x1[n] = (2^22 x1[n-2] + (2^7 + 1) x1[n-3])  mod m1,  m1 = 2^31 - 1
//   x2[n] = (2^15 x2[n-1] + (2^15 + 1) x2[n-3]) mod m2,  m2 = 2^31 - 21069
//   z[n]  = (x1[n] - x2[n]) mod m1, with 0 reported as m1
//
// State triplets are stored newest first: g[0] = x[n-1], g[1] = x[n-2],
// g[2] = x[n-3].

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"

namespace streamforge {

struct Mrg31k3p {
  static constexpr std::uint32_t m1 = 2147483647u;
  static constexpr std::uint32_t m2 = 2147462579u;
  static constexpr std::uint64_t a12 = 4194304u; // 2^22
  static constexpr std::uint64_t a13 = 129u;     // 2^7 + 1
  static constexpr std::uint64_t a21 = 32768u;   // 2^15
  static constexpr std::uint64_t a23 = 32769u;   // 2^15 + 1
  /// Output scale: integers in [1, m1] map into (0, 1).
  static constexpr double norm = 1.0 / 2147483648.0;
  /// Streams start 2^134 steps apart.
  static constexpr unsigned stream_jump_exponent = 134;
  static constexpr unsigned period_exponent = 185;
};

static_assert(Mrg31k3p::norm * 2147483648.0 == 1.0);

using Triplet = std::array<std::uint32_t, 3>;

/// The six seed integers: component 1 triplet followed by component 2.
using Seed = std::array<std::uint32_t, 6>;

inline constexpr Seed default_seed{12345, 12345, 12345, 12345, 12345, 12345};

namespace detail {

inline bool valid_triplet(const Triplet& t, std::uint32_t modulus) noexcept
{
  bool nonzero = false;
  for (auto v : t) {
    if (v >= modulus)
      return false;
    nonzero = nonzero || v != 0;
  }
  return nonzero;
}

inline Triplet first_half(const Seed& s) noexcept { return {s[0], s[1], s[2]}; }
inline Triplet second_half(const Seed& s) noexcept { return {s[3], s[4], s[5]}; }

} // namespace detail

inline bool is_valid_seed(const Seed& s) noexcept
{
  return detail::valid_triplet(detail::first_half(s), Mrg31k3p::m1) &&
         detail::valid_triplet(detail::second_half(s), Mrg31k3p::m2);
}

inline void validate_seed(const Seed& s)
{
  if (!is_valid_seed(s))
    throw Error(Errc::invalid_seed,
                "each component must lie below its modulus and not be all zero");
}

/// One stream: current state plus the state it was created with.
struct StreamState {
  Triplet g1{};
  Triplet g2{};
  Triplet initial_g1{};
  Triplet initial_g2{};

  static StreamState from_seed(const Seed& s)
  {
    validate_seed(s);
    StreamState st;
    st.g1 = st.initial_g1 = detail::first_half(s);
    st.g2 = st.initial_g2 = detail::second_half(s);
    return st;
  }

  Seed current() const noexcept { return {g1[0], g1[1], g1[2], g2[0], g2[1], g2[2]}; }
  Seed initial() const noexcept
  {
    return {initial_g1[0], initial_g1[1], initial_g1[2],
            initial_g2[0], initial_g2[1], initial_g2[2]};
  }

  bool valid() const noexcept
  {
    return detail::valid_triplet(g1, Mrg31k3p::m1) && detail::valid_triplet(g2, Mrg31k3p::m2) &&
           detail::valid_triplet(initial_g1, Mrg31k3p::m1) &&
           detail::valid_triplet(initial_g2, Mrg31k3p::m2);
  }

  /// Restart from the initial state.
  void rewind() noexcept
  {
    g1 = initial_g1;
    g2 = initial_g2;
  }

  friend bool operator==(const StreamState&, const StreamState&) = default;
};

/// Advance one step; returns the combined output in [1, m1].
inline std::uint32_t next_state(StreamState& s) noexcept
{
  const std::uint64_t y1 =
      (Mrg31k3p::a12 * s.g1[1] + Mrg31k3p::a13 * s.g1[2]) % Mrg31k3p::m1;
  s.g1[2] = s.g1[1];
  s.g1[1] = s.g1[0];
  s.g1[0] = static_cast<std::uint32_t>(y1);

  const std::uint64_t y2 =
      (Mrg31k3p::a21 * s.g2[0] + Mrg31k3p::a23 * s.g2[2]) % Mrg31k3p::m2;
  s.g2[2] = s.g2[1];
  s.g2[1] = s.g2[0];
  s.g2[0] = static_cast<std::uint32_t>(y2);

  return s.g1[0] > s.g2[0] ? s.g1[0] - s.g2[0] : s.g1[0] - s.g2[0] + Mrg31k3p::m1;
}

/// Uniform in (0, 1): next_state scaled by 1/2^31.
inline double next_uniform(StreamState& s) noexcept
{
  return Mrg31k3p::norm * static_cast<double>(next_state(s));
}

// ---------------------------------------------------------------------------
// Jump-ahead

/// 3x3 matrix over Z/mZ acting on a newest-first state triplet.
struct ModMatrix {
  std::array<std::array<std::uint64_t, 3>, 3> a{};
  std::uint64_t modulus = 1;

  static ModMatrix identity(std::uint64_t m)
  {
    ModMatrix r;
    r.modulus = m;
    for (int i = 0; i < 3; ++i)
      r.a[i][i] = 1;
    return r;
  }

  friend ModMatrix operator*(const ModMatrix& x, const ModMatrix& y)
  {
    ModMatrix r;
    r.modulus = x.modulus;
    const std::uint64_t m = x.modulus;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        std::uint64_t acc = 0;
        for (int k = 0; k < 3; ++k)
          acc = (acc + x.a[i][k] * y.a[k][j] % m) % m;
        r.a[i][j] = acc;
      }
    return r;
  }

  Triplet apply(const Triplet& v) const
  {
    Triplet out{};
    for (int i = 0; i < 3; ++i) {
      std::uint64_t acc = 0;
      for (int k = 0; k < 3; ++k)
        acc = (acc + a[i][k] * v[k] % modulus) % modulus;
      out[i] = static_cast<std::uint32_t>(acc);
    }
    return out;
  }

  friend bool operator==(const ModMatrix&, const ModMatrix&) = default;
};

/// One-step transition matrices of the two components.
inline ModMatrix component1_step()
{
  ModMatrix m;
  m.modulus = Mrg31k3p::m1;
  m.a = {{{0, Mrg31k3p::a12, Mrg31k3p::a13}, {1, 0, 0}, {0, 1, 0}}};
  return m;
}

inline ModMatrix component2_step()
{
  ModMatrix m;
  m.modulus = Mrg31k3p::m2;
  m.a = {{{Mrg31k3p::a21, 0, Mrg31k3p::a23}, {1, 0, 0}, {0, 1, 0}}};
  return m;
}

/// M^(2^e) by e successive squarings.
inline ModMatrix power_of_two(ModMatrix m, unsigned e)
{
  for (unsigned i = 0; i < e; ++i)
    m = m * m;
  return m;
}

struct JumpMatrices {
  ModMatrix c1;
  ModMatrix c2;

  static JumpMatrices for_exponent(unsigned e)
  {
    return {power_of_two(component1_step(), e), power_of_two(component2_step(), e)};
  }
};

/// Jump matrices for the stream spacing, computed once on first use.
inline const JumpMatrices& stream_jump()
{
  static const JumpMatrices jm = JumpMatrices::for_exponent(Mrg31k3p::stream_jump_exponent);
  return jm;
}

inline void apply_jump(StreamState& s, const JumpMatrices& jm)
{
  s.g1 = jm.c1.apply(s.g1);
  s.g2 = jm.c2.apply(s.g2);
}

/// State after 2^e steps. Initial state is carried over unchanged.
inline StreamState jump_ahead(StreamState s, unsigned e)
{
  if (e == Mrg31k3p::stream_jump_exponent)
    apply_jump(s, stream_jump());
  else
    apply_jump(s, JumpMatrices::for_exponent(e));
  return s;
}

// ---------------------------------------------------------------------------
// Stream creation

/// Holds the seed the next created stream receives.
struct CreatorState {
  Seed next_seed = default_seed;

  friend bool operator==(const CreatorState&, const CreatorState&) = default;
};

inline CreatorState set_base_creator(const Seed& seed)
{
  validate_seed(seed);
  return CreatorState{seed};
}

/// Ordered collection of streams; order is creation order.
struct StreamSet {
  std::vector<StreamState> streams;

  std::size_t count() const noexcept { return streams.size(); }
  StreamState& operator[](std::size_t i) { return streams[i]; }
  const StreamState& operator[](std::size_t i) const { return streams[i]; }
  auto begin() { return streams.begin(); }
  auto end() { return streams.end(); }
  auto begin() const { return streams.begin(); }
  auto end() const { return streams.end(); }

  friend bool operator==(const StreamSet&, const StreamSet&) = default;
};

struct CreatedStreams {
  StreamSet set;
  CreatorState creator;
};

/// Creates n streams spaced 2^134 apart, starting at the creator's seed.
inline CreatedStreams create_streams(const CreatorState& creator, std::size_t n)
{
  if (n == 0)
    throw Error(Errc::invalid_argument, "number of streams must be at least 1");
  validate_seed(creator.next_seed);

  const auto& jm = stream_jump();
  CreatedStreams out;
  out.set.streams.reserve(n);
  StreamState cursor = StreamState::from_seed(creator.next_seed);
  for (std::size_t k = 0; k < n; ++k) {
    StreamState s = cursor;
    s.initial_g1 = s.g1;
    s.initial_g2 = s.g2;
    out.set.streams.push_back(s);
    apply_jump(cursor, jm);
  }
  out.creator.next_seed = cursor.current();
  return out;
}

inline StreamSet create_streams(std::size_t n)
{
  return create_streams(CreatorState{}, n).set;
}

} // namespace streamforge

#endif // STREAMFORGE_RNG_HPP
