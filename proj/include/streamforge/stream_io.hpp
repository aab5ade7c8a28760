#ifndef STREAMFORGE_STREAM_IO_HPP
#define STREAMFORGE_STREAM_IO_HPP

// Stream file format:
//
//   streamforge-streams v1 count=<n>
//   g1[0] g1[1] g1[2] g2[0] g2[1] g2[2] ig1[0] ig1[1] ig1[2] ig2[0] ig2[1] ig2[2]
//   ... one line per stream, creation order
//
// Integers are unsigned decimal, separated by single spaces.

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace streamforge {

inline constexpr std::string_view stream_file_magic = "streamforge-streams v1 count=";

inline void save_streams(const StreamSet& set, std::ostream& os)
{
  os << stream_file_magic << set.count() << '\n';
  for (const auto& s : set) {
    const std::array<const Triplet*, 4> parts{&s.g1, &s.g2, &s.initial_g1, &s.initial_g2};
    bool first = true;
    for (const Triplet* t : parts)
      for (auto v : *t) {
        if (!first)
          os << ' ';
        os << v;
        first = false;
      }
    os << '\n';
  }
  if (!os)
    throw Error(Errc::io_failure, "failed writing stream data");
}

namespace detail {

[[noreturn]] inline void corrupt(std::size_t line, const std::string& what)
{
  throw Error(Errc::corrupt_stream_file, "line " + std::to_string(line) + ": " + what);
}

inline std::uint64_t parse_unsigned(std::string_view token, std::size_t line)
{
  if (token.empty() || token.size() > 19)
    corrupt(line, "bad integer '" + std::string(token) + "'");
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    corrupt(line, "bad integer '" + std::string(token) + "'");
  return v;
}

inline std::vector<std::string_view> split_spaces(std::string_view s)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(' ', start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

} // namespace detail

inline StreamSet load_streams(std::istream& is)
{
  std::string header;
  if (!std::getline(is, header))
    detail::corrupt(1, "missing header");
  if (!header.empty() && header.back() == '\r')
    header.pop_back();
  if (header.rfind(stream_file_magic, 0) != 0)
    detail::corrupt(1, "unrecognized header");
  const std::uint64_t count =
      detail::parse_unsigned(std::string_view(header).substr(stream_file_magic.size()), 1);
  if (count == 0)
    detail::corrupt(1, "count must be at least 1");

  StreamSet set;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty()) {
      // only tolerated as trailing blank lines
      std::string rest;
      while (std::getline(is, rest))
        if (!rest.empty() && rest != "\r")
          detail::corrupt(lineno, "blank line inside stream data");
      break;
    }
    if (set.count() == count)
      detail::corrupt(lineno, "more streams than the header count");
    const auto tokens = detail::split_spaces(line);
    if (tokens.size() != 12)
      detail::corrupt(lineno, "expected 12 integers, found " + std::to_string(tokens.size()));

    std::array<std::uint32_t, 12> v{};
    for (std::size_t k = 0; k < 12; ++k) {
      const std::uint64_t x = detail::parse_unsigned(tokens[k], lineno);
      const std::uint32_t modulus = (k % 6) < 3 ? Mrg31k3p::m1 : Mrg31k3p::m2;
      if (x >= modulus)
        detail::corrupt(lineno, "value " + std::to_string(x) + " out of range");
      v[k] = static_cast<std::uint32_t>(x);
    }
    StreamState s;
    s.g1 = {v[0], v[1], v[2]};
    s.g2 = {v[3], v[4], v[5]};
    s.initial_g1 = {v[6], v[7], v[8]};
    s.initial_g2 = {v[9], v[10], v[11]};
    if (!s.valid())
      detail::corrupt(lineno, "all-zero state component");
    set.streams.push_back(s);
  }
  if (set.count() != count)
    detail::corrupt(lineno, "header announces " + std::to_string(count) + " streams, found " +
                                std::to_string(set.count()));
  return set;
}

inline StreamSet load_streams(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(Errc::io_failure, "cannot open " + path.string());
  return load_streams(in);
}

/// Writes through a sibling temporary file and renames it into place, so an
/// interrupted write leaves the previous file intact.
inline void save_streams(const StreamSet& set, const std::filesystem::path& path)
{
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error(Errc::io_failure, "cannot write " + tmp.string());
    save_streams(set, out);
    out.flush();
    if (!out)
      throw Error(Errc::io_failure, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::io_failure, "cannot replace " + path.string());
  }
}

inline std::string to_string(const StreamSet& set)
{
  std::ostringstream os;
  save_streams(set, os);
  return os.str();
}

} // namespace streamforge

#endif // STREAMFORGE_STREAM_IO_HPP
