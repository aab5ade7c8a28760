#ifndef STREAMFORGE_DISTRIBUTIONS_HPP
#define STREAMFORGE_DISTRIBUTIONS_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>

#include "error.hpp"
#include "exec_grid.hpp"
#include "rng.hpp"

namespace streamforge {

/// Output shape. A length-n vector is laid out as a 1 x n matrix.
struct Shape {
  std::size_t nrow = 1;
  std::size_t ncol = 1;

  static Shape vector(std::size_t n) { return {1, n}; }
  static Shape matrix(std::size_t rows, std::size_t cols) { return {rows, cols}; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

struct FillRequest {
  Shape shape;
  WorkGrid grid;
  /// Exponential rate; ignored by the other generators.
  double rate = 1.0;
  /// Allocated row width; 0 means ncol.
  std::size_t npad = 0;
  ExecOptions exec;
};

namespace detail {

inline void validate_shape(const Shape& shape)
{
  if (shape.nrow == 0 || shape.ncol == 0)
    throw Error(Errc::invalid_argument, "dimensions must be at least 1");
}

} // namespace detail

/// -log(u) / rate.
inline double exponential_from_uniform(double u, double rate) noexcept
{
  return -std::log(u) / rate;
}

/// One Box-Muller step from two raw generator integers: the first sets the
/// radius, the second the angle. Returns {R cos(angle), R cos(angle - pi/2)}.
struct NormalPair {
  double first;
  double second;
};

inline NormalPair box_muller(std::uint32_t radius_draw, std::uint32_t angle_draw) noexcept
{
  constexpr double fact[2] = {Mrg31k3p::norm, 2.0 * std::numbers::pi * Mrg31k3p::norm};
  constexpr double add_for_sine[2] = {0.0, -std::numbers::pi / 2.0};
  const double part0 = fact[0] * static_cast<double>(radius_draw);
  const double part1 = fact[1] * static_cast<double>(angle_draw);
  const double radius = std::sqrt(-2.0 * std::log(part0));
  return {radius * std::cos(part1 + add_for_sine[0]), radius * std::cos(part1 + add_for_sine[1])};
}

/// Uniform doubles in (0, 1): the raw integer times 1/2^31.
inline MatrixBuffer<double> fill_uniform(StreamSet& set, const FillRequest& req)
{
  detail::validate_shape(req.shape);
  return run_grid<double>(set, req.grid, KernelKind::uniform, req.shape.nrow, req.shape.ncol,
                          req.npad, req.exec, [](StreamState& s) { return next_uniform(s); });
}

/// Raw generator integers in [1, 2147483647], same layout as fill_uniform.
inline MatrixBuffer<std::uint32_t> fill_uniform_integer(StreamSet& set, const FillRequest& req)
{
  detail::validate_shape(req.shape);
  return run_grid<std::uint32_t>(set, req.grid, KernelKind::uniform, req.shape.nrow,
                                 req.shape.ncol, req.npad, req.exec,
                                 [](StreamState& s) { return next_state(s); });
}

/// Exponential(rate) by inversion, x = -log(u) / rate.
inline MatrixBuffer<double> fill_exponential(StreamSet& set, const FillRequest& req)
{
  detail::validate_shape(req.shape);
  if (!(req.rate > 0.0) || !std::isfinite(req.rate))
    throw Error(Errc::invalid_rate, "rate must be positive and finite");
  const double rate = req.rate;
  return run_grid<double>(set, req.grid, KernelKind::exponential, req.shape.nrow,
                          req.shape.ncol, req.npad, req.exec, [rate](StreamState& s) {
                            return exponential_from_uniform(next_uniform(s), rate);
                          });
}

/// Box-Muller with paired lanes. Work items (i, j) and (i, j + 1), j even,
/// step together: lane 0 draws u1 from its stream, lane 1 draws the angle
/// from its own; lane 0 writes R cos(angle), lane 1 writes R cos(angle - pi/2).
/// When ncol is odd, lane 1 still draws on the final column and its value
/// is dropped.
inline MatrixBuffer<double> fill_normal(StreamSet& set, const FillRequest& req)
{
  detail::validate_shape(req.shape);
  const WorkGrid& grid = req.grid;
  grid.validate();
  if (grid.n1 % 2 != 0)
    throw Error(Errc::invalid_grid, "normal generation needs an even second grid dimension");
  require_streams(set, grid);

  const std::size_t nrow = req.shape.nrow;
  const std::size_t ncol = req.shape.ncol;
  MatrixBuffer<double> out(nrow, ncol, req.npad);
  const std::size_t pairs_per_row = grid.n1 / 2;

  parallel_for(grid.n0 * pairs_per_row, req.exec.resolved(), [&](std::size_t k) {
    const std::size_t i = k / pairs_per_row;
    const std::size_t j0 = 2 * (k % pairs_per_row);
    StreamState& shared0 = set[stream_index(KernelKind::normal, grid, i, j0)];
    StreamState& shared1 = set[stream_index(KernelKind::normal, grid, i, j0 + 1)];
    StreamState lane0 = shared0;
    StreamState lane1 = shared1;

    for (std::size_t r = i; r < nrow; r += grid.n0) {
      for (std::size_t c = j0; c < ncol; c += grid.n1) {
        const std::uint32_t a = next_state(lane0);
        const std::uint32_t b = next_state(lane1);
        const NormalPair z = box_muller(a, b);
        out(r, c) = z.first;
        if (c + 1 < ncol)
          out(r, c + 1) = z.second;
      }
    }
    shared0 = lane0;
    shared1 = lane1;
  });
  return out;
}

} // namespace streamforge

#endif // STREAMFORGE_DISTRIBUTIONS_HPP
