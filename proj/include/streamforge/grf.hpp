#ifndef STREAMFORGE_GRF_HPP
#define STREAMFORGE_GRF_HPP

// Gaussian random fields with geometrically anisotropic Matern covariance,
// simulated by direct decomposition: Sigma = L D L^T per parameter set,
// then U = L D^(1/2) Z. Parameter sets are processed as a batch of
// same-sized blocks stacked by row.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "bessel.hpp"
#include "distributions.hpp"
#include "error.hpp"
#include "exec_grid.hpp"
#include "rng.hpp"

namespace streamforge {

struct MaternParams {
  double shape = 1.0;     // kappa
  double range = 1.0;     // phi
  double variance = 1.0;  // sigma^2
  double aniso_ratio = 1.0;
  double aniso_angle = 0.0; // radians

  void validate() const
  {
    const auto finite_positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!finite_positive(shape))
      throw Error(Errc::invalid_params, "shape must be positive");
    if (!finite_positive(range))
      throw Error(Errc::invalid_params, "range must be positive");
    if (!finite_positive(variance))
      throw Error(Errc::invalid_params, "variance must be positive");
    if (!std::isfinite(aniso_ratio) || aniso_ratio < 1.0)
      throw Error(Errc::invalid_params, "anisotropy ratio must be at least 1");
    if (!std::isfinite(aniso_angle))
      throw Error(Errc::invalid_params, "anisotropy angle must be finite");
  }
};

struct Point {
  double x;
  double y;
};

/// Regular grid of square cells. Cells are numbered row-major with row 0 at
/// the top (largest y), matching raster conventions.
struct GridSpec {
  std::size_t ncell_x = 1;
  std::size_t ncell_y = 1;
  double cell_size = 1.0;
  double origin_x = 0.0; // lower-left corner
  double origin_y = 0.0;

  std::size_t cells() const noexcept { return ncell_x * ncell_y; }

  void validate() const
  {
    if (ncell_x == 0 || ncell_y == 0)
      throw Error(Errc::invalid_argument, "grid dimensions must be positive");
    if (!(cell_size > 0.0) || !std::isfinite(cell_size))
      throw Error(Errc::invalid_argument, "cell size must be positive");
  }

  Point center(std::size_t row, std::size_t col) const
  {
    return {origin_x + (static_cast<double>(col) + 0.5) * cell_size,
            origin_y + (static_cast<double>(ncell_y - row) - 0.5) * cell_size};
  }

  std::vector<Point> centers() const
  {
    std::vector<Point> pts;
    pts.reserve(cells());
    for (std::size_t r = 0; r < ncell_y; ++r)
      for (std::size_t c = 0; c < ncell_x; ++c)
        pts.push_back(center(r, c));
    return pts;
  }
};

// ---------------------------------------------------------------------------
// Matern covariance

/// Correlation at displacement (dx, dy). The displacement is rotated by the
/// anisotropy angle, then its y component is stretched by the ratio:
///   rho(d) = 2^(1-kappa) / Gamma(kappa) * t^kappa * K_kappa(t),
///   t = sqrt(8 kappa) |d'| / phi.
inline double matern_correlation(const MaternParams& p, double dx, double dy)
{
  const double c = std::cos(p.aniso_angle);
  const double s = std::sin(p.aniso_angle);
  const double rx = c * dx - s * dy;
  const double ry = p.aniso_ratio * (s * dx + c * dy);
  const double dist = std::hypot(rx, ry);
  if (dist == 0.0)
    return 1.0;
  const double t = std::sqrt(8.0 * p.shape) * dist / p.range;
  // exp(kappa log t - t) keeps t^kappa e^-t finite for large t
  const double log_norm = (1.0 - p.shape) * std::numbers::ln2 - std::lgamma(p.shape);
  return std::exp(log_norm + p.shape * std::log(t) - t) * bessel_k_scaled(p.shape, t);
}

inline double matern_covariance(const MaternParams& p, double dx, double dy)
{
  if (dx == 0.0 && dy == 0.0)
    return p.variance;
  return p.variance * matern_correlation(p, dx, dy);
}

/// B row-stacked n x n blocks; block b occupies rows [b n, (b+1) n).
struct BatchedMatrix {
  std::size_t batch_count = 0;
  std::size_t n = 0;
  std::vector<double> data;

  BatchedMatrix() = default;
  BatchedMatrix(std::size_t batches, std::size_t dim)
      : batch_count(batches), n(dim), data(batches * dim * dim, 0.0)
  {
  }

  std::size_t rows() const noexcept { return batch_count * n; }
  std::span<double> block(std::size_t b) { return {data.data() + b * n * n, n * n}; }
  std::span<const double> block(std::size_t b) const { return {data.data() + b * n * n, n * n}; }
  double& operator()(std::size_t b, std::size_t i, std::size_t j) { return data[(b * n + i) * n + j]; }
  double operator()(std::size_t b, std::size_t i, std::size_t j) const
  {
    return data[(b * n + i) * n + j];
  }
};

/// Row b holds the diagonal of D_b.
struct DiagBatch {
  std::size_t batch_count = 0;
  std::size_t n = 0;
  std::vector<double> data;

  DiagBatch() = default;
  DiagBatch(std::size_t batches, std::size_t dim)
      : batch_count(batches), n(dim), data(batches * dim, 0.0)
  {
  }

  std::span<double> row(std::size_t b) { return {data.data() + b * n, n}; }
  std::span<const double> row(std::size_t b) const { return {data.data() + b * n, n}; }
};

namespace detail {

inline void validate_params_list(std::span<const MaternParams> params)
{
  if (params.empty())
    throw Error(Errc::invalid_params, "at least one parameter set is required");
  for (const auto& p : params)
    p.validate();
}

} // namespace detail

/// One covariance block per parameter set over arbitrary locations. The
/// upper triangle is evaluated and mirrored, so blocks are exactly symmetric.
inline BatchedMatrix matern_cov(std::span<const MaternParams> params,
                                std::span<const Point> coords, const ExecOptions& exec = {})
{
  detail::validate_params_list(params);
  if (coords.empty())
    throw Error(Errc::invalid_argument, "at least one location is required");
  const std::size_t n = coords.size();
  BatchedMatrix out(params.size(), n);
  parallel_for(params.size() * n, exec.resolved(), [&](std::size_t k) {
    const std::size_t b = k / n;
    const std::size_t i = k % n;
    const MaternParams& p = params[b];
    out(b, i, i) = p.variance;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v =
          matern_covariance(p, coords[i].x - coords[j].x, coords[i].y - coords[j].y);
      out(b, i, j) = v;
      out(b, j, i) = v;
    }
  });
  return out;
}

/// Grid version: covariance depends only on the cell lag, so each block is
/// filled from a table of (2 ny - 1)(2 nx - 1) lag values.
inline BatchedMatrix matern_cov(std::span<const MaternParams> params, const GridSpec& grid,
                                const ExecOptions& exec = {})
{
  detail::validate_params_list(params);
  grid.validate();
  const std::size_t nx = grid.ncell_x;
  const std::size_t ny = grid.ncell_y;
  const std::size_t n = grid.cells();
  const std::size_t lag_cols = 2 * nx - 1;
  const std::size_t lag_rows = 2 * ny - 1;
  const unsigned threads = exec.resolved();

  BatchedMatrix out(params.size(), n);
  std::vector<double> lag(lag_rows * lag_cols);
  for (std::size_t b = 0; b < params.size(); ++b) {
    const MaternParams& p = params[b];
    // lag index (dr + ny - 1, dc + nx - 1) for dr = r_i - r_j, dc = c_i - c_j;
    // rows grow downward, so dy = -dr * cell_size.
    parallel_for(lag_rows, threads, [&](std::size_t lr) {
      const double dr = static_cast<double>(lr) - static_cast<double>(ny - 1);
      for (std::size_t lc = 0; lc < lag_cols; ++lc) {
        const double dc = static_cast<double>(lc) - static_cast<double>(nx - 1);
        lag[lr * lag_cols + lc] =
            matern_covariance(p, dc * grid.cell_size, -dr * grid.cell_size);
      }
    });
    parallel_for(n, threads, [&](std::size_t i) {
      const std::size_t ri = i / nx, ci = i % nx;
      out(b, i, i) = p.variance;
      for (std::size_t j = i + 1; j < n; ++j) {
        const std::size_t rj = j / nx, cj = j % nx;
        const double v = lag[(ri + ny - 1 - rj) * lag_cols + (ci + nx - 1 - cj)];
        out(b, i, j) = v;
        out(b, j, i) = v;
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batched LDL^T

namespace detail {

inline constexpr std::size_t ldl_row_block = 8;

/// In-place LDL^T of one row-major n x n symmetric block (lower triangle read).
/// Rows are produced top to bottom in groups of ldl_row_block:
///   w_ij = a_ij - sum_{k<j} w_ik l_jk,  l_ij = w_ij / d_j,
///   d_i  = a_ii - sum_{k<i} w_ik l_ik,
/// where w_ik = l_ik d_k. The w values of the current row group are kept
/// interleaved so one pass over l_j serves every row of the group.
inline void ldl_block(std::span<double> a, std::span<double> d, std::size_t n, std::size_t batch)
{
  constexpr std::size_t rb = ldl_row_block;
  std::vector<double> w(n * rb, 0.0); // w[k * rb + r]

  for (std::size_t i0 = 0; i0 < n; i0 += rb) {
    const std::size_t nb = std::min(rb, n - i0);

    for (std::size_t j = 0; j < i0; ++j) {
      const double* lj = &a[j * n];
      double acc[rb] = {};
      for (std::size_t k = 0; k < j; ++k) {
        const double l = lj[k];
        const double* wk = &w[k * rb];
        for (std::size_t r = 0; r < rb; ++r)
          acc[r] += wk[r] * l;
      }
      for (std::size_t r = 0; r < nb; ++r) {
        double& aij = a[(i0 + r) * n + j];
        const double s = aij - acc[r];
        w[j * rb + r] = s;
        aij = s / d[j];
      }
    }

    for (std::size_t r = 0; r < nb; ++r) {
      const std::size_t i = i0 + r;
      double* li = &a[i * n];
      for (std::size_t j = i0; j < i; ++j) {
        const double* lj = &a[j * n];
        double acc = 0.0;
        for (std::size_t k = 0; k < j; ++k)
          acc += w[k * rb + r] * lj[k];
        const double s = li[j] - acc;
        w[j * rb + r] = s;
        li[j] = s / d[j];
      }
      double acc = 0.0;
      for (std::size_t k = 0; k < i; ++k)
        acc += w[k * rb + r] * li[k];
      const double pivot = li[i] - acc;
      if (!(pivot > 0.0) || !std::isfinite(pivot))
        throw NotPositiveDefinite(batch, i);
      d[i] = pivot;
      li[i] = 1.0;
      std::fill(li + i + 1, li + n, 0.0);
    }
    std::fill(w.begin(), w.end(), 0.0);
  }
}

} // namespace detail

/// Factorizes every block in place: on return each block holds its unit
/// lower-triangular L (upper triangle zeroed) and the result holds D.
inline DiagBatch chol_batch_in_place(BatchedMatrix& m, const ExecOptions& exec = {})
{
  DiagBatch diag(m.batch_count, m.n);
  parallel_for(m.batch_count, exec.resolved(), [&](std::size_t b) {
    detail::ldl_block(m.block(b), diag.row(b), m.n, b);
  });
  return diag;
}

struct LdlFactors {
  BatchedMatrix lower;
  DiagBatch diag;
};

inline LdlFactors chol_batch(const BatchedMatrix& m, const ExecOptions& exec = {})
{
  LdlFactors f{m, {}};
  f.diag = chol_batch_in_place(f.lower, exec);
  return f;
}

// ---------------------------------------------------------------------------
// L D^(1/2) Z

enum class DiagTransform { sqrt, identity };

/// out block b = L_b diag(t(D_b)) Z_b. Z either has n rows, shared by every
/// batch, or B n rows, block b using rows [b n, (b+1) n).
inline MatrixBuffer<double> multiply_lower_diag_batch(const BatchedMatrix& lower,
                                                      const DiagBatch& diag,
                                                      const MatrixBuffer<double>& z,
                                                      DiagTransform transform,
                                                      const ExecOptions& exec = {})
{
  const std::size_t n = lower.n;
  const std::size_t batches = lower.batch_count;
  if (diag.batch_count != batches || diag.n != n)
    throw Error(Errc::invalid_shapes, "diagonal batch does not match the factor batch");
  const bool shared = z.nrow == n;
  if (!shared && z.nrow != batches * n)
    throw Error(Errc::invalid_shapes, "Z must have n or B*n rows (got " +
                                          std::to_string(z.nrow) + ", n = " + std::to_string(n) +
                                          ")");
  const std::size_t p = z.ncol;
  if (p == 0)
    throw Error(Errc::invalid_shapes, "Z has no columns");

  MatrixBuffer<double> out(batches * n, p);
  parallel_for(batches, exec.resolved(), [&](std::size_t b) {
    const std::size_t zrow0 = shared ? 0 : b * n;
    const auto d = diag.row(b);
    std::vector<double> scaled(n * p); // t(d_k) z_kc
    for (std::size_t k = 0; k < n; ++k) {
      const double f = transform == DiagTransform::sqrt ? std::sqrt(d[k]) : d[k];
      for (std::size_t c = 0; c < p; ++c)
        scaled[k * p + c] = f * z(zrow0 + k, c);
    }
    for (std::size_t r = 0; r < n; ++r) {
      double* dst = &out(b * n + r, 0);
      for (std::size_t k = 0; k <= r; ++k) {
        const double l = lower(b, r, k);
        if (l == 0.0)
          continue;
        const double* src = &scaled[k * p];
        for (std::size_t c = 0; c < p; ++c)
          dst[c] += l * src[c];
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// End to end

/// Simulated fields, ordered by parameter set then realization; each field
/// is ncell_y x ncell_x, row-major.
struct RealizationStack {
  std::size_t batch_count = 0;
  std::size_t realizations = 0;
  std::size_t ny = 0;
  std::size_t nx = 0;
  std::vector<double> values;

  std::size_t field_count() const noexcept { return batch_count * realizations; }
  std::size_t cells() const noexcept { return ny * nx; }

  std::span<const double> field(std::size_t batch, std::size_t realization) const
  {
    return {values.data() + (batch * realizations + realization) * cells(), cells()};
  }
};

struct GrfOptions {
  WorkGrid work_grid{64, 8};
  ExecOptions exec;
};

/// Covariance, LDL^T, normals of shape (B n) x realizations drawn with
/// fill_normal (block b uses its own n rows), then U = L D^(1/2) Z.
inline RealizationStack simulate_grf(std::span<const MaternParams> params, const GridSpec& grid,
                                     std::size_t realizations, StreamSet& set,
                                     const GrfOptions& options = {})
{
  if (realizations == 0)
    throw Error(Errc::invalid_argument, "at least one realization is required");
  detail::validate_params_list(params);
  grid.validate();
  if (options.work_grid.n1 % 2 != 0)
    throw Error(Errc::invalid_grid, "normal generation needs an even second grid dimension");
  require_streams(set, options.work_grid);

  BatchedMatrix cov = matern_cov(params, grid, options.exec);
  const DiagBatch diag = chol_batch_in_place(cov, options.exec);

  FillRequest req;
  req.shape = Shape::matrix(cov.rows(), realizations);
  req.grid = options.work_grid;
  req.exec = options.exec;
  const MatrixBuffer<double> z = fill_normal(set, req);

  const MatrixBuffer<double> u =
      multiply_lower_diag_batch(cov, diag, z, DiagTransform::sqrt, options.exec);

  RealizationStack stack;
  stack.batch_count = params.size();
  stack.realizations = realizations;
  stack.ny = grid.ncell_y;
  stack.nx = grid.ncell_x;
  stack.values.resize(stack.field_count() * stack.cells());
  const std::size_t n = grid.cells();
  for (std::size_t b = 0; b < stack.batch_count; ++b)
    for (std::size_t r = 0; r < realizations; ++r) {
      double* dst = stack.values.data() + (b * realizations + r) * n;
      for (std::size_t cell = 0; cell < n; ++cell)
        dst[cell] = u(b * n + cell, r);
    }
  return stack;
}

} // namespace streamforge

#endif // STREAMFORGE_GRF_HPP
