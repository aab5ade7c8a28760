#ifndef STREAMFORGE_FISHER_HPP
#define STREAMFORGE_FISHER_HPP

// Monte Carlo Fisher exact test for I x J contingency tables. Each
// replicate samples a table with the observed margins (Patefield's
// sequential conditional algorithm) and scores it with -sum log(n_ij!).
// Tables scoring at or below the observed value count as extreme.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "exec_grid.hpp"
#include "rng.hpp"

namespace streamforge {

using Count = std::int64_t;

class ContingencyTable {
public:
  ContingencyTable(std::size_t rows, std::size_t cols, std::vector<Count> cells)
      : rows_(rows), cols_(cols), cells_(std::move(cells))
  {
    if (rows == 0 || cols == 0 || cells_.size() != rows * cols)
      throw Error(Errc::invalid_argument, "table shape does not match its cell count");
    if (rows * cols < 2)
      throw Error(Errc::invalid_argument, "a 1x1 table is degenerate");
    for (Count v : cells_)
      if (v < 0)
        throw Error(Errc::invalid_argument, "table entries must be non-negative");
    if (total() < 1)
      throw Error(Errc::invalid_argument, "table total must be at least 1");
  }

  static ContingencyTable from_rows(const std::vector<std::vector<Count>>& rows)
  {
    if (rows.empty())
      throw Error(Errc::invalid_argument, "empty table");
    std::vector<Count> cells;
    for (const auto& r : rows) {
      if (r.size() != rows.front().size())
        throw Error(Errc::invalid_argument, "ragged table rows");
      cells.insert(cells.end(), r.begin(), r.end());
    }
    return ContingencyTable(rows.size(), rows.front().size(), std::move(cells));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  Count operator()(std::size_t i, std::size_t j) const { return cells_[i * cols_ + j]; }
  std::span<const Count> cells() const noexcept { return cells_; }

  Count total() const { return std::accumulate(cells_.begin(), cells_.end(), Count{0}); }

  std::vector<Count> row_margins() const
  {
    std::vector<Count> m(rows_, 0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j)
        m[i] += (*this)(i, j);
    return m;
  }

  std::vector<Count> col_margins() const
  {
    std::vector<Count> m(cols_, 0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j)
        m[j] += (*this)(i, j);
    return m;
  }

  friend bool operator==(const ContingencyTable&, const ContingencyTable&) = default;

private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Count> cells_;
};

/// log(k!) for k = 0..max_n, via lgamma.
class LogFactorials {
public:
  explicit LogFactorials(Count max_n) : values_(static_cast<std::size_t>(max_n) + 1)
  {
    for (std::size_t k = 0; k < values_.size(); ++k)
      values_[k] = std::lgamma(static_cast<double>(k) + 1.0);
    values_[0] = values_[1] = 0.0;
  }

  double operator()(Count k) const { return values_[static_cast<std::size_t>(k)]; }
  Count max_n() const noexcept { return static_cast<Count>(values_.size()) - 1; }

private:
  std::vector<double> values_;
};

/// -sum log(n_ij!) over the table.
inline double logfact_sum(std::span<const Count> cells, const LogFactorials& lf)
{
  double s = 0.0;
  for (Count v : cells)
    s += lf(v);
  return -s;
}

inline double logfact_sum(const ContingencyTable& t)
{
  Count max_cell = 0;
  for (Count v : t.cells())
    max_cell = std::max(max_cell, v);
  return logfact_sum(t.cells(), LogFactorials(max_cell));
}

namespace detail {

/// Inverts the conditional (hypergeometric) distribution of one cell given
/// the remaining row total `ia`, column total `id` and grand total `ie`.
/// The search starts at the rounded conditional mean and alternates one step
/// up, one step down, accumulating probability until it reaches u. If
/// rounding leaves the accumulated mass short of u, u is scaled by that mass
/// and the search repeats, so exactly one uniform is used per cell.
inline Count sample_cell(Count ia, Count id, Count ie, double u, const LogFactorials& lf)
{
  if (ia == 0 || id == 0)
    return 0;
  const Count ib = ie - ia;
  const Count ic = ie - id;
  const Count ii = ib - id;
  const Count start = static_cast<Count>(static_cast<double>(ia) *
                                             (static_cast<double>(id) / static_cast<double>(ie)) +
                                         0.5);
  const double p_start = std::exp(lf(ia) + lf(ib) + lf(ic) + lf(id) - lf(ie) - lf(start) -
                                   lf(id - start) - lf(ia - start) - lf(ii + start));

  while (true) {
    double cumulative = p_start;
    if (cumulative >= u)
      return start;
    Count up = start;
    Count down = start;
    double p_up = p_start;
    double p_down = p_start;
    while (true) {
      const double up_factor = static_cast<double>(id - up) * static_cast<double>(ia - up);
      const double down_factor = static_cast<double>(down) * static_cast<double>(ii + down);
      if (up_factor == 0.0 && down_factor == 0.0)
        break;
      if (up_factor != 0.0) {
        ++up;
        p_up *= up_factor / (static_cast<double>(up) * static_cast<double>(ii + up));
        cumulative += p_up;
        if (cumulative >= u)
          return up;
      }
      if (down_factor != 0.0) {
        --down;
        p_down *= down_factor /
                  (static_cast<double>(id - down) * static_cast<double>(ia - down));
        cumulative += p_down;
        if (cumulative >= u)
          return down;
      }
    }
    u *= cumulative;
  }
}

/// Samples into `cells` (rows x cols, row-major). `scratch` needs cols entries.
/// Consumes exactly (rows - 1)(cols - 1) values from next_uniform.
template <class UniformSource>
void rcont2_into(std::span<const Count> row_margins, std::span<const Count> col_margins,
                 Count total, const LogFactorials& lf, UniformSource&& next_uniform,
                 std::span<Count> cells, std::span<Count> scratch)
{
  const std::size_t rows = row_margins.size();
  const std::size_t cols = col_margins.size();
  for (std::size_t m = 0; m < cols; ++m)
    scratch[m] = col_margins[m];

  Count remaining = total;
  for (std::size_t l = 0; l + 1 < rows; ++l) {
    Count ia = row_margins[l];
    Count ie = remaining;
    remaining -= ia;
    for (std::size_t m = 0; m + 1 < cols; ++m) {
      const Count id = scratch[m];
      const double u = next_uniform();
      const Count v = sample_cell(ia, id, ie, u, lf);
      ie -= id;
      cells[l * cols + m] = v;
      ia -= v;
      scratch[m] -= v;
    }
    cells[l * cols + cols - 1] = ia;
    scratch[cols - 1] -= ia;
  }
  for (std::size_t m = 0; m < cols; ++m)
    cells[(rows - 1) * cols + m] = scratch[m];
}

inline void validate_margins(std::span<const Count> row_margins,
                             std::span<const Count> col_margins)
{
  if (row_margins.empty() || col_margins.empty())
    throw Error(Errc::invalid_margins, "margins must be non-empty");
  Count rs = 0, cs = 0;
  for (Count v : row_margins) {
    if (v < 0)
      throw Error(Errc::invalid_margins, "negative row margin");
    rs += v;
  }
  for (Count v : col_margins) {
    if (v < 0)
      throw Error(Errc::invalid_margins, "negative column margin");
    cs += v;
  }
  if (rs != cs)
    throw Error(Errc::invalid_margins, "row and column totals differ (" + std::to_string(rs) +
                                           " vs " + std::to_string(cs) + ")");
}

} // namespace detail

/// Random table with the given margins. `next_uniform` must return values in (0, 1).
template <class UniformSource>
ContingencyTable rcont2(std::span<const Count> row_margins, std::span<const Count> col_margins,
                        UniformSource&& next_uniform)
{
  detail::validate_margins(row_margins, col_margins);
  const Count total = std::accumulate(row_margins.begin(), row_margins.end(), Count{0});
  const LogFactorials lf(total);
  std::vector<Count> cells(row_margins.size() * col_margins.size());
  std::vector<Count> scratch(col_margins.size());
  detail::rcont2_into(row_margins, col_margins, total, lf, next_uniform, cells, scratch);
  return ContingencyTable(row_margins.size(), col_margins.size(), std::move(cells));
}

struct FisherResult {
  double threshold = 0.0;
  std::uint64_t sim_num = 0;
  std::uint64_t counts = 0;
  double p_value = 1.0;
  /// Per-replicate statistics, work item 0's replicates first; empty unless requested.
  std::vector<double> statistics;
};

struct FisherOptions {
  bool return_statistics = false;
  ExecOptions exec;
};

/// Relative slack applied to the observed statistic so that tables tied
/// with it count as extreme despite rounding.
inline constexpr double fisher_tie_tolerance = 1e-7;

inline double relaxed_threshold(double threshold) noexcept
{
  return threshold + fisher_tie_tolerance * std::fabs(threshold);
}

/// Replicates actually run: n rounded up to a multiple of the work-item count.
inline std::uint64_t rounded_replicates(std::uint64_t n, const WorkGrid& grid)
{
  const std::uint64_t w = grid.size();
  return (n + w - 1) / w * w;
}

/// Each work item runs sim_num / items replicates on its own stream (stream
/// ordinal i + n0 * j).
inline FisherResult fisher_sim(const ContingencyTable& table, std::uint64_t n_replicates,
                               StreamSet& set, const WorkGrid& grid,
                               const FisherOptions& options = {})
{
  if (n_replicates < 1)
    throw Error(Errc::invalid_argument, "number of replicates must be at least 1");
  grid.validate();
  require_streams(set, grid);

  const auto row_m = table.row_margins();
  const auto col_m = table.col_margins();
  const Count total = table.total();
  const LogFactorials lf(total);

  FisherResult result;
  result.threshold = logfact_sum(table.cells(), lf);
  result.sim_num = rounded_replicates(n_replicates, grid);
  const std::uint64_t per_item = result.sim_num / grid.size();
  const double limit = relaxed_threshold(result.threshold);

  std::vector<std::uint64_t> item_counts(grid.size(), 0);
  if (options.return_statistics)
    result.statistics.assign(result.sim_num, 0.0);

  run_work_items(set, grid, StreamOrder::column_major, options.exec,
                 [&](std::size_t i, std::size_t j, StreamState& s) {
                   const std::size_t item = stream_index(StreamOrder::column_major, grid, i, j);
                   std::vector<Count> cells(table.rows() * table.cols());
                   std::vector<Count> scratch(table.cols());
                   auto draw = [&s] { return next_uniform(s); };
                   std::uint64_t hits = 0;
                   for (std::uint64_t r = 0; r < per_item; ++r) {
                     detail::rcont2_into(row_m, col_m, total, lf, draw, cells, scratch);
                     const double stat = logfact_sum(cells, lf);
                     if (stat <= limit)
                       ++hits;
                     if (options.return_statistics)
                       result.statistics[item * per_item + r] = stat;
                   }
                   item_counts[item] = hits;
                 });

  result.counts = std::accumulate(item_counts.begin(), item_counts.end(), std::uint64_t{0});
  result.p_value =
      static_cast<double>(1 + result.counts) / static_cast<double>(result.sim_num + 1);
  return result;
}

} // namespace streamforge

#endif // STREAMFORGE_FISHER_HPP
