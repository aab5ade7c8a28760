#ifndef STREAMFORGE_EXEC_GRID_HPP
#define STREAMFORGE_EXEC_GRID_HPP

// Deterministic CPU emulation of a two-dimensional NDRange. Work item (i, j)
// owns the cells {(r, c) : r = i mod n0, c = j mod n1} and visits them
// row-major; the k-th value drawn from its stream lands at its k-th cell.
// Work items run on a pool of threads but never share a stream or a cell,
// so results do not depend on the thread count.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace streamforge {

struct WorkGrid {
  std::size_t n0 = 64;
  std::size_t n1 = 8;

  std::size_t size() const noexcept { return n0 * n1; }

  void validate() const
  {
    if (n0 == 0 || n1 == 0)
      throw Error(Errc::invalid_grid, "work grid dimensions must be positive");
  }

  friend bool operator==(const WorkGrid&, const WorkGrid&) = default;
};

/// How a kernel maps work item (i, j) to a stream ordinal.
///  column_major: i + n0 * j   (uniform kernel)
///  row_major:    i * n1 + j   (normal and exponential kernels)
enum class StreamOrder { column_major, row_major };

enum class KernelKind { uniform, normal, exponential };

constexpr StreamOrder stream_order(KernelKind kind) noexcept
{
  return kind == KernelKind::uniform ? StreamOrder::column_major : StreamOrder::row_major;
}

inline std::size_t stream_index(StreamOrder order, const WorkGrid& grid, std::size_t i,
                                std::size_t j) noexcept
{
  return order == StreamOrder::column_major ? i + grid.n0 * j : i * grid.n1 + j;
}

inline std::size_t stream_index(KernelKind kind, const WorkGrid& grid, std::size_t i,
                                std::size_t j) noexcept
{
  return stream_index(stream_order(kind), grid, i, j);
}

inline void require_streams(const StreamSet& set, const WorkGrid& grid)
{
  grid.validate();
  if (set.count() < grid.size())
    throw Error(Errc::insufficient_streams,
                std::to_string(grid.size()) + " work items but only " +
                    std::to_string(set.count()) + " streams");
}

// ---------------------------------------------------------------------------
// Output buffer

/// Row-major nrow x npad storage of which the first ncol columns are logical.
template <class T>
struct MatrixBuffer {
  std::size_t nrow = 0;
  std::size_t ncol = 0;
  std::size_t npad = 0;
  std::vector<T> data;

  MatrixBuffer() = default;
  MatrixBuffer(std::size_t rows, std::size_t cols, std::size_t pad = 0)
      : nrow(rows), ncol(cols), npad(pad == 0 ? cols : pad)
  {
    if (npad < ncol)
      throw Error(Errc::invalid_shapes, "npad must be at least ncol");
    data.assign(nrow * npad, T{});
  }

  T& operator()(std::size_t r, std::size_t c) { return data[r * npad + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * npad + c]; }

  std::size_t size() const noexcept { return nrow * ncol; }

  /// Logical cells in row-major order, padding excluded.
  std::vector<T> logical() const
  {
    std::vector<T> out;
    out.reserve(size());
    for (std::size_t r = 0; r < nrow; ++r)
      for (std::size_t c = 0; c < ncol; ++c)
        out.push_back((*this)(r, c));
    return out;
  }

  /// Equality over logical cells only.
  friend bool operator==(const MatrixBuffer& a, const MatrixBuffer& b)
  {
    return a.nrow == b.nrow && a.ncol == b.ncol && a.logical() == b.logical();
  }
};

struct Cell {
  std::size_t row;
  std::size_t col;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Cells owned by work item (i, j), in visiting order.
inline std::vector<Cell> owned_cells(const WorkGrid& grid, std::size_t i, std::size_t j,
                                     std::size_t nrow, std::size_t ncol)
{
  std::vector<Cell> cells;
  for (std::size_t r = i; r < nrow; r += grid.n0)
    for (std::size_t c = j; c < ncol; c += grid.n1)
      cells.push_back({r, c});
  return cells;
}

inline std::size_t owned_count(const WorkGrid& grid, std::size_t i, std::size_t j,
                               std::size_t nrow, std::size_t ncol) noexcept
{
  const auto strided = [](std::size_t start, std::size_t n, std::size_t step) {
    return start < n ? (n - start + step - 1) / step : std::size_t{0};
  };
  return strided(i, nrow, grid.n0) * strided(j, ncol, grid.n1);
}

/// Plan for every work item, indexed by stream ordinal under `order`.
inline std::vector<std::vector<Cell>> element_plan(const WorkGrid& grid, std::size_t nrow,
                                                   std::size_t ncol,
                                                   StreamOrder order = StreamOrder::column_major)
{
  grid.validate();
  std::vector<std::vector<Cell>> plan(grid.size());
  for (std::size_t i = 0; i < grid.n0; ++i)
    for (std::size_t j = 0; j < grid.n1; ++j)
      plan[stream_index(order, grid, i, j)] = owned_cells(grid, i, j, nrow, ncol);
  return plan;
}

// ---------------------------------------------------------------------------
// Thread pool

inline unsigned default_thread_count()
{
  if (const char* env = std::getenv("STREAMFORGE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0)
      return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct ExecOptions {
  /// 0 selects default_thread_count().
  unsigned threads = 0;

  unsigned resolved() const { return threads == 0 ? default_thread_count() : threads; }
};

/// Runs fn(k) for k in [0, n) over contiguous blocks, one block per thread.
/// The first exception thrown by any task is rethrown after all threads join.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn)
{
  if (n == 0)
    return;
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers == 1) {
    for (std::size_t k = 0; k < n; ++k)
      fn(k);
    return;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = n * w / workers;
      const std::size_t end = n * (w + 1) / workers;
      pool.emplace_back([&, begin, end] {
        try {
          for (std::size_t k = begin; k < end; ++k)
            fn(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure)
            failure = std::current_exception();
        }
      });
    }
  }
  if (failure)
    std::rethrow_exception(failure);
}

/// Runs item_fn(i, j, stream) once per work item with the item's stream
/// copied into private storage; the advanced state is written back afterwards.
template <class ItemFn>
void run_work_items(StreamSet& set, const WorkGrid& grid, StreamOrder order,
                    const ExecOptions& exec, ItemFn&& item_fn)
{
  require_streams(set, grid);
  parallel_for(grid.size(), exec.resolved(), [&](std::size_t k) {
    const std::size_t i = k % grid.n0;
    const std::size_t j = k / grid.n0;
    StreamState& shared = set[stream_index(order, grid, i, j)];
    StreamState local = shared;
    item_fn(i, j, local);
    shared = local;
  });
}

/// Fills an nrow x ncol matrix; each cell receives cell_fn(stream) of the
/// stream owning it.
template <class T, class CellFn>
MatrixBuffer<T> run_grid(StreamSet& set, const WorkGrid& grid, KernelKind kind, std::size_t nrow,
                         std::size_t ncol, std::size_t npad, const ExecOptions& exec,
                         CellFn&& cell_fn)
{
  if (nrow == 0 || ncol == 0)
    throw Error(Errc::invalid_argument, "matrix dimensions must be positive");
  MatrixBuffer<T> out(nrow, ncol, npad);
  run_work_items(set, grid, stream_order(kind), exec,
                 [&](std::size_t i, std::size_t j, StreamState& s) {
                   for (std::size_t r = i; r < nrow; r += grid.n0)
                     for (std::size_t c = j; c < ncol; c += grid.n1)
                       out(r, c) = cell_fn(s);
                 });
  return out;
}

} // namespace streamforge

#endif // STREAMFORGE_EXEC_GRID_HPP
