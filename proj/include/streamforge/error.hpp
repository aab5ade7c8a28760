#ifndef STREAMFORGE_ERROR_HPP
#define STREAMFORGE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace streamforge {

enum class Errc {
  invalid_seed,
  invalid_argument,
  corrupt_stream_file,
  insufficient_streams,
  invalid_grid,
  invalid_rate,
  invalid_margins,
  invalid_params,
  invalid_shapes,
  not_positive_definite,
  io_failure,
};

constexpr std::string_view errc_name(Errc code) noexcept
{
  switch (code) {
  case Errc::invalid_seed: return "invalid-seed";
  case Errc::invalid_argument: return "invalid-argument";
  case Errc::corrupt_stream_file: return "corrupt-stream-file";
  case Errc::insufficient_streams: return "insufficient-streams";
  case Errc::invalid_grid: return "invalid-grid";
  case Errc::invalid_rate: return "invalid-rate";
  case Errc::invalid_margins: return "invalid-margins";
  case Errc::invalid_params: return "invalid-params";
  case Errc::invalid_shapes: return "invalid-shapes";
  case Errc::not_positive_definite: return "not-positive-definite";
  case Errc::io_failure: return "io-failure";
  }
  return "unknown";
}

/// Single exception type for the library; `code()` identifies the failure class.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code)
  {
  }

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

/// Raised by the batched factorization; carries the failing batch and pivot.
class NotPositiveDefinite : public Error {
public:
  NotPositiveDefinite(std::size_t batch, std::size_t pivot)
      : Error(Errc::not_positive_definite,
              "batch " + std::to_string(batch) + ", pivot " + std::to_string(pivot)),
        batch_(batch), pivot_(pivot)
  {
  }

  std::size_t batch() const noexcept { return batch_; }
  std::size_t pivot() const noexcept { return pivot_; }

private:
  std::size_t batch_;
  std::size_t pivot_;
};

} // namespace streamforge

#endif // STREAMFORGE_ERROR_HPP
