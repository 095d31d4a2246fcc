#pragma once

#include <stdexcept>
#include <string>

namespace mcvar {

/// Failure categories surfaced by the library. Each maps to exactly one
/// documented error condition of the public API.
enum class Errc {
    insufficient_data,
    invalid_price,
    no_common_dates,
    duplicate_asset,
    empty_scenarios,
    invalid_spec,
    dim_mismatch,
    degenerate_points,
    not_factorizable,
    invalid_distribution,
    structurally_infeasible,
    invalid_shape_matrix,
    invalid_radius,
    too_large,
    corrupt_solution,
    empty_series,
    invalid_level,
    degenerate_market,
    out_of_range,
    window_failure,
    io_error,
    parse_error,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

} // namespace mcvar
