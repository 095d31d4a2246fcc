#include "mcvar/errors.hpp"

namespace mcvar {

const char* to_string(Errc code) noexcept {
    switch (code) {
    case Errc::insufficient_data: return "InsufficientData";
    case Errc::invalid_price: return "InvalidPrice";
    case Errc::no_common_dates: return "NoCommonDates";
    case Errc::duplicate_asset: return "DuplicateAsset";
    case Errc::empty_scenarios: return "EmptyScenarios";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::dim_mismatch: return "DimMismatch";
    case Errc::degenerate_points: return "DegeneratePoints";
    case Errc::not_factorizable: return "NotFactorizable";
    case Errc::invalid_distribution: return "InvalidDistribution";
    case Errc::structurally_infeasible: return "StructurallyInfeasible";
    case Errc::invalid_shape_matrix: return "InvalidShapeMatrix";
    case Errc::invalid_radius: return "InvalidRadius";
    case Errc::too_large: return "TooLarge";
    case Errc::corrupt_solution: return "CorruptSolution";
    case Errc::empty_series: return "EmptySeries";
    case Errc::invalid_level: return "InvalidLevel";
    case Errc::degenerate_market: return "DegenerateMarket";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::window_failure: return "WindowFailure";
    case Errc::io_error: return "IoError";
    case Errc::parse_error: return "ParseError";
    }
    return "UnknownError";
}

} // namespace mcvar
