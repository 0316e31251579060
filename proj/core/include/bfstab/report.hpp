#pragma once

#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "bfstab/deficits.hpp"

namespace bfstab {

/// Shortest decimal string that round-trips the double ("nan"/"inf" for non-finite).
std::string format_number(double x);

/// {case_id, theorem, deficit, lower_bound, margin, error_estimate, status,
/// method} followed by "diagnostics" when present.
nlohmann::ordered_json to_json(const DeficitReport& r);

std::string csv_header();
std::string to_csv_row(const DeficitReport& r);
/// Header plus one LF-terminated row per report, in the given order.
std::string to_csv(std::span<const DeficitReport> reports);

/// Overall status: fail if any fail, else inconclusive if any, else pass.
Status combine(std::span<const DeficitReport> reports);

}  // namespace bfstab
