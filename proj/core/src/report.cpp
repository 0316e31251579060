#include "bfstab/report.hpp"

#include <charconv>
#include <cmath>

namespace bfstab {
namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

nlohmann::ordered_json number_json(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

nlohmann::ordered_json to_json(const DeficitReport& r) {
  nlohmann::ordered_json j;
  j["case_id"] = r.case_id;
  j["theorem"] = r.theorem;
  j["deficit"] = number_json(r.deficit);
  j["lower_bound"] = number_json(r.lower_bound);
  j["margin"] = number_json(r.margin);
  j["error_estimate"] = number_json(r.error_estimate);
  j["status"] = std::string(to_string(r.status));
  j["method"] = r.method;
  if (!r.diagnostics.empty()) {
    nlohmann::ordered_json d;
    for (const auto& [k, v] : r.diagnostics) d[k] = number_json(v);
    j["diagnostics"] = d;
  }
  return j;
}

std::string csv_header() { return "case_id,theorem,deficit,lower_bound,margin,error_estimate,status,method"; }

std::string to_csv_row(const DeficitReport& r) {
  return csv_field(r.case_id) + "," + csv_field(r.theorem) + "," + format_number(r.deficit) + "," +
         format_number(r.lower_bound) + "," + format_number(r.margin) + "," + format_number(r.error_estimate) + "," +
         std::string(to_string(r.status)) + "," + csv_field(r.method);
}

std::string to_csv(std::span<const DeficitReport> reports) {
  std::string out = csv_header() + "\n";
  for (const auto& r : reports) out += to_csv_row(r) + "\n";
  return out;
}

Status combine(std::span<const DeficitReport> reports) {
  bool inconclusive = false;
  for (const auto& r : reports) {
    if (r.status == Status::fail) return Status::fail;
    if (r.status == Status::inconclusive) inconclusive = true;
  }
  return inconclusive ? Status::inconclusive : Status::pass;
}

}  // namespace bfstab
