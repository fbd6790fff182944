#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace charpq {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchema = 1;

/// A validated scenario document. `doc` keeps the input with defaults filled
/// in and the effective seed written back, and is echoed into the report.
struct Scenario {
  Json doc;
  std::string name;
  std::string command;
  std::uint64_t seed = 0;
};

/// Throws Error(Parse) on malformed JSON, a missing or unknown schema_version,
/// or fields of the wrong type. `seed_override` replaces the scenario seed.
Scenario parse_scenario(const std::string& text, std::optional<std::uint64_t> seed_override = std::nullopt);

struct RunOutcome {
  Json report;
  /// 0 all certificates pass, 1 some certificate or precondition failed,
  /// 2 scenario data rejected, 3 internal invariant violated.
  int exit_code = 0;
};

/// Executes the scenario's command. Never throws for library errors; they are
/// recorded under "error" and mapped to the exit code.
RunOutcome run_scenario(const Scenario& s);

/// The report without its "timings" member, serialized canonically. Two runs
/// of the same scenario and seed give identical strings.
std::string certificate_section(const Json& report);

struct VerifyOutcome {
  bool pass = false;
  std::size_t checked = 0;
  std::vector<std::string> failures;  // "certificates[i] (id): reason"
};

/// Re-checks every certificate from the embedded algebra data alone. Throws
/// Error(Parse) when the report is structurally corrupt.
VerifyOutcome verify_report(const Json& report);

/// restricted-power identity sweep, random W1-module decompositions and the Mat_p split,
/// as a report with the same certificate format.
RunOutcome run_selftest(const std::vector<std::uint32_t>& primes, std::uint64_t seed);

}  // namespace charpq
