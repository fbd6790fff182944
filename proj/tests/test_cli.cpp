#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>
#include <fstream>
#include <set>
#include <sstream>

#include "charpq/field.hpp"
#include "charpq/scenario.hpp"
#include "doctest.h"

using namespace charpq;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Error::Kind parse_error_kind(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return Error::Kind::InvariantViolation;
}

const char* kLift = R"({"schema_version": 1, "command": "lift", "p": 3, "M": 9, "seed": 42,
                        "perturbation": {"space": "hbar_jprime"}})";

}  // namespace

TEST_CASE("scenario validation") {
  CHECK(parse_error_kind("{not json") == Error::Kind::Parse);
  CHECK(parse_error_kind("[]") == Error::Kind::Parse);
  CHECK(parse_error_kind(R"({"command": "lift"})") == Error::Kind::Parse);
  CHECK(parse_error_kind(R"({"schema_version": 2, "command": "lift"})") == Error::Kind::Parse);
  CHECK(parse_error_kind(R"({"schema_version": 1, "command": "fly"})") == Error::Kind::Parse);
  CHECK(parse_error_kind(R"({"schema_version": 1, "command": "lift", "seed": -1})") == Error::Kind::Parse);
  CHECK(parse_error_kind(R"({"schema_version": 1, "command": "lift", "p": "3"})") == Error::Kind::Parse);
  CHECK(parse_error_kind(R"({"schema_version": 1, "command": "lift", "ideal": 4})") == Error::Kind::Parse);

  auto s = parse_scenario(R"({"schema_version": 1, "command": "check", "p": 5, "M": 9})");
  CHECK(s.doc["M"] == 9);
  CHECK(s.doc["N"] == 5);
  CHECK(s.doc["n"] == 1);
  CHECK(s.doc["algebra"]["kind"] == "weyl");
  CHECK(parse_scenario(R"({"schema_version": 1, "command": "check", "p": 5})").doc["M"] == 20);
  // the perturbation block may carry the seed
  CHECK(parse_scenario(R"({"schema_version": 1, "command": "lift", "perturbation": {"seed": 8}})").seed == 8);
}

TEST_CASE("bad scenario data exits with 2, failed preconditions with 1") {
  auto label = run_scenario(parse_scenario(R"({"schema_version": 1, "command": "lift", "M": 8, "pairs": [["x", "q"]]})"));
  CHECK(label.exit_code == 2);
  CHECK(label.report["error"]["kind"] == "Parse");

  auto kind = run_scenario(parse_scenario(R"({"schema_version": 1, "command": "check", "algebra": {"kind": "octonion"}})"));
  CHECK(kind.exit_code == 2);
  CHECK(run_scenario(parse_scenario(R"({"schema_version": 1, "command": "check", "p": 4})")).exit_code == 2);

  // [2x, y] = 2 hbar is not hbar modulo hbar J'
  auto pre = run_scenario(parse_scenario(R"({"schema_version": 1, "command": "lift", "M": 8, "pairs": [[{"x": 2}, "y"]]})"));
  CHECK(pre.exit_code == 1);
  CHECK(pre.report["error"]["kind"] == "PreconditionDefectNotInIdeal");
  CHECK_FALSE(pre.report["summary"]["pass"].get<bool>());

  auto kw = run_scenario(parse_scenario(R"({"schema_version": 1, "command": "kw", "module": {"kind": "matrices",
      "x": [[[0,0],[1,0]]], "y": [[[0,1],[0,0]]], "hbar": [[1,0],[0,1]]}})"));
  CHECK(kw.exit_code == 1);
  CHECK(kw.report["error"]["kind"] == "RepresentationInvalid");
}

TEST_CASE("lift report: determinism, certificates, verify") {
  auto s = parse_scenario(kLift);
  auto first = run_scenario(s);
  auto second = run_scenario(s);
  REQUIRE(first.exit_code == 0);
  CHECK(first.report.contains("timings"));
  CHECK(certificate_section(first.report) == certificate_section(second.report));
  CHECK(certificate_section(first.report).find("timings") == std::string::npos);

  std::set<std::string> ids;
  for (const auto& c : first.report["certificates"]) {
    CHECK(c["pass"].get<bool>());
    ids.insert(c["id"].get<std::string>());
  }
  CHECK(ids == std::set<std::string>{"[z1, w1] = hbar", "z1^p central", "w1^p central", "z1 residue mod J'",
                                     "w1 residue mod J'"});
  CHECK(first.report["result"]["initial"] != first.report["result"]["pairs"]);

  auto v = verify_report(first.report);
  CHECK(v.pass);
  CHECK(v.checked == 5);
  CHECK(v.failures.empty());

  // round trip through text, as the CLI does
  CHECK(verify_report(Json::parse(first.report.dump())).pass);
}

TEST_CASE("verify locates a mutated coefficient") {
  auto report = run_scenario(parse_scenario(kLift)).report;
  auto& a = report["certificates"][0]["a"];
  std::size_t i = 0;
  while (a[i] == 0) ++i;
  a[i] = (a[i].get<int>() + 1) % 3;
  auto v = verify_report(report);
  CHECK_FALSE(v.pass);
  REQUIRE_FALSE(v.failures.empty());
  CHECK(v.failures[0].rfind("certificates[0] ([z1, w1] = hbar): ", 0) == 0);

  // a mutated structure constant breaks the algebra itself
  auto broken = run_scenario(parse_scenario(kLift)).report;
  broken["artifacts"]["algebras"]["A"]["mult"][5][3] = 2;
  auto w = [&] {
    try {
      return verify_report(broken);
    } catch (const Error& e) {
      CHECK(e.kind() == Error::Kind::Parse);
      return VerifyOutcome{};
    }
  }();
  CHECK_FALSE(w.pass);

  auto missing = run_scenario(parse_scenario(kLift)).report;
  missing.erase("artifacts");
  CHECK_THROWS_AS(verify_report(missing), Error);
  CHECK_THROWS_AS(verify_report(Json::array()), Error);
}

TEST_CASE("seed override changes the perturbation, not the format") {
  auto base = run_scenario(parse_scenario(kLift));
  auto other = run_scenario(parse_scenario(kLift, 43));
  CHECK(other.report["scenario"]["seed"] == 43);
  CHECK(other.exit_code == 0);
  CHECK(other.report["result"]["initial"] != base.report["result"]["initial"]);
  CHECK(certificate_section(run_scenario(parse_scenario(kLift, 43)).report) == certificate_section(other.report));
}

TEST_CASE("every shipped scenario verifies and reruns identically") {
  std::size_t seen = 0;
  for (const auto& entry : fs::directory_iterator(CHARPQ_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    auto doc = Json::parse(slurp(entry.path()));
    doc["base_dir"] = entry.path().parent_path().string();
    auto s = parse_scenario(doc.dump());
    auto run = run_scenario(s);
    CHECK(run.exit_code == 0);
    auto v = verify_report(run.report);
    CHECK(v.pass);
    for (const auto& f : v.failures) MESSAGE(f);
    CHECK(certificate_section(run_scenario(s).report) == certificate_section(run.report));
    ++seen;
  }
  CHECK(seen >= 15);
}

TEST_CASE("charpq executable: exit codes and CHARPQ_SEED") {
  const fs::path out = fs::temp_directory_path() / "charpq_cli_test";
  fs::remove_all(out);
  fs::create_directories(out);
  const std::string exe = CHARPQ_EXE;
  auto sh = [](const std::string& cmd) {
    int status = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  {
    std::ofstream(out / "lift.json") << kLift;
    std::ofstream(out / "bad.json") << R"({"schema_version": 1, "command": "lift", "M": "eight"})";
  }
  CHECK(sh(exe + " run " + (out / "lift.json").string() + " --out " + (out / "a").string()) == 0);
  CHECK(sh("CHARPQ_SEED=42 " + exe + " run " + (out / "lift.json").string() + " --out " + (out / "b").string()) == 0);
  CHECK(sh("CHARPQ_SEED=7 " + exe + " run " + (out / "lift.json").string() + " --out " + (out / "c").string()) == 0);
  auto section = [&](const char* dir) {
    return certificate_section(Json::parse(slurp(out / dir / "lift.report.json")));
  };
  CHECK(section("a") == section("b"));
  CHECK(section("a") != section("c"));
  CHECK(Json::parse(slurp(out / "c" / "lift.report.json"))["scenario"]["seed"] == 7);

  CHECK(sh(exe + " verify " + (out / "a" / "lift.report.json").string()) == 0);
  CHECK(sh(exe + " run " + (out / "bad.json").string() + " --out " + (out / "d").string()) == 2);
  CHECK(sh(exe + " run -j 2 " + (out / "lift.json").string() + " " + (out / "bad.json").string() + " --out " +
           (out / "e").string()) == 2);
  {
    std::ofstream(out / "torn.json") << slurp(out / "a" / "lift.report.json").substr(0, 200);
  }
  CHECK(sh(exe + " verify " + (out / "torn.json").string()) == 2);
  CHECK(sh(exe + " selftest --p 3") == 0);
}
