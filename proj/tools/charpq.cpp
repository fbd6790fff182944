#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "charpq/field.hpp"
#include "charpq/scenario.hpp"

namespace fs = std::filesystem;
using charpq::Json;

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("CHARPQ_SEED");
  if (!s || !*s) return std::nullopt;
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    std::cerr << "ignoring CHARPQ_SEED=" << s << ": not an integer\n";
    return std::nullopt;
  }
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw charpq::Error(charpq::Error::Kind::Parse, "cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text << '\n';
}

// Runs one scenario file and writes its report; returns the exit code.
int run_one(const fs::path& file, const fs::path& out_dir, std::mutex& io) {
  const std::string stem = file.stem().string();
  charpq::RunOutcome outcome;
  std::string text;
  try {
    text = slurp(file);
    auto doc = Json::parse(text, nullptr, false);
    if (doc.is_object()) {
      doc["base_dir"] = file.parent_path().string();
      text = doc.dump();
    }
    outcome = charpq::run_scenario(charpq::parse_scenario(text, env_seed()));
  } catch (const charpq::Error& e) {
    outcome.exit_code = 2;
    outcome.report = Json{{"schema_version", charpq::kReportSchema},
                          {"error", {{"kind", charpq::kind_name(e.kind())}, {"message", e.what()}}}};
  }
  write(out_dir / (stem + ".report.json"), outcome.report.dump());
  if (outcome.exit_code == 3) {
    Json bundle{{"scenario", outcome.report.value("scenario", Json())},
                {"error", outcome.report.value("error", Json())},
                {"seed_env", std::getenv("CHARPQ_SEED") ? std::getenv("CHARPQ_SEED") : ""}};
    write(out_dir / (stem + ".repro.json"), bundle.dump(2));
  }
  std::lock_guard lock(io);
  const auto& summary = outcome.report.value("summary", Json::object());
  std::cout << (outcome.exit_code == 0 ? "PASS " : "FAIL ") << file.string() << "  exit=" << outcome.exit_code
            << "  certificates=" << summary.value("certificates", 0) << " failed=" << summary.value("failed", 0);
  if (outcome.report.contains("error"))
    std::cout << "  " << outcome.report["error"].value("kind", "") << ": " << outcome.report["error"].value("message", "");
  std::cout << '\n';
  return outcome.exit_code;
}

int cmd_run(const std::vector<std::string>& files, unsigned jobs, const std::string& out) {
  fs::create_directories(out);
  std::atomic<std::size_t> next{0};
  std::atomic<int> worst{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < files.size();) {
      int code = run_one(files[i], out, io);
      int seen = worst.load();
      while (code > seen && !worst.compare_exchange_weak(seen, code)) {
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::max(1u, jobs); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return worst;
}

int cmd_verify(const std::string& file) {
  try {
    auto report = Json::parse(slurp(file), nullptr, false);
    if (report.is_discarded()) throw charpq::Error(charpq::Error::Kind::Parse, "report is not valid JSON");
    auto v = charpq::verify_report(report);
    for (const auto& f : v.failures) std::cout << "FAIL " << f << '\n';
    std::cout << (v.pass ? "PASS " : "FAIL ") << file << "  checked=" << v.checked << '\n';
    return v.pass ? 0 : 1;
  } catch (const charpq::Error& e) {
    std::cout << "CORRUPT " << file << ": " << e.what() << '\n';
    return 2;
  }
}

int cmd_selftest(const std::vector<std::uint32_t>& primes, const std::string& out) {
  auto outcome = charpq::run_selftest(primes, env_seed().value_or(0));
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;
  for (const auto& c : outcome.report["certificates"]) {
    auto& t = tally[c["type"].get<std::string>()];
    ++t.first;
    t.second += c["pass"].get<bool>();
  }
  for (const auto& [type, t] : tally) std::cout << type << ": " << t.second << "/" << t.first << " pass\n";
  for (const auto& c : outcome.report["certificates"])
    if (!c["pass"].get<bool>()) std::cout << "FAIL " << c["id"].get<std::string>() << ": " << c.value("reason", "") << '\n';
  if (!out.empty()) {
    fs::create_directories(out);
    write(fs::path(out) / "selftest.report.json", outcome.report.dump());
  }
  std::cout << (outcome.exit_code == 0 ? "selftest PASS" : "selftest FAIL") << '\n';
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"charpq: certified computations with truncated Weyl algebras over F_p"};
  app.require_subcommand(1);

  std::vector<std::string> files;
  unsigned jobs = 1;
  std::string out = "charpq-out";
  auto* run = app.add_subcommand("run", "run scenario files and write certified reports");
  run->add_option("scenarios", files, "scenario JSON files")->required()->check(CLI::ExistingFile);
  run->add_option("--jobs,-j", jobs, "parallel scenarios");
  run->add_option("--out,-o", out, "report directory");

  std::string report;
  auto* verify = app.add_subcommand("verify", "re-check a report's certificates");
  verify->add_option("report", report, "report JSON")->required();

  std::vector<std::uint32_t> primes{3, 5};
  std::string self_out;
  auto* self = app.add_subcommand("selftest", "built-in oracle checks");
  self->add_option("--p", primes, "primes")->delimiter(',');
  self->add_option("--out,-o", self_out, "write the selftest report here");

  CLI11_PARSE(app, argc, argv);
  if (*run) return cmd_run(files, jobs, out);
  if (*verify) return cmd_verify(report);
  return cmd_selftest(primes, self_out);
}
