// beamforge command line: experiment dispatch and run directories.
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "beamforge/config.hpp"
#include "beamforge/convergence.hpp"

namespace fs = std::filesystem;
using namespace beamforge;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string now_utc() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw ValidationError("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<double> dyadic(double hi, double lo) {
  if (!(hi > 0.0) || !(lo > 0.0) || lo > hi) throw ValidationError("--epsilon-max/--epsilon-min: need 0 < min <= max");
  std::vector<double> out;
  for (double e = hi; e >= lo * (1 - 1e-12); e *= 0.5) out.push_back(e);
  return out;
}

int default_threads() {
  if (const char* v = std::getenv("BEAMFORGE_THREADS")) {
    const int n = std::atoi(v);
    if (n > 0) return n;
  }
  return 1;
}

void write_failure(const fs::path& out, const std::string& kind, const std::string& message) {
  nlohmann::json j{{"status", "error"}, {"kind", kind}, {"message", message}, {"time", now_utc()}};
  std::error_code ec;
  fs::create_directories(out, ec);
  std::ofstream(out / "failure.json") << j.dump(2) << "\n";
  std::cerr << "beamforge: " << kind << ": " << message << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian beam solvers and convergence studies"};
  std::string command, config_path, out_dir, orders, norm, times, eta;
  double eps_max = 0, eps_min = 0;
  int threads = 0;
  app.add_option("command", command, "single-beam | cusp | schrodinger | init-data | nonsqueeze")
      ->required()
      ->check(CLI::IsMember({"single-beam", "cusp", "schrodinger", "init-data", "nonsqueeze"}));
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--threads", threads, "worker threads (default: $BEAMFORGE_THREADS or 1)");
  app.add_option("--epsilon-max", eps_max, "largest epsilon of a dyadic sweep");
  app.add_option("--epsilon-min", eps_min, "smallest epsilon of a dyadic sweep");
  app.add_option("--orders,--k", orders, "comma separated beam orders");
  app.add_option("--eta", eta, "cutoff radius (number or inf)");
  app.add_option("--norm", norm, "l2 | energy");
  app.add_option("--t,--times", times, "comma separated sample times");
  app.set_version_flag("--version", kVersion);
  CLI11_PARSE(app, argc, argv);

  const fs::path out(out_dir);
  SweepConfig cfg;
  std::string raw = "{}";
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      std::stringstream ss;
      ss << in.rdbuf();
      raw = ss.str();
    }
    std::optional<Problem> want;
    if (command == "single-beam") want = Problem::single_beam;
    if (command == "cusp" || command == "nonsqueeze") want = Problem::cusp;
    if (command == "init-data") want = Problem::init_data;
    if (command == "schrodinger") want = Problem::schrodinger_free;
    cfg = parse_config(raw, want);
    const bool schrod = cfg.problem == Problem::schrodinger_free || cfg.problem == Problem::schrodinger_potential;
    if ((command == "schrodinger") != schrod || (!schrod && cfg.problem != *want))
      throw ValidationError("config problem '" + to_string(cfg.problem) + "' does not match command " + command);
    if (command == "nonsqueeze" && !config_path.empty() && !nlohmann::json::parse(raw).contains("times"))
      cfg.times = {0.0, 0.5, 1.0};
    if (command == "nonsqueeze" && config_path.empty()) cfg.times = {0.0, 0.5, 1.0};
    if (!orders.empty()) {
      cfg.orders.clear();
      for (double k : parse_list(orders)) cfg.orders.push_back(static_cast<int>(k));
    }
    if (eps_max > 0.0 || eps_min > 0.0)
      cfg.epsilons = dyadic(eps_max > 0.0 ? eps_max : cfg.epsilons.front(), eps_min > 0.0 ? eps_min : cfg.epsilons.back());
    if (!eta.empty()) cfg.eta = eta == "inf" ? kNoCutoff : std::stod(eta);
    if (!norm.empty()) cfg.norm = parse_norm_kind(norm);
    if (!times.empty()) cfg.times = parse_list(times);
    cfg.threads = threads > 0 ? threads : (config_path.empty() || !nlohmann::json::parse(raw).contains("threads")
                                                ? default_threads()
                                                : cfg.threads);
    cfg.validate();
  } catch (const std::exception& e) {
    write_failure(out, "validation", e.what());
    return 2;
  }

  fs::create_directories(out);
  nlohmann::json manifest{{"command", command},
                          {"config_path", config_path},
                          {"output_directory", fs::absolute(out).string()},
                          {"config", nlohmann::json::parse(serialize_config(cfg))},
                          {"version", kVersion},
                          {"started", now_utc()}};
  std::ofstream(out / "config.json") << serialize_config(cfg) << "\n";
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (command == "nonsqueeze") {
      auto model = HamiltonianModel::wave_constant(2, cfg.wave_speed);
      const WkbData data = cusp_data(cfg.k0());
      std::ofstream os(out / "nonsqueeze.txt");
      os << "t min_ratio max_ratio pairs\n";
      for (double t : cfg.times) {
        const SqueezeResult r = nonsqueeze_check(model, data, t, 10000);
        std::cout << r.min_ratio << " " << r.max_ratio << "\n";
        os << t << " " << r.min_ratio << " " << r.max_ratio << " " << r.pairs << "\n";
      }
    } else {
      const ConvergenceReport rep = run_sweep(cfg, &std::cerr, &out);
      write_report(rep, out);
      std::ifstream summary(out / "summary.txt");
      std::cout << summary.rdbuf();
    }
  } catch (const std::exception& e) {
    write_failure(out, "compute", e.what());
    manifest["status"] = "error";
    std::ofstream(out / "manifest.json") << manifest.dump(2) << "\n";
    return 1;
  }
  manifest["status"] = "ok";
  manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest["finished"] = now_utc();
  std::ofstream(out / "manifest.json") << manifest.dump(2) << "\n";
  return 0;
}
