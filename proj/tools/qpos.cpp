// qpos: command-line front end for the torus positivity toolkit.
//
// Exit codes: 0 completed run (whatever the verdict), 2 configuration error,
// 3 internal invariant violation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qpos/runner.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;

std::string default_out_dir() {
  if (const char* env = std::getenv("QPOS_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "qpos-out";
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw qpos::Error(qpos::Errc::invalid_argument, "cannot write " + path.string());
  out << contents;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial positivity of line-bundle curvature on discretized flat complex tori"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = default_out_dir();
  qpos::runner::Overrides overrides;
  std::uint64_t seed = 0;
  std::size_t corpus = 0;
  int grid = 0;
  double tolerance = 0.0;

  for (const auto& name : qpos::runner::subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON scenario configuration")
        ->required(name != "equivalence-suite");
    sub->add_option("--out-dir", out_dir, "Directory for reports and CSV fields (env QPOS_OUT_DIR)");
    sub->add_option("--seed", seed, "Corpus seed (equivalence-suite)");
    sub->add_option("--corpus", corpus, "Corpus size (equivalence-suite)");
    sub->add_option("--grid", grid, "Samples per real axis, overrides the config")->check(CLI::Range(4, 4096));
    sub->add_option("--tolerance", tolerance, "Relative positivity tolerance eps_pos")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  if (chosen->count("--seed")) overrides.seed = seed;
  if (chosen->count("--corpus")) overrides.corpus = corpus;
  if (chosen->count("--grid")) overrides.grid = grid;
  if (chosen->count("--tolerance")) overrides.tolerance = tolerance;

  try {
    nlohmann::json config = nlohmann::json::object();
    std::string base_dir;
    if (!config_path.empty()) {
      config = qpos::runner::read_config_file(config_path);
      base_dir = std::filesystem::path(config_path).parent_path().string();
    } else if (command == "equivalence-suite") {
      config["corpus"] = nlohmann::json::object();
    }
    const nlohmann::json resolved = qpos::runner::resolve_config(std::move(config), overrides);
    const qpos::runner::Output output = qpos::runner::run(command, resolved, base_dir);

    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    for (const auto& [name, contents] : output.files) write_file(dir / name, contents);
    const auto report_path = dir / qpos::runner::report_file_name(command);
    write_file(report_path, output.report.dump(2) + "\n");

    const auto& result = output.report.at("result");
    std::cout << command << ": report written to " << report_path.string();
    if (result.contains("verdict")) std::cout << " (verdict " << (result.at("verdict").get<bool>() ? "true" : "false") << ")";
    if (result.contains("all_pass")) std::cout << " (failures " << result.at("failures").get<std::size_t>() << ")";
    std::cout << '\n';
    return 0;
  } catch (const qpos::Error& e) {
    std::cerr << "qpos: " << e.what() << '\n';
    return e.code() == qpos::Errc::invariant_violation ? kExitInvariant : kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "qpos: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "qpos: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "qpos: internal error: " << e.what() << '\n';
    return kExitInvariant;
  }
}
