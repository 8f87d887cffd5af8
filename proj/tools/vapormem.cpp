#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vapormem/cli.hpp"

int main(int argc, char** argv) {
  using namespace vapormem;

  CLI::App app{"Multiplexed warm-vapor optical memory simulator"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--seed", seed, "seed for stochastic commands");
  app.add_option("--out", out_dir, "directory for output files");

  std::string seq_path;
  auto* validate = app.add_subcommand("validate", "check a sequence file against instrument limits");
  validate->add_option("sequence", seq_path, "sequence file")->required();

  cli::RunOptions run_opt;
  auto* run = app.add_subcommand("run", "simulate a sequence and write its trace");
  run->add_option("sequence", seq_path, "sequence file")->required();
  run->add_option("--trace-out", run_opt.trace_out, "trace CSV path (default <out>/trace.csv)");
  run->add_option("--waveform-out", run_opt.waveform_out, "sampled detector waveform CSV path");
  run->add_option("--sample-period-ns", run_opt.sample_period_ns, "waveform sample period")->capture_default_str();
  run->add_option("--noise-floor", run_opt.noise_floor, "constant added to every waveform sample")
      ->capture_default_str();

  std::string scan_kind;
  cli::ScanOptions scan_opt;
  auto* scan = app.add_subcommand("scan", "cross-talk or lifetime scan to CSV");
  scan->add_option("kind", scan_kind, "crosstalk | lifetime")->required();
  scan->add_option("--min", scan_opt.min, "first grid value (MHz or us)");
  scan->add_option("--max", scan_opt.max, "last grid value (MHz or us)");
  scan->add_option("--step", scan_opt.step, "grid step (MHz or us)");
  scan->add_option("--rail", scan_opt.rail, "rail for lifetime scans, MHz");

  std::string csv_path;
  std::optional<std::string> column;
  auto* fit = app.add_subcommand("fit", "fit y = A0 exp(-t/tau) to a two-column CSV");
  fit->add_option("csv", csv_path, "CSV with t (us) in the first column")->required();
  fit->add_option("--column", column, "name of the y column (default: second column)");

  auto* report = app.add_subcommand("report", "lifetime and efficiency table with pass/fail");

  std::size_t n_atoms = 100000;
  auto* oracle = app.add_subcommand("oracle", "Monte Carlo check of the overlap model");
  oracle->add_option("--atoms", n_atoms, "number of walkers")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  Config cfg;
  try {
    cfg = cli::load_config(config_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (seed) cfg.seed = *seed;
  if (out_dir) cfg.out_dir = *out_dir;

  if (*validate) return cli::cmd_validate(seq_path, cfg, std::cout, std::cerr);
  if (*run) return cli::cmd_run(seq_path, cfg, run_opt, std::cout, std::cerr);
  if (*scan) return cli::cmd_scan(scan_kind, cfg, scan_opt, std::cout, std::cerr);
  if (*fit) return cli::cmd_fit(csv_path, column, std::cout, std::cerr);
  if (*report) return cli::cmd_report(cfg, std::cout, std::cerr);
  if (*oracle) return cli::cmd_oracle(cfg, n_atoms, std::cout, std::cerr);
  return 2;
}
