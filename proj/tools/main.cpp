#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "geokrig/commands.hpp"
#include "geokrig/run_config.hpp"

namespace {

std::string config_key_help() {
  std::string out = "configuration keys (file `key = value` lines or --set key=value):\n";
  for (const auto& info : geokrig::cli::RunConfig::schema()) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-34s default=%-28s %s\n", info.key.c_str(),
                  info.default_value.c_str(), info.description.c_str());
    out += buf;
  }
  return out;
}

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  std::string kernel;
  long long seed = -1;
  long long threads = -1;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "configuration file (key = value lines)");
  sub->add_option("--set", args.overrides, "override a config key, e.g. --set mcmc.n_samples=50")
      ->take_all();
  sub->add_option("--seed", args.seed, "root seed (overrides config)");
  sub->add_option("--threads", args.threads, "worker threads; 1 = serial (overrides config)");
  sub->add_option("--out", args.out, "output directory (overrides config)");
  sub->add_option("--kernel", args.kernel, "stat-iso|stat-aniso|nsgp|insgp (overrides config)");
}

geokrig::cli::RunConfig resolve(const CommonArgs& args) {
  geokrig::cli::RunConfig cfg;
  if (!args.config_path.empty()) {
    cfg = geokrig::cli::RunConfig::from_file(args.config_path);
  }
  cfg.apply_overrides(args.overrides);
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  if (args.threads >= 0) cfg.threads = static_cast<unsigned>(args.threads);
  if (!args.out.empty()) cfg.out = args.out;
  if (!args.kernel.empty()) cfg.kernel = args.kernel;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geokrig: Gaussian-process kriging with stationary, non-stationary and "
               "intrinsic non-stationary Matern covariances"};
  app.require_subcommand(1);
  app.footer(config_key_help() + "\n" + geokrig::cli::exit_code_table());

  CommonArgs gen_args, fit_args, eval_args, cmp_args;

  auto* gen = app.add_subcommand("generate", "write synthetic train/test CSVs");
  add_common(gen, gen_args);

  auto* fit = app.add_subcommand("fit-predict", "fit one kernel and write predictions");
  add_common(fit, fit_args);
  std::string train_path, test_path;
  fit->add_option("--train", train_path, "training rates CSV (io.train)");
  fit->add_option("--test", test_path, "test locations CSV (io.test); omit to self-predict");

  auto* eval = app.add_subcommand("evaluate", "score predictions against truth");
  add_common(eval, eval_args);
  std::string pred_path, truth_path;
  eval->add_option("--pred", pred_path, "predictions CSV (io.predictions)");
  eval->add_option("--truth", truth_path, "truth rates CSV (io.truth)");

  auto* cmp = app.add_subcommand("compare", "repeated-runs comparison across kernels");
  add_common(cmp, cmp_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return geokrig::cli::cmd_generate(resolve(gen_args));
    if (fit->parsed()) {
      auto cfg = resolve(fit_args);
      if (!train_path.empty()) cfg.io_train = train_path;
      if (!test_path.empty()) cfg.io_test = test_path;
      return geokrig::cli::cmd_fit_predict(cfg);
    }
    if (eval->parsed()) {
      auto cfg = resolve(eval_args);
      if (!pred_path.empty()) cfg.io_predictions = pred_path;
      if (!truth_path.empty()) cfg.io_truth = truth_path;
      return geokrig::cli::cmd_evaluate(cfg);
    }
    if (cmp->parsed()) return geokrig::cli::cmd_compare(resolve(cmp_args));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return geokrig::cli::exit_code_for(e);
  }
  return 2;
}
