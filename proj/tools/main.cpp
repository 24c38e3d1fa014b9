#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "obrul/config.hpp"
#include "obrul/errors.hpp"
#include "obrul/io.hpp"
#include "obrul/pipeline.hpp"

namespace {

std::string stage_list() {
  std::string out = "all";
  for (const auto& name : obrul::cli::stage_names()) {
    out += ", " + name;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"obrul: octave-band vibration features, sparse autoencoder, and"
               " feedforward RUL estimation with built-in explanations"};

  std::string config_path;
  std::string stage = "all";
  std::string out_dir;
  std::string seed;
  std::string ae_pool;
  std::string init_config;

  app.add_option("--config", config_path, "pipeline configuration file");
  app.add_option("--stage", stage, "stage to run (" + stage_list() + ")");
  app.add_option("--out", out_dir, "output directory (overrides [run] out_dir)");
  app.add_option("--seed", seed, "global seed (overrides [run] seed)");
  app.add_option("--ae-pool", ae_pool,
                 "autoencoder training pool: train or train+test (overrides [ae] pool)");
  app.add_option("--init-config", init_config,
                 "write a default configuration template to this path and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!init_config.empty()) {
      obrul::io::write_text_file(init_config, obrul::cli::default_config_text());
      std::printf("wrote %s\n", init_config.c_str());
      return 0;
    }
    if (config_path.empty()) {
      std::fprintf(stderr, "error: --config is required (or use --init-config)\n");
      return 2;
    }
    const obrul::cli::ConfigFile file = obrul::cli::parse_config_file(config_path);
    obrul::cli::ConfigOverrides overrides;
    overrides.out_dir = out_dir;
    overrides.seed = seed;
    overrides.ae_pool = ae_pool;
    const obrul::cli::PipelineConfig cfg = obrul::cli::validate_config(file, overrides);
    obrul::cli::run_stage(cfg, stage);
    return 0;
  } catch (const obrul::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const obrul::DependencyError& e) {
    std::fprintf(stderr, "dependency error: %s\n", e.what());
    return 3;
  } catch (const obrul::DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
