// Command-line front end: ingest station lists, simulate models, fit them,
// run envelope tests and coverage curves, and score candidate models over
// batches of regions. Every command writes its artifacts plus a metadata
// JSON capturing the effective configuration.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "spatnet/coverage.hpp"
#include "spatnet/fitting.hpp"
#include "spatnet/geometry.hpp"
#include "spatnet/hypothesis.hpp"
#include "spatnet/io.hpp"
#include "spatnet/models.hpp"
#include "spatnet/process_model.hpp"
#include "spatnet/rng.hpp"
#include "spatnet/summaries.hpp"
#include "spatnet/version.hpp"

namespace fs = std::filesystem;
using spatnet::json;

namespace {

// Accepts TOML (the default) and JSON config files, sniffed by the leading
// character.
class ConfigAuto : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    const std::streampos start = input.tellg();
    char c = '\0';
    while (input.get(c) && std::isspace(static_cast<unsigned char>(c))) {
    }
    input.clear();
    input.seekg(start);
    if (c != '{') return CLI::ConfigTOML::from_config(input);
    std::vector<CLI::ConfigItem> items;
    flatten({}, json::parse(input), items);
    return items;
  }

 private:
  static void flatten(std::vector<std::string> parents, const json& j,
                      std::vector<CLI::ConfigItem>& items) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_object()) {
        auto deeper = parents;
        deeper.push_back(it.key());
        flatten(std::move(deeper), *it, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_array()) {
        for (const auto& v : *it)
          item.inputs.push_back(v.is_string() ? v.get<std::string>()
                                              : v.dump());
      } else {
        item.inputs.push_back(it->is_string() ? it->get<std::string>()
                                              : it->dump());
      }
      items.push_back(std::move(item));
    }
  }
};

struct CommonOpts {
  std::string out = ".";
  std::uint64_t seed = 0;
  std::size_t jobs = 0;
  bool force = false;
};

void write_artifact(const CommonOpts& common, const std::string& name,
                    const std::string& content) {
  fs::create_directories(common.out);
  const fs::path path = fs::path(common.out) / name;
  if (fs::exists(path) && !common.force)
    throw std::runtime_error("refusing to overwrite " + path.string() +
                             " (pass --force)");
  spatnet::write_text_file(path.string(), content);
}

// Execution-only settings (jobs, force) stay out of the metadata so reruns
// with different machine settings stay byte-identical.
void write_metadata(const CommonOpts& common, const std::string& command,
                    json options) {
  json meta{{"command", command},
            {"version", std::string(spatnet::version)},
            {"seed", common.seed},
            {"options", std::move(options)}};
  write_artifact(common, "metadata.json", meta.dump(2) + "\n");
}

spatnet::Window load_window(const std::string& path) {
  return spatnet::window_from_json(json::parse(spatnet::read_text_file(path)));
}

spatnet::PointPattern load_pattern(const std::string& pattern_path,
                                   const std::string& window_path) {
  if (window_path.empty())
    throw std::runtime_error("a pattern file needs --window alongside it");
  return spatnet::pattern_from_csv(spatnet::read_text_file(pattern_path),
                                   load_window(window_path));
}

// Model files are either a bare model object or a fit result with a "model"
// field.
spatnet::ProcessModel load_model(const std::string& path) {
  const json j = json::parse(spatnet::read_text_file(path));
  return spatnet::model_from_json(j.contains("model") ? j.at("model") : j);
}

struct McmcOpts {
  std::uint64_t steps = spatnet::McmcConfig{}.n_steps;
  std::uint64_t burn_in = spatnet::McmcConfig{}.burn_in;
  bool burn_in_set = false;
};

void add_mcmc_options(CLI::App* app, McmcOpts& opts) {
  app->add_option("--mcmc-steps", opts.steps,
                  "Birth-death-shift steps after burn-in");
  app->add_option("--mcmc-burnin", opts.burn_in,
                  "Burn-in steps (default: same as --mcmc-steps)")
      ->trigger_on_parse()
      ->each([&opts](const std::string&) { opts.burn_in_set = true; });
}

spatnet::McmcConfig mcmc_from_opts(const McmcOpts& opts) {
  spatnet::McmcConfig cfg;
  cfg.n_steps = opts.steps;
  cfg.burn_in = opts.burn_in_set ? opts.burn_in : opts.steps;
  return cfg;
}

json mcmc_meta(const spatnet::McmcConfig& cfg) {
  return spatnet::mcmc_to_json(cfg);
}

struct RadioOpts {
  double alpha = 4.0;
  double shadow_db = 3.0;
  double macro_power = 10.0;
  double micro_power = 1.0;
  std::string fading = "rayleigh";
  std::string association = "max_instantaneous";
  double floor_km = 0.001;
  double t_min_db = -10.0;
  double t_max_db = 20.0;
  double t_step_db = 0.5;
  std::size_t n_users = 2000;
};

void add_radio_options(CLI::App* app, RadioOpts& opts) {
  app->add_option("--alpha", opts.alpha, "Path loss exponent");
  app->add_option("--shadow-db", opts.shadow_db,
                  "Lognormal shadowing sigma in dB (0 disables)");
  app->add_option("--macro-power", opts.macro_power,
                  "Relative macro transmit power");
  app->add_option("--micro-power", opts.micro_power,
                  "Relative micro transmit power");
  app->add_option("--fading", opts.fading, "Fading: rayleigh or none")
      ->check(CLI::IsMember({"rayleigh", "none"}));
  app->add_option("--assoc", opts.association,
                  "Association: max_instantaneous or max_mean")
      ->check(CLI::IsMember({"max_instantaneous", "max_mean"}));
  app->add_option("--floor", opts.floor_km, "Path-loss distance floor in km");
  app->add_option("--t-min-db", opts.t_min_db, "Lowest SIR threshold in dB");
  app->add_option("--t-max-db", opts.t_max_db, "Highest SIR threshold in dB");
  app->add_option("--t-step-db", opts.t_step_db, "Threshold spacing in dB");
  app->add_option("--n-users", opts.n_users, "User drops per coverage curve");
}

spatnet::RadioConfig radio_from_opts(const RadioOpts& opts) {
  spatnet::RadioConfig cfg;
  cfg.path_loss_exponent = opts.alpha;
  cfg.shadowing_sigma_db = opts.shadow_db;
  cfg.macro_power = opts.macro_power;
  cfg.micro_power = opts.micro_power;
  cfg.fading = opts.fading == "none" ? spatnet::Fading::none
                                     : spatnet::Fading::rayleigh;
  cfg.association = opts.association == "max_mean"
                        ? spatnet::Association::max_mean
                        : spatnet::Association::max_instantaneous;
  cfg.distance_floor_km = opts.floor_km;
  cfg.thresholds_db.clear();
  if (!(opts.t_step_db > 0.0))
    throw std::runtime_error("--t-step-db must be positive");
  for (double t = opts.t_min_db; t <= opts.t_max_db + 1e-9;
       t += opts.t_step_db)
    cfg.thresholds_db.push_back(t);
  cfg.n_users = opts.n_users;
  cfg.validate();
  if (cfg.interference_diverges())
    std::cerr << "warning: path loss exponent <= 2, interference grows with "
                 "the window\n";
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial point-process toolkit for base-station patterns"};
  app.set_version_flag("--version", std::string(spatnet::version));
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML or JSON config file");
  app.config_formatter(std::make_shared<ConfigAuto>());
  app.allow_config_extras(true);

  CommonOpts common;
  auto add_common = [&common](CLI::App* sub, bool with_jobs = false) {
    sub->add_option("--out", common.out, "Output directory");
    sub->add_option("--seed", common.seed, "Master RNG seed");
    sub->add_flag("--force", common.force, "Overwrite existing artifacts");
    if (with_jobs)
      sub->add_option("--jobs", common.jobs,
                      "Worker threads (0 = all cores)");
  };

  // --- ingest ---------------------------------------------------------
  auto* ingest = app.add_subcommand(
      "ingest", "Project a station list (id,lon,lat,kind CSV) onto a "
                "planar window");
  std::string ingest_input;
  ingest->add_option("input", ingest_input, "Station CSV file")->required();
  add_common(ingest);
  ingest->callback([&] {
    const auto records = spatnet::load_csv(ingest_input);
    const spatnet::PointPattern pattern = spatnet::project(records);
    std::size_t macro = 0;
    for (const auto& r : records)
      if (r.kind == spatnet::Mark::macro) ++macro;
    write_artifact(common, "pattern.csv", spatnet::pattern_to_csv(pattern));
    write_artifact(common, "window.json",
                   spatnet::window_to_json(pattern.window()).dump(2) + "\n");
    write_metadata(common, "ingest", json{{"input", ingest_input}});
    std::cout << "ingested " << pattern.size() << " stations (" << macro
              << " macro, " << records.size() - macro << " micro) into a "
              << pattern.window().width() << " x "
              << pattern.window().height() << " km window\n";
  });

  // --- simulate -------------------------------------------------------
  auto* simulate = app.add_subcommand(
      "simulate", "Draw one pattern from a model over a window");
  std::string sim_model, sim_window;
  double sim_width = 0.0, sim_height = 0.0;
  McmcOpts sim_mcmc;
  simulate->add_option("--model", sim_model, "Model JSON file")->required();
  simulate->add_option("--window", sim_window, "Window JSON file");
  simulate->add_option("--width", sim_width, "Window width in km");
  simulate->add_option("--height", sim_height, "Window height in km");
  add_mcmc_options(simulate, sim_mcmc);
  add_common(simulate);
  simulate->callback([&] {
    spatnet::Window window =
        !sim_window.empty()
            ? load_window(sim_window)
            : spatnet::Window(0.0, 0.0, sim_width, sim_height);
    const spatnet::ProcessModel model = load_model(sim_model);
    const spatnet::McmcConfig mcmc = mcmc_from_opts(sim_mcmc);
    const spatnet::PointPattern pattern =
        spatnet::simulate(model, window, common.seed, mcmc);
    write_artifact(common, "pattern.csv", spatnet::pattern_to_csv(pattern));
    write_artifact(common, "window.json",
                   spatnet::window_to_json(window).dump(2) + "\n");
    json options{{"model", spatnet::model_to_json(model)},
                 {"window", spatnet::window_to_json(window)}};
    if (spatnet::is_gibbs(model)) options["mcmc"] = mcmc_meta(mcmc);
    write_metadata(common, "simulate", std::move(options));
    std::cout << "simulated " << pattern.size() << " points ("
              << spatnet::model_kind(model) << ")\n";
  });

  // --- fit ------------------------------------------------------------
  auto* fit = app.add_subcommand(
      "fit", "Estimate one model family's parameters from a pattern");
  std::string fit_pattern, fit_window, fit_family;
  fit->add_option("--pattern", fit_pattern, "Pattern CSV file")->required();
  fit->add_option("--window", fit_window, "Window JSON file")->required();
  fit->add_option("--family", fit_family, "Model family")
      ->required()
      ->check(CLI::IsMember({"poisson", "hardcore", "strauss", "geyer",
                             "matern", "thomas"}));
  add_common(fit);
  fit->callback([&] {
    const spatnet::PointPattern pattern =
        load_pattern(fit_pattern, fit_window);
    const spatnet::FitResult result =
        spatnet::fit_model(pattern, spatnet::parse_kind(fit_family));
    write_artifact(common, "fit.json",
                   spatnet::fit_to_json(result).dump(2) + "\n");
    write_metadata(common, "fit",
                   json{{"pattern", fit_pattern},
                        {"window", fit_window},
                        {"family", fit_family}});
    std::cout << "fitted " << fit_family << ": "
              << spatnet::model_to_json(result.model).dump()
              << " objective " << result.objective << "\n";
  });

  // --- envelope -------------------------------------------------------
  auto* envelope = app.add_subcommand(
      "envelope",
      "Simultaneous Monte Carlo envelope test of a model against a pattern");
  std::string env_pattern, env_window, env_model, env_metric = "l";
  int env_nsim = 199, env_rank = 10;
  McmcOpts env_mcmc;
  RadioOpts env_radio;
  envelope->add_option("--pattern", env_pattern, "Pattern CSV file")
      ->required();
  envelope->add_option("--window", env_window, "Window JSON file")->required();
  envelope->add_option("--model", env_model,
                       "Model JSON (bare or a fit.json)")
      ->required();
  envelope->add_option("--metric", env_metric, "Summary: l or coverage")
      ->check(CLI::IsMember({"l", "coverage"}));
  envelope->add_option("--n-sim", env_nsim, "Simulated patterns");
  envelope->add_option("--rank", env_rank, "Envelope deviation rank");
  add_mcmc_options(envelope, env_mcmc);
  add_radio_options(envelope, env_radio);
  add_common(envelope);
  envelope->callback([&] {
    const spatnet::PointPattern pattern =
        load_pattern(env_pattern, env_window);
    const spatnet::ProcessModel model = load_model(env_model);
    spatnet::EnvelopeConfig cfg;
    cfg.metric = env_metric == "coverage" ? spatnet::EnvelopeMetric::coverage
                                          : spatnet::EnvelopeMetric::l;
    cfg.n_sim = env_nsim;
    cfg.rank = env_rank;
    cfg.seed = common.seed;
    cfg.mcmc = mcmc_from_opts(env_mcmc);
    cfg.radio = radio_from_opts(env_radio);
    const spatnet::EnvelopeResult result =
        spatnet::envelope_test(pattern, model, cfg);
    write_artifact(common, "envelope.json",
                   spatnet::envelope_to_json(result).dump(2) + "\n");
    write_artifact(common, "envelope.csv", spatnet::envelope_to_csv(result));
    json options{{"pattern", env_pattern},
                 {"window", env_window},
                 {"model", spatnet::model_to_json(model)},
                 {"metric", env_metric},
                 {"n_sim", env_nsim},
                 {"rank", env_rank}};
    if (spatnet::is_gibbs(model)) options["mcmc"] = mcmc_meta(cfg.mcmc);
    if (cfg.metric == spatnet::EnvelopeMetric::coverage)
      options["radio"] = spatnet::radio_to_json(cfg.radio);
    write_metadata(common, "envelope", std::move(options));
    std::cout << (result.reject ? "reject" : "accept") << " at significance "
              << result.significance << " (observed deviation "
              << result.observed_deviation << ", envelope "
              << result.deviation << ")\n";
  });

  // --- coverage -------------------------------------------------------
  auto* coverage = app.add_subcommand(
      "coverage", "Empirical SIR coverage curve over user drops");
  std::string cov_pattern, cov_window;
  RadioOpts cov_radio;
  coverage->add_option("--pattern", cov_pattern, "Pattern CSV file")
      ->required();
  coverage->add_option("--window", cov_window, "Window JSON file")->required();
  add_radio_options(coverage, cov_radio);
  add_common(coverage);
  coverage->callback([&] {
    const spatnet::PointPattern pattern =
        load_pattern(cov_pattern, cov_window);
    const spatnet::RadioConfig cfg = radio_from_opts(cov_radio);
    const spatnet::SummaryCurve curve =
        spatnet::coverage_curve(pattern, cfg, common.seed);
    write_artifact(common, "coverage.csv",
                   spatnet::curve_to_csv(curve, "threshold_db", "coverage"));
    write_metadata(common, "coverage",
                   json{{"pattern", cov_pattern},
                        {"window", cov_window},
                        {"radio", spatnet::radio_to_json(cfg)}});
    std::cout << "coverage over " << cfg.n_users << " user drops written ("
              << curve.grid.size() << " thresholds)\n";
  });

  // --- batch ----------------------------------------------------------
  auto* batch = app.add_subcommand(
      "batch",
      "Fit and envelope-test candidate models over many sampled regions");
  std::string batch_pattern, batch_window, batch_generator;
  std::string batch_candidates = "poisson,hardcore,strauss,geyer,matern,thomas";
  std::string batch_label = "all";
  double region_width = 0.0, region_height = 0.0;
  std::size_t region_count = 0;
  int batch_nsim = 199, batch_rank = 10;
  std::size_t batch_grid = 512;
  McmcOpts batch_mcmc;
  batch->add_option("--pattern", batch_pattern,
                    "Parent pattern CSV (regions are clipped from it)");
  batch->add_option("--window", batch_window, "Parent window JSON");
  batch->add_option("--generator", batch_generator,
                    "Model JSON; regions are simulated from it instead");
  batch->add_option("--region-width", region_width, "Region width in km")
      ->required();
  batch->add_option("--region-height", region_height, "Region height in km")
      ->required();
  batch->add_option("--regions", region_count, "Number of regions")
      ->required();
  batch->add_option("--candidates", batch_candidates,
                    "Comma-separated model families");
  batch->add_option("--n-sim", batch_nsim, "Simulated patterns per test");
  batch->add_option("--rank", batch_rank, "Envelope deviation rank");
  batch->add_option("--grid-size", batch_grid, "Distance grid resolution");
  batch->add_option("--label", batch_label, "Row label for the outage table");
  add_mcmc_options(batch, batch_mcmc);
  add_common(batch, /*with_jobs=*/true);
  batch->callback([&] {
    if (batch_generator.empty() == batch_pattern.empty())
      throw std::runtime_error(
          "batch needs exactly one of --pattern or --generator");

    spatnet::BatchConfig cfg;
    cfg.candidates.clear();
    for (const auto& name :
         spatnet::detail::split_fields(batch_candidates))
      cfg.candidates.push_back(spatnet::parse_kind(name));
    cfg.n_sim = batch_nsim;
    cfg.rank = batch_rank;
    cfg.seed = common.seed;
    cfg.jobs = common.jobs;
    cfg.grid_size = batch_grid;
    cfg.mcmc = mcmc_from_opts(batch_mcmc);
    cfg.label = batch_label;

    std::vector<spatnet::Window> regions;
    std::unique_ptr<spatnet::RegionSource> source;
    json source_meta;
    if (!batch_pattern.empty()) {
      auto parent = load_pattern(batch_pattern, batch_window);
      regions = spatnet::sample_regions(
          parent.window(), region_width, region_height, region_count,
          spatnet::derive_seed(common.seed, "batch-regions", 0));
      source_meta = json{{"pattern", batch_pattern}, {"window", batch_window}};
      source = std::make_unique<spatnet::RegionSource>(std::move(parent));
    } else {
      const spatnet::ProcessModel generator = load_model(batch_generator);
      regions.assign(region_count,
                     spatnet::Window(0.0, 0.0, region_width, region_height));
      source_meta = json{{"generator", spatnet::model_to_json(generator)}};
      source = std::make_unique<spatnet::RegionSource>(generator);
    }

    const spatnet::BatchReport report =
        spatnet::run_batch(regions, *source, cfg);
    write_artifact(common, "batch_report.json",
                   spatnet::batch_to_json(report).dump(2) + "\n");
    write_artifact(common, "batch_regions.csv", spatnet::batch_to_csv(report));
    write_artifact(common, "clustering.csv",
                   spatnet::curve_to_csv(report.clustering, "r",
                                         "clustering_probability"));
    const std::string table = spatnet::outage_table(report);
    write_artifact(common, "outage.txt", table);
    json candidates_meta = json::array();
    for (auto kind : cfg.candidates)
      candidates_meta.push_back(std::string(spatnet::kind_name(kind)));
    write_metadata(common, "batch",
                   json{{"source", std::move(source_meta)},
                        {"region_width", region_width},
                        {"region_height", region_height},
                        {"regions", region_count},
                        {"candidates", std::move(candidates_meta)},
                        {"n_sim", batch_nsim},
                        {"rank", batch_rank},
                        {"grid_size", batch_grid},
                        {"label", batch_label},
                        {"mcmc", mcmc_meta(cfg.mcmc)}});
    std::cout << table;
  });

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
