#pragma once

// Serialization: JSON (stable key order) for configs, models and reports,
// CSV for patterns and curves, and the plain-text outage table.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "spatnet/coverage.hpp"
#include "spatnet/fitting.hpp"
#include "spatnet/geometry.hpp"
#include "spatnet/hypothesis.hpp"
#include "spatnet/models.hpp"
#include "spatnet/process_model.hpp"
#include "spatnet/summaries.hpp"

namespace spatnet {

using json = nlohmann::ordered_json;

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace detail {

// Shortest round-trip decimal form, identical across runs.
inline std::string format_number(double v) { return json(v).dump(); }

}  // namespace detail

inline json window_to_json(const Window& w) {
  return json{{"x_min", w.x_min()},
              {"x_max", w.x_max()},
              {"y_min", w.y_min()},
              {"y_max", w.y_max()}};
}

inline Window window_from_json(const json& j) {
  return Window(j.at("x_min").get<double>(), j.at("y_min").get<double>(),
                j.at("x_max").get<double>(), j.at("y_max").get<double>());
}

inline json model_to_json(const ProcessModel& model) {
  json j{{"kind", std::string(model_kind(model))}};
  if (const auto* p = std::get_if<PoissonProcess>(&model)) {
    j["lambda"] = p->lambda;
  } else if (const auto* h = std::get_if<HardcoreProcess>(&model)) {
    j["beta"] = h->beta;
    j["r"] = h->r;
  } else if (const auto* s = std::get_if<StraussProcess>(&model)) {
    j["beta"] = s->beta;
    j["gamma"] = s->gamma;
    j["r"] = s->r;
  } else if (const auto* g = std::get_if<GeyerProcess>(&model)) {
    j["beta"] = g->beta;
    j["gamma"] = g->gamma;
    j["r"] = g->r;
    j["sat"] = g->sat;
  } else if (const auto* m = std::get_if<MaternProcess>(&model)) {
    j["lambda_p"] = m->lambda_p;
    j["lambda_c"] = m->lambda_c;
    j["radius"] = m->radius;
  } else {
    const auto& t = std::get<ThomasProcess>(model);
    j["lambda_p"] = t.lambda_p;
    j["lambda_c"] = t.lambda_c;
    j["sigma"] = t.sigma;
  }
  return j;
}

inline ProcessModel model_from_json(const json& j) {
  const ModelKind kind = parse_kind(j.at("kind").get<std::string>());
  ProcessModel model;
  switch (kind) {
    case ModelKind::poisson:
      model = PoissonProcess{j.at("lambda").get<double>()};
      break;
    case ModelKind::hardcore:
      model = HardcoreProcess{j.at("beta").get<double>(),
                              j.at("r").get<double>()};
      break;
    case ModelKind::strauss:
      model = StraussProcess{j.at("beta").get<double>(),
                             j.at("gamma").get<double>(),
                             j.at("r").get<double>()};
      break;
    case ModelKind::geyer:
      model = GeyerProcess{j.at("beta").get<double>(),
                           j.at("gamma").get<double>(),
                           j.at("r").get<double>(), j.at("sat").get<int>()};
      break;
    case ModelKind::matern:
      model = MaternProcess{j.at("lambda_p").get<double>(),
                            j.at("lambda_c").get<double>(),
                            j.at("radius").get<double>()};
      break;
    case ModelKind::thomas:
      model = ThomasProcess{j.at("lambda_p").get<double>(),
                            j.at("lambda_c").get<double>(),
                            j.at("sigma").get<double>()};
      break;
  }
  validate(model);
  return model;
}

inline json mcmc_to_json(const McmcConfig& cfg) {
  return json{{"n_steps", cfg.n_steps},
              {"burn_in", cfg.burn_in},
              {"p_birth", cfg.p_birth},
              {"p_death", cfg.p_death},
              {"p_shift", cfg.p_shift}};
}

inline McmcConfig mcmc_from_json(const json& j) {
  McmcConfig cfg;
  cfg.n_steps = j.value("n_steps", cfg.n_steps);
  cfg.burn_in = j.value("burn_in", cfg.n_steps);
  cfg.p_birth = j.value("p_birth", cfg.p_birth);
  cfg.p_death = j.value("p_death", cfg.p_death);
  cfg.p_shift = j.value("p_shift", cfg.p_shift);
  cfg.validate();
  return cfg;
}

inline json radio_to_json(const RadioConfig& cfg) {
  return json{
      {"path_loss_exponent", cfg.path_loss_exponent},
      {"shadowing_sigma_db", cfg.shadowing_sigma_db},
      {"macro_power", cfg.macro_power},
      {"micro_power", cfg.micro_power},
      {"fading", cfg.fading == Fading::rayleigh ? "rayleigh" : "none"},
      {"association", cfg.association == Association::max_instantaneous
                          ? "max_instantaneous"
                          : "max_mean"},
      {"distance_floor_km", cfg.distance_floor_km},
      {"thresholds_db", cfg.thresholds_db},
      {"n_users", cfg.n_users}};
}

inline RadioConfig radio_from_json(const json& j) {
  RadioConfig cfg;
  cfg.path_loss_exponent =
      j.value("path_loss_exponent", cfg.path_loss_exponent);
  cfg.shadowing_sigma_db =
      j.value("shadowing_sigma_db", cfg.shadowing_sigma_db);
  cfg.macro_power = j.value("macro_power", cfg.macro_power);
  cfg.micro_power = j.value("micro_power", cfg.micro_power);
  if (j.contains("fading")) {
    const std::string f = j.at("fading").get<std::string>();
    if (f == "rayleigh")
      cfg.fading = Fading::rayleigh;
    else if (f == "none")
      cfg.fading = Fading::none;
    else
      throw std::invalid_argument("radio config: unknown fading '" + f + "'");
  }
  if (j.contains("association")) {
    const std::string a = j.at("association").get<std::string>();
    if (a == "max_instantaneous")
      cfg.association = Association::max_instantaneous;
    else if (a == "max_mean")
      cfg.association = Association::max_mean;
    else
      throw std::invalid_argument("radio config: unknown association '" + a +
                                  "'");
  }
  cfg.distance_floor_km = j.value("distance_floor_km", cfg.distance_floor_km);
  if (j.contains("thresholds_db"))
    cfg.thresholds_db = j.at("thresholds_db").get<std::vector<double>>();
  cfg.n_users = j.value("n_users", cfg.n_users);
  cfg.validate();
  return cfg;
}

inline json fit_to_json(const FitResult& fit) {
  json j{{"model", model_to_json(fit.model)},
         {"objective", fit.objective},
         {"diagnostics",
          json{{"iterations", fit.diagnostics.iterations},
               {"converged", fit.diagnostics.converged},
               {"clamped", fit.diagnostics.clamped}}}};
  if (!fit.profile.empty()) {
    json table = json::array();
    for (const auto& entry : fit.profile)
      table.push_back(json{{"r", entry.r},
                           {"sat", entry.sat},
                           {"objective", std::isfinite(entry.objective)
                                             ? json(entry.objective)
                                             : json(nullptr)},
                           {"feasible", entry.feasible}});
    j["profile"] = std::move(table);
  }
  return j;
}

inline json envelope_to_json(const EnvelopeResult& env) {
  return json{{"reject", env.reject},
              {"significance", env.significance},
              {"deviation", env.deviation},
              {"observed_deviation", env.observed_deviation},
              {"grid", env.observed.grid},
              {"observed", env.observed.values},
              {"expected", env.expected},
              {"low", env.low},
              {"high", env.high}};
}

inline json batch_to_json(const BatchReport& report) {
  json candidates = json::array();
  for (ModelKind kind : report.candidates)
    candidates.push_back(std::string(kind_name(kind)));

  json scores = json::object();
  for (std::size_t j = 0; j < report.candidates.size(); ++j) {
    const ModelScore& s = report.scores[j];
    scores[std::string(kind_name(report.candidates[j]))] =
        json{{"tested", s.tested},
             {"rejected", s.rejected},
             {"skipped", s.skipped},
             {"failed", s.failed},
             {"outage", s.outage()}};
  }

  json rows = json::array();
  for (const auto& row : report.rows) {
    json verdicts = json::object();
    for (std::size_t j = 0; j < report.candidates.size(); ++j) {
      const ModelVerdict& v = row.verdicts[j];
      json cell{{"outcome", std::string(outcome_name(v.outcome))}};
      if (!v.detail.empty()) cell["detail"] = v.detail;
      if (v.fitted) cell["fitted"] = model_to_json(*v.fitted);
      verdicts[std::string(kind_name(report.candidates[j]))] = std::move(cell);
    }
    rows.push_back(json{{"index", row.index},
                        {"region", window_to_json(row.region)},
                        {"n_points", row.n_points},
                        {"usable", row.usable},
                        {"verdicts", std::move(verdicts)}});
  }

  return json{{"label", report.label},
              {"seed", report.seed},
              {"n_sim", report.n_sim},
              {"rank", report.rank},
              {"candidates", std::move(candidates)},
              {"scores", std::move(scores)},
              {"clustering",
               json{{"grid", report.clustering.grid},
                    {"values", report.clustering.values}}},
              {"rows", std::move(rows)}};
}

inline std::string pattern_to_csv(const PointPattern& pattern) {
  const bool marked = pattern.has_marks();
  std::string out = marked ? "x,y,kind\n" : "x,y\n";
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    out += detail::format_number(pattern.points()[i].x);
    out += ',';
    out += detail::format_number(pattern.points()[i].y);
    if (marked) {
      out += ',';
      out += mark_name(pattern.marks()[i]);
    }
    out += '\n';
  }
  return out;
}

inline PointPattern pattern_from_csv(const std::string& text,
                                     const Window& window) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("pattern csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const bool marked = line == "x,y,kind";
  if (!marked && line != "x,y")
    throw std::runtime_error("pattern csv: expected header 'x,y' or 'x,y,kind'");

  std::vector<Point> pts;
  std::vector<Mark> marks;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != (marked ? 3u : 2u))
      throw std::runtime_error("pattern csv: wrong field count on line " +
                               std::to_string(line_no));
    Point p{detail::parse_double(fields[0], line_no, "x"),
            detail::parse_double(fields[1], line_no, "y")};
    pts.push_back(p);
    if (marked) marks.push_back(parse_mark(fields[2]));
  }
  if (marked)
    return PointPattern(window, std::move(pts), std::move(marks));
  return PointPattern(window, std::move(pts));
}

inline std::string curve_to_csv(const SummaryCurve& curve,
                                const std::string& x_name,
                                const std::string& y_name) {
  std::string out = x_name + "," + y_name + "\n";
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    out += detail::format_number(curve.grid[k]);
    out += ',';
    out += detail::format_number(curve.values[k]);
    out += '\n';
  }
  return out;
}

inline std::string envelope_to_csv(const EnvelopeResult& env) {
  std::string out = "r,observed,expected,low,high\n";
  for (std::size_t k = 0; k < env.observed.grid.size(); ++k) {
    out += detail::format_number(env.observed.grid[k]);
    out += ',';
    out += detail::format_number(env.observed.values[k]);
    out += ',';
    out += detail::format_number(env.expected[k]);
    out += ',';
    out += detail::format_number(env.low[k]);
    out += ',';
    out += detail::format_number(env.high[k]);
    out += '\n';
  }
  return out;
}

// One row per (region, candidate); the reject column holds true/false for
// tested regions and the outcome name otherwise.
inline std::string batch_to_csv(const BatchReport& report) {
  std::string out = "region_id,model,reject,n_points\n";
  for (const auto& row : report.rows) {
    for (std::size_t j = 0; j < report.candidates.size(); ++j) {
      out += std::to_string(row.index);
      out += ',';
      out += kind_name(report.candidates[j]);
      out += ',';
      switch (row.verdicts[j].outcome) {
        case RegionOutcome::accepted: out += "false"; break;
        case RegionOutcome::rejected: out += "true"; break;
        case RegionOutcome::skipped: out += "skipped"; break;
        case RegionOutcome::failed: out += "failed"; break;
      }
      out += ',';
      out += std::to_string(row.n_points);
      out += '\n';
    }
  }
  return out;
}

// Aligned text table of outage percentages, one column per candidate model.
inline std::string outage_table(const BatchReport& report) {
  const std::size_t label_width =
      std::max<std::size_t>(8, report.label.size() + 2);
  std::string out(label_width, ' ');
  out.replace(0, 6, "region");
  std::vector<std::size_t> widths;
  for (ModelKind kind : report.candidates) {
    const std::string name(kind_name(kind));
    widths.push_back(std::max<std::size_t>(9, name.size() + 2));
    out += std::string(widths.back() - name.size(), ' ') + name;
  }
  out += '\n';
  out += report.label;
  out += std::string(label_width - report.label.size(), ' ');
  for (std::size_t j = 0; j < report.candidates.size(); ++j) {
    std::string cell;
    if (report.scores[j].tested == 0) {
      cell = "n/a";
    } else {
      char buffer[32];
      std::snprintf(buffer, sizeof buffer, "%.1f%%",
                    100.0 * report.scores[j].outage());
      cell = buffer;
    }
    out += std::string(widths[j] - cell.size(), ' ') + cell;
  }
  out += '\n';
  return out;
}

}  // namespace spatnet
