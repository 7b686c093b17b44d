#pragma once

// The six candidate point-process models and their parameter sets. The Gibbs
// densities are only ever used up to their intractable normalizing constant,
// which is why no model stores one.

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace spatnet {

struct PoissonProcess {
  double lambda = 1.0;  // points / km^2
};

struct HardcoreProcess {
  double beta = 1.0;  // activity, points / km^2
  double r = 0.1;     // hardcore distance, km
};

struct StraussProcess {
  double beta = 1.0;
  double gamma = 1.0;  // interaction, in [0, 1]
  double r = 0.1;      // interaction radius, km
};

struct GeyerProcess {
  double beta = 1.0;
  double gamma = 1.0;  // interaction > 0; gamma > 1 admissible thanks to sat
  double r = 0.1;
  int sat = 1;  // saturation threshold, >= 0
};

struct MaternProcess {
  double lambda_p = 1.0;  // parent intensity
  double lambda_c = 1.0;  // mean offspring per cluster
  double radius = 0.1;    // offspring disc radius, km
};

struct ThomasProcess {
  double lambda_p = 1.0;
  double lambda_c = 1.0;
  double sigma = 0.1;  // per-axis offspring displacement std, km
};

using ProcessModel = std::variant<PoissonProcess, HardcoreProcess,
                                  StraussProcess, GeyerProcess, MaternProcess,
                                  ThomasProcess>;

inline void validate(const ProcessModel& model) {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PoissonProcess>) {
          if (!(m.lambda > 0.0))
            throw std::invalid_argument("poisson: lambda must be > 0");
        } else if constexpr (std::is_same_v<T, HardcoreProcess>) {
          if (!(m.beta > 0.0) || !(m.r > 0.0))
            throw std::invalid_argument("hardcore: beta and r must be > 0");
        } else if constexpr (std::is_same_v<T, StraussProcess>) {
          if (!(m.beta > 0.0) || !(m.r > 0.0))
            throw std::invalid_argument("strauss: beta and r must be > 0");
          if (m.gamma < 0.0 || m.gamma > 1.0)
            throw std::invalid_argument("strauss: gamma must lie in [0, 1]");
        } else if constexpr (std::is_same_v<T, GeyerProcess>) {
          if (!(m.beta > 0.0) || !(m.r > 0.0))
            throw std::invalid_argument("geyer: beta and r must be > 0");
          if (!(m.gamma > 0.0))
            throw std::invalid_argument("geyer: gamma must be > 0");
          if (m.sat < 0)
            throw std::invalid_argument("geyer: sat must be >= 0");
        } else if constexpr (std::is_same_v<T, MaternProcess>) {
          if (!(m.lambda_p > 0.0) || !(m.lambda_c > 0.0) || !(m.radius > 0.0))
            throw std::invalid_argument("matern: parameters must be > 0");
        } else {
          if (!(m.lambda_p > 0.0) || !(m.lambda_c > 0.0) || !(m.sigma > 0.0))
            throw std::invalid_argument("thomas: parameters must be > 0");
        }
      },
      model);
}

inline bool is_gibbs(const ProcessModel& model) {
  return std::holds_alternative<HardcoreProcess>(model) ||
         std::holds_alternative<StraussProcess>(model) ||
         std::holds_alternative<GeyerProcess>(model);
}

inline bool is_cluster(const ProcessModel& model) {
  return std::holds_alternative<MaternProcess>(model) ||
         std::holds_alternative<ThomasProcess>(model);
}

inline std::string_view model_kind(const ProcessModel& model) {
  struct Visitor {
    std::string_view operator()(const PoissonProcess&) { return "poisson"; }
    std::string_view operator()(const HardcoreProcess&) { return "hardcore"; }
    std::string_view operator()(const StraussProcess&) { return "strauss"; }
    std::string_view operator()(const GeyerProcess&) { return "geyer"; }
    std::string_view operator()(const MaternProcess&) { return "matern"; }
    std::string_view operator()(const ThomasProcess&) { return "thomas"; }
  };
  return std::visit(Visitor{}, model);
}

enum class ModelKind { poisson, hardcore, strauss, geyer, matern, thomas };

inline std::string_view kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::poisson: return "poisson";
    case ModelKind::hardcore: return "hardcore";
    case ModelKind::strauss: return "strauss";
    case ModelKind::geyer: return "geyer";
    case ModelKind::matern: return "matern";
    case ModelKind::thomas: return "thomas";
  }
  throw std::invalid_argument("kind_name: unknown model kind");
}

inline ModelKind parse_kind(std::string_view name) {
  if (name == "poisson") return ModelKind::poisson;
  if (name == "hardcore") return ModelKind::hardcore;
  if (name == "strauss") return ModelKind::strauss;
  if (name == "geyer") return ModelKind::geyer;
  if (name == "matern") return ModelKind::matern;
  if (name == "thomas") return ModelKind::thomas;
  throw std::invalid_argument("parse_kind: unknown model kind '" +
                              std::string(name) + "'");
}

inline ModelKind kind_of(const ProcessModel& model) {
  return parse_kind(model_kind(model));
}

}  // namespace spatnet
