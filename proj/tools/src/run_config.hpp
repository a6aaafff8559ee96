#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "supou/calib.hpp"
#include "supou/model.hpp"

namespace supou::cli {

struct ZKnotDays {
  int days;
  double z;
};

struct SimulationOptions {
  std::size_t paths = 10000;
  std::uint64_t seed = 0;
  bool antithetic = true;
  std::optional<double> past_years;
  std::size_t variance_paths = 2000;  // paths for the time-0 variance level
  std::size_t acf_steps = 20000;
  double acf_dt = 1.0 / 252.0;
  std::size_t acf_max_lag = 50;
};

// JSON run configuration, "schemaVersion": 1. Unknown keys are rejected at
// every level; all numbers must be finite.
struct RunConfig {
  std::string source;
  MarketContext market{1.0, 0.0};
  std::optional<GammaSupOUParams> params;
  std::vector<ZKnotDays> z_curve;
  PricingOptions pricing;
  CalibConfig calibration;
  SimulationOptions simulation;
  std::optional<nlohmann::json> fit;  // informational block written by calibrate

  [[nodiscard]] const GammaSupOUParams& require_params() const;
  [[nodiscard]] ZCurve curve() const;
};

inline constexpr int kSchemaVersion = 1;

// Throws InputError with the offending JSON path.
[[nodiscard]] RunConfig parse_run_config(const nlohmann::json& doc);
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);

[[nodiscard]] nlohmann::json params_json(const GammaSupOUParams& p);
[[nodiscard]] nlohmann::json market_json(const MarketContext& m);

}  // namespace supou::cli
