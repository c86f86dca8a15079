#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "herbage/labels.hpp"

namespace herbage {

/// sqrt(mean((y - y_hat)^2)); equal non-zero lengths.
double rmse(std::span<const double> y, std::span<const double> y_hat);

/// 100 * mean(|y - y_hat| / y). Not symmetric: the truth is the
/// denominator. Throws when any y <= 0.
double hrae(std::span<const double> y, std::span<const double> y_hat);

/// total * pct / 100 for each species.
std::vector<double> species_mass(double total, std::span<const double> pct);

struct EvalReport {
  std::vector<std::string> species;
  double hrmse_total = 0.0;                  // kg DM/ha
  std::vector<double> hrmse_per_species;     // kg DM/ha
  double hrmse_avg = 0.0;
  double hrae = 0.0;                         // %
  std::vector<double> rmse_per_species_pct;  // percentage points
  double rmse_avg = 0.0;
  std::size_t n = 0;
  std::size_t hrae_n = 0;
  std::vector<std::string> warnings;
  Provenance provenance;
};

/// Rows are matched by image id and visited in sorted-id order, so the
/// report does not depend on row order. Rows with zero true mass are
/// left out of HRAE and reported as a warning.
EvalReport evaluate(const LabelTable& pred, const LabelTable& truth);

nlohmann::json report_to_json(const EvalReport& r);
/// Aligned text table: Total, one column per species, Avg., HRAE.
std::string format_report(const EvalReport& r);

}  // namespace herbage
