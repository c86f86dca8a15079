#include "herbage/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "herbage/error.hpp"
#include "herbage/summation.hpp"

namespace herbage {

double rmse(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw Error(ErrorCode::ShapeMismatch, "rmse: length mismatch");
  if (y.empty()) throw Error(ErrorCode::InvalidArgument, "rmse: empty input");
  CompensatedSum sum;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - y_hat[i];
    sum.add(d * d);
  }
  return std::sqrt(sum.value() / static_cast<double>(y.size()));
}

double hrae(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw Error(ErrorCode::ShapeMismatch, "hrae: length mismatch");
  if (y.empty()) throw Error(ErrorCode::InvalidArgument, "hrae: empty input");
  CompensatedSum sum;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "hrae: true mass must be > 0");
    sum.add(std::abs(y[i] - y_hat[i]) / y[i]);
  }
  return 100.0 * sum.value() / static_cast<double>(y.size());
}

std::vector<double> species_mass(double total, std::span<const double> pct) {
  std::vector<double> out(pct.size());
  for (std::size_t i = 0; i < pct.size(); ++i) out[i] = total * pct[i] / 100.0;
  return out;
}

namespace {

// Plain left-to-right sum: the Avg. column is the textbook mean of a few cells.
double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

EvalReport evaluate(const LabelTable& pred, const LabelTable& truth) {
  if (pred.species != truth.species) {
    throw Error(ErrorCode::IdMismatch, "prediction and truth tables list different species");
  }
  std::vector<std::string> ids;
  for (const auto& r : truth.rows) ids.push_back(r.image_id);
  std::sort(ids.begin(), ids.end());

  std::vector<std::string> missing, extra;
  for (const auto& id : ids) {
    if (!pred.find(id)) missing.push_back(id);
  }
  for (const auto& r : pred.rows) {
    if (!truth.find(r.image_id)) extra.push_back(r.image_id);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "image ids differ between prediction and truth;";
    if (!missing.empty()) {
      msg += " missing predictions:";
      for (const auto& id : missing) msg += " " + id;
      msg += ";";
    }
    if (!extra.empty()) {
      msg += " unknown ids:";
      for (const auto& id : extra) msg += " " + id;
    }
    throw Error(ErrorCode::IdMismatch, msg);
  }
  if (ids.empty()) throw Error(ErrorCode::InvalidArgument, "evaluate: no rows");

  const std::size_t s = truth.species.size();
  std::vector<double> mass_t, mass_p, hrae_t, hrae_p;
  std::vector<std::vector<double>> pct_t(s), pct_p(s), smass_t(s), smass_p(s);
  std::size_t zero_mass = 0;
  for (const auto& id : ids) {
    const LabelRow& t = *truth.find(id);
    const LabelRow& p = *pred.find(id);
    mass_t.push_back(t.total_mass);
    mass_p.push_back(p.total_mass);
    if (t.total_mass > 0.0) {
      hrae_t.push_back(t.total_mass);
      hrae_p.push_back(p.total_mass);
    } else {
      ++zero_mass;
    }
    const auto mt = species_mass(t.total_mass, t.species_pct);
    const auto mp = species_mass(p.total_mass, p.species_pct);
    for (std::size_t k = 0; k < s; ++k) {
      pct_t[k].push_back(t.species_pct[k]);
      pct_p[k].push_back(p.species_pct[k]);
      smass_t[k].push_back(mt[k]);
      smass_p[k].push_back(mp[k]);
    }
  }

  EvalReport r;
  r.species = truth.species;
  r.n = ids.size();
  r.hrmse_total = rmse(mass_t, mass_p);
  for (std::size_t k = 0; k < s; ++k) {
    r.hrmse_per_species.push_back(rmse(smass_t[k], smass_p[k]));
    r.rmse_per_species_pct.push_back(rmse(pct_t[k], pct_p[k]));
  }
  r.hrmse_avg = mean(r.hrmse_per_species);
  r.rmse_avg = mean(r.rmse_per_species_pct);
  r.hrae_n = hrae_t.size();
  if (zero_mass > 0) {
    r.warnings.push_back(std::to_string(zero_mass) + " row(s) with zero true mass excluded from HRAE");
  }
  if (!hrae_t.empty()) {
    r.hrae = hrae(hrae_t, hrae_p);
  } else {
    r.hrae = std::nan("");
    r.warnings.emplace_back("HRAE undefined: no rows with positive true mass");
  }
  return r;
}

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["species"] = r.species;
  j["hrmse_total"] = r.hrmse_total;
  j["hrmse_per_species"] = r.hrmse_per_species;
  j["hrmse_avg"] = r.hrmse_avg;
  j["hrae"] = std::isfinite(r.hrae) ? nlohmann::json(r.hrae) : nlohmann::json(nullptr);
  j["hrae_n"] = r.hrae_n;
  j["rmse_per_species_pct"] = r.rmse_per_species_pct;
  j["rmse_avg"] = r.rmse_avg;
  j["warnings"] = r.warnings;
  if (!r.provenance.empty()) j["provenance"] = r.provenance;
  return j;
}

namespace {

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string format_report(const EvalReport& r) {
  std::vector<std::string> header{"", "Total"};
  for (const auto& s : r.species) header.push_back(capitalize(s));
  header.emplace_back("Avg.");
  header.emplace_back("HRAE (%)");

  std::vector<std::string> mass_row{"HRMSE (kg DM/ha)", cell(r.hrmse_total)};
  for (double v : r.hrmse_per_species) mass_row.push_back(cell(v));
  mass_row.push_back(cell(r.hrmse_avg));
  mass_row.push_back(std::isfinite(r.hrae) ? cell(r.hrae) : "n/a");

  std::vector<std::string> pct_row{"RMSE (%)", "-"};
  for (double v : r.rmse_per_species_pct) pct_row.push_back(cell(v));
  pct_row.push_back(cell(r.rmse_avg));
  pct_row.emplace_back("-");

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto* row : {&header, &mass_row, &pct_row}) {
    for (std::size_t i = 0; i < row->size(); ++i) width[i] = std::max(width[i], (*row)[i].size());
  }
  std::ostringstream out;
  for (const auto* row : {&header, &mass_row, &pct_row}) {
    for (std::size_t i = 0; i < row->size(); ++i) {
      const auto& v = (*row)[i];
      if (i == 0) {
        out << v << std::string(width[i] - v.size(), ' ');
      } else {
        out << "  " << std::string(width[i] - v.size(), ' ') << v;
      }
    }
    out << '\n';
  }
  out << "n = " << r.n << '\n';
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
  return out.str();
}

}  // namespace herbage
