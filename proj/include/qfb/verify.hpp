#pragma once

// The verification suite: named checks over one (q, nu) that compare computed
// quantities against the structural properties of the q-Bessel zeros and the
// q-Fourier-Bessel system. Each check emits rows with an observed margin and,
// for asymptotic properties, the threshold index from which the property holds.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qfb/expansion.hpp"

namespace qfb {

enum class CheckStatus { pass, fail, reported };

const char* to_string(CheckStatus status);

struct CheckRow {
  std::string check;
  long index = 0;
  std::string anchor;
  nlohmann::json parameters = nlohmann::json::object();
  std::string margin;
  std::optional<long> threshold;
  CheckStatus status = CheckStatus::reported;
};

struct VerificationReport {
  std::string q_text;
  std::string nu_text;
  long digits = 0;
  long k_max = 0;
  std::vector<CheckRow> rows;

  /// No row failed (reported rows never count).
  bool passed() const;
  std::size_t count(CheckStatus status) const;
  nlohmann::json to_json() const;
  /// Columns check, index, anchor, parameters, margin, threshold, status.
  std::string to_csv() const;
};

/// Check ids in canonical order.
const std::vector<std::string>& check_ids();
/// The property a check id verifies. Throws std::invalid_argument for unknown ids.
const std::string& check_anchor(const std::string& check);

struct VerifyConfig {
  QParams params{"0.5", "0"};
  PrecisionContext ctx;
  long k_max = 12;
  std::string theta_zero_rule = "m^-2";
  std::string theta_inf_rule = "m^-0.5";
  std::string theta_star_rule = "alpha";
  int constancy_samples = 32;
  long gram_K = 8;
  long eta_K = 10;
  /// Tolerance of the residual checks (Gram matrix, eta agreement, recurrence at zeros).
  Real tolerance = Real(std::string_view("1e-40"), 64);
  /// Largest admissible threshold for the sign checks.
  long sign_threshold_limit = 6;
  /// Largest admissible first index of the asymptotic zero bracket.
  long k0_limit = 4;
  /// A trend statistic (see bounded_trend) at or below this counts as bounded.
  double trend_limit = 2.0;
  /// Integrands for the coefficient-decay check; empty means 1 and t^(-1/4).
  std::vector<LatticeIntegrand> functions;
};

/// Runs the named checks (all of them when `checks` is empty) and returns rows
/// sorted by check id, then index. Throws std::invalid_argument for unknown ids.
VerificationReport run_verification(const VerifyConfig& config, const std::vector<std::string>& checks = {});

/// J_nu(z; q^2) through the 1phi1 representation, independent of the direct series.
EvalResult jnu3_via_phi11(const QParams& params, const Real& z, const PrecisionContext& ctx);

/// Number of sign changes of J_nu(.; q^2) on a geometric grid of ratio 1.001
/// from the first-zero scan start up to `upper`, carried at the precision of `upper`.
long zero_census(const QParams& params, const Real& upper, const PrecisionContext& ctx);

}  // namespace qfb
