#pragma once

// Positive zeros j_k of J_nu(z; q^2), written as j_k = q^(-k + epsilon_k), and
// numerical checks of the structural properties of the zeros and of the
// derivative signs around them.
//
// Zeros are refined in epsilon rather than in z. The offset epsilon_k decays
// like q^(2k^2), so for k around 12 it is far below the resolution of z at the
// working precision; bisection on epsilon keeps it to full relative precision
// and the lattice point q^(-k + epsilon) is then formed at a precision wide
// enough to carry it.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qfb/qspecial.hpp"
#include "qfb/theta_rule.hpp"

namespace qfb {

/// alpha_k = ln(1 - q^(2(k+nu)) / (1 - q^(2k))) / (2 ln q), the width of the
/// asymptotic zero bracket in epsilon. Throws DomainError when the logarithm's
/// argument is not positive.
Real alpha_k(const QParams& params, long k, const PrecisionContext& ctx);
/// alpha_k, or nullopt where the closed form is undefined.
std::optional<Real> alpha_k_if_defined(const QParams& params, long k, Bits bits);

/// A sign-change interval for the k-th zero, in z and in epsilon.
struct ZeroBracket {
  Real lo;           ///< z at epsilon_hi
  Real hi;           ///< z at epsilon_lo
  Real epsilon_lo;
  Real epsilon_hi;
  bool from_asymptotic_bracket = false;  ///< (q^(-k+alpha_k), q^(-k)) isolated the zero
};

struct ZeroRecord {
  long k = 0;
  Real bracket_lo;
  Real bracket_hi;
  Real j;
  /// k + ln(j) / ln(q).
  Real epsilon;
  std::optional<Real> alpha;
  bool from_asymptotic_bracket = false;
  /// Relative digits to which epsilon (and hence j) is pinned by the final bracket.
  long refined_to = 0;

  nlohmann::json to_json() const;
};

/// Zero search state for one (q, nu). Zeros are found in increasing order: the
/// bracket for j_k needs j_(k-1) to rule out skipped or repeated roots.
class ZeroFinder {
 public:
  ZeroFinder(QParams params, PrecisionContext ctx);

  const QParams& params() const { return params_; }
  const PrecisionContext& context() const { return ctx_; }
  const HahnExtonBessel& bessel() const { return bessel_; }

  /// q^(-k + epsilon), formed at a precision that resolves epsilon.
  Real lattice_point(long k, const Real& epsilon) const;
  /// Sign of J_nu(q^(-k + epsilon); q^2), trustworthy under the cancellation policy.
  int sign_at(long k, const Real& epsilon) const;

  /// Sign-change interval for the k-th zero. `previous` is j_(k-1) (absent for k = 1).
  /// Tries the asymptotic bracket first and falls back to a geometric scan with
  /// ratio 1.001 upward from `previous`. Throws ScanExhaustedError when the scan
  /// passes q^(-k-2) without a sign change.
  ZeroBracket bracket(long k, const std::optional<Real>& previous) const;

  /// Bisection (in epsilon) of a bracket down to relative width 10^-digits in epsilon.
  ZeroRecord refine(long k, const ZeroBracket& bracket) const;

  /// Lower end for the first zero: J_nu > 0 on (0, start] because the series
  /// terms there alternate with decreasing magnitude.
  Real first_scan_start() const;

 private:
  QParams params_;
  PrecisionContext ctx_;
  HahnExtonBessel bessel_;
  Real log_q_;
};

struct ZeroTable {
  QParams params;
  long digits = 0;
  std::vector<ZeroRecord> records;
  /// Smallest k from which every computed zero was isolated by the asymptotic bracket.
  std::optional<long> k0;

  /// Record for index k (1-based). Throws std::out_of_range.
  const ZeroRecord& at(long k) const;
  long size() const { return static_cast<long>(records.size()); }

  /// Columns k, j, epsilon_k, alpha_k, digits, asymptotic_bracket.
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// Sign-change interval for the k-th zero (zeros 1..k-1 are computed first).
ZeroBracket bracket_zero(const QParams& params, long k, const PrecisionContext& ctx);
/// The k-th positive zero of J_nu(z; q^2).
ZeroRecord find_zero(const QParams& params, long k, const PrecisionContext& ctx);
/// Zeros 1..k_max.
ZeroTable compute_zeros(const QParams& params, long k_max, const PrecisionContext& ctx);

// ---------------------------------------------------------------------------
// Structure checks

struct ShiftedZeroCheck {
  long k = 0;
  /// j_(k-1) < q j_k < q^(1-k).
  bool holds = false;
  /// q j_k / j_(k-1) - 1 (positive when the lower inequality holds).
  Real lower_margin;
  /// 1 - q j_k / q^(1-k) (positive when the upper inequality holds).
  Real upper_margin;
  /// epsilon_k < epsilon_(k-1), the equivalent epsilon form of the lower inequality.
  bool epsilon_decreasing = false;
  /// q^(-k-1+alpha_(k+1)) < j_k / q < j_(k+1); absent without record k+1 or alpha_(k+1).
  std::optional<bool> companion_holds;
  /// Same check with alpha_k in place of alpha_(k+1).
  std::optional<bool> companion_alpha_k_holds;

  nlohmann::json to_json() const;
};

/// Interlacing of the shifted zero q j_k. Needs records k-1 and k.
ShiftedZeroCheck verify_shifted_zero(const ZeroTable& table, long k);

enum class ThetaLimit { zero, infinity };
enum class SignTarget { bessel_derivative, phi11_derivative };

struct SignRow {
  long m = 0;
  Real theta;
  int observed = 0;
  int predicted = 0;
};

struct SignPattern {
  SignTarget target = SignTarget::bessel_derivative;
  ThetaLimit limit = ThetaLimit::zero;
  std::string rule;
  Base phi11_base = Base::q_squared;
  std::vector<SignRow> rows;
  /// First m from which every row matches its prediction.
  std::optional<long> threshold;

  nlohmann::json to_json() const;
};

/// Predicted sign of dJ_nu(z;q^2)/dz at z = q^(-m + theta_m), or of
/// d 1phi1(0; Q^(nu+1); Q, z)/dz at z = Q^(-m + theta_m) for the series base Q.
int predicted_sign(SignTarget target, ThetaLimit limit, long m);

/// Observed against predicted derivative signs. The 1phi1 target uses the
/// series base Q = q^2 by default, the base of the series inside J_nu(z; q^2);
/// `phi11_base` selects Q = q instead.
SignPattern derivative_sign_pattern(const QParams& params, long m_lo, long m_hi, const ThetaRule& rule,
                                    ThetaLimit limit, SignTarget target, const PrecisionContext& ctx,
                                    Base phi11_base = Base::q_squared);

struct SignConstancyRow {
  long m = 0;
  Real theta_star;
  int samples = 0;
  bool constant = false;
  int sign = 0;  ///< common sign when constant
};

struct SignConstancyReport {
  std::string rule;
  std::vector<SignConstancyRow> rows;
  /// Rows m and m+1 carry opposite constant signs for every adjacent pair.
  bool adjacent_alternate = false;
  bool all_constant = false;

  nlohmann::json to_json() const;
};

/// Samples dJ_nu/dz on a geometric grid strictly inside (q^(-m+theta*_m), q^(-m)).
/// Rows where theta*_m is undefined or outside (0,1) carry samples = 0.
SignConstancyReport verify_sign_constancy(const QParams& params, long m_lo, long m_hi, const ThetaRule& theta_star,
                                          int samples_per_interval, const PrecisionContext& ctx);

struct DecayRow {
  long k = 0;
  /// |J'(j_k)| q^(k(k+nu-2)).
  Real derivative_scaled;
  /// |J(q j_k)| and the bound C q^((k+nu)(k-1)).
  Real shifted_value;
  Real shifted_bound;
  /// |J(q^(1-k))| against the same bound.
  Real lattice_value;
  /// Enlarged bound B_mu(q) q^(-(k+(mu-3)/2-epsilon_k)^2) for mu = nu and nu+1,
  /// and the matching |J_mu(q j_k)|; reported only.
  Real enlarged_bound_nu;
  Real enlarged_value_nu;
  Real enlarged_bound_nu1;
  Real enlarged_value_nu1;
  /// J(q j_k) J'(j_k) < 0.
  bool product_negative = false;

  nlohmann::json to_json() const;
};

struct DecayReport {
  std::vector<DecayRow> rows;
  /// C = (-q^2, -q^(2(nu+1)); q^2)_inf / (q^2; q^2)_inf.
  Real bound_constant;

  nlohmann::json to_json() const;
};

/// Decay of the derivative at the zeros and the bounds on |J| at the shifted
/// zeros and lattice points, for k in [k_lo, k_hi].
DecayReport verify_decay_bounds(const ZeroTable& table, long k_lo, long k_hi, const PrecisionContext& ctx);

/// Bounded-trend statistic for a positive sequence: max over the upper half of
/// the indices divided by max over the lower half. Values near or below one mean
/// the sequence does not grow across the range.
double bounded_trend(const std::vector<Real>& values);

}  // namespace qfb
