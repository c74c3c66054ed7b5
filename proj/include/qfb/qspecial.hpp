#pragma once

// The Hahn-Exton (third Jackson) q-Bessel function J_nu(z; base) with its
// z-derivative, evaluated either as a direct series or through the basic
// hypergeometric series 1phi1(0; w; q, z). Leading-order large-argument
// predictors built from the amplitude A(z) support the sign checks.
//
// Every evaluation is adaptive: a first pass runs at the requested digits plus
// the a-priori size of the largest series term, and the pass is repeated at a
// wider precision while the ratio between the largest partial sum and the
// result leaves fewer than the requested digits intact.

#include <map>
#include <memory>
#include <mutex>

#include <json.hpp>

#include "qfb/qcore.hpp"

namespace qfb {

struct EvalResult {
  Real value;
  /// Largest |partial sum| met while summing, in the units of `value`.
  Real max_partial_magnitude;
  std::size_t terms_used = 0;
  /// Decimal digits of the final pass.
  long precision_used = 0;
  int escalations = 0;
  /// Bound on the neglected series tail, in the units of `value`.
  Real tail_bound;

  /// log10(max_partial_magnitude / |value|); zero when value == 0.
  double cancellation_digits() const;
  /// Digits of `value` that survive the cancellation.
  double accurate_digits() const { return static_cast<double>(precision_used) - cancellation_digits(); }

  nlohmann::json to_json() const;
};

/// 1phi1(0; omega; q, z) = sum_k (-1)^k q^(k(k-1)/2) z^k / ((omega;q)_k (q;q)_k).
/// Arguments are taken as exact binary numbers. Requires 0 <= omega < 1; throws
/// ConvergenceError when q is outside (0,1).
EvalResult phi11(const Real& omega, const Real& q, const Real& z, const PrecisionContext& ctx);

/// d/dz 1phi1(0; omega; q, z).
EvalResult phi11_derivative(const Real& omega, const Real& q, const Real& z, const PrecisionContext& ctx);

/// J_nu(z; b) = z^nu (b^(nu+1); b)_inf / (b; b)_inf
///              * sum_k (-1)^k b^(k(k+1)/2) z^(2k) / ((b^(nu+1); b)_k (b; b)_k)
/// with b = q or q^2, together with its z-derivative.
///
/// The infinite-product prefactor is cached per working precision; the cache
/// is shared between copies and guarded, so one evaluator may serve several
/// threads.
class HahnExtonBessel {
 public:
  HahnExtonBessel(QParams params, Base base, PrecisionContext ctx);

  const QParams& params() const { return params_; }
  Base base() const { return base_; }
  const PrecisionContext& context() const { return ctx_; }

  EvalResult value(const Real& z) const { return value(z, ctx_.digits); }
  /// Value with at least `required_digits` correct digits (after cancellation).
  EvalResult value(const Real& z, long required_digits) const;
  EvalResult derivative(const Real& z) const { return derivative(z, ctx_.digits); }
  EvalResult derivative(const Real& z, long required_digits) const;

  /// Sign of J_nu(z), evaluated just precisely enough to be trustworthy.
  int sign(const Real& z) const;
  /// Sign of the z-derivative.
  int derivative_sign(const Real& z) const;

  /// log10 of the largest series term at z (double estimate, used for precision planning).
  double peak_term_digits(const Real& z) const;

 private:
  struct Constants {
    Real base;
    Real omega;
    Real nu;
    Real prefactor;
  };
  struct Cache {
    std::mutex mutex;
    std::map<Bits, std::shared_ptr<const Constants>> by_bits;
  };

  enum class Mode { value, derivative };

  std::shared_ptr<const Constants> constants(Bits bits) const;
  EvalResult evaluate(const Real& z, Mode mode, long required_digits) const;

  QParams params_;
  Base base_;
  PrecisionContext ctx_;
  Real base_exact_;
  double base_double_;
  double omega_double_;
  std::shared_ptr<Cache> cache_;
};

/// J_nu(z; base) for a single argument.
EvalResult jnu3(const QParams& params, Base base, const Real& z, const PrecisionContext& ctx);
/// dJ_nu(z; base)/dz. z > 0, or z = 0 when nu >= 1.
EvalResult jnu3_derivative(const QParams& params, Base base, const Real& z, const PrecisionContext& ctx);

/// Modular-dual base and phase functions of a base q in (0,1):
///   q_tilde = exp(4 pi^2 / ln q), beta(z) = pi ln z / ln q,
///   K(z) = floor(1/2 - ln z / ln q).
class AsymptoticFrame {
 public:
  AsymptoticFrame(const Real& q, Bits bits);

  const Real& q() const { return q_; }
  const Real& log_q() const { return log_q_; }
  const Real& q_tilde() const { return q_tilde_; }
  Real beta(const Real& z) const;
  long K(const Real& z) const;

 private:
  Real q_;
  Real log_q_;
  Real q_tilde_;
};

/// A(z) = 2 q^(-1/12) sqrt(z) exp(-ln^2 z / (2 ln q) + pi^2 / (3 ln q)) |(q_tilde e^(2 i beta(z)); q_tilde)_inf|^2
/// for z > 0, the squared modulus taken as prod_k (1 - 2 q_tilde^(k+1) cos 2beta + q_tilde^(2k+2)).
Real amplitude_A(const Real& z, const Real& q, const PrecisionContext& ctx);

/// Leading bracket of dJ_nu(z; q^2)/dz at z = q^(-m+theta), with the
/// correction factors B and C set to 1 and the O(.) remainder dropped.
/// Only meaningful as a sign or ratio predictor for large m.
Real predicted_derivative_leading(const QParams& params, long m, const Real& theta, const PrecisionContext& ctx);

}  // namespace qfb
