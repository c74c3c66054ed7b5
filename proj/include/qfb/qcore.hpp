#pragma once

// q-arithmetic primitives. The precision policy and the parameter types are
// shared by every module. The q-shifted factorials and the q-integral on [0,1]
// over the lattice {q^k} with its inner product are the building blocks.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qfb/errors.hpp"
#include "qfb/real.hpp"

namespace qfb {

/// Working precision and truncation policy shared by every evaluation.
struct PrecisionContext {
  /// Decimal working precision. Results are accurate to about this many digits.
  long digits = 120;
  /// Relative truncation tolerance for every truncated sum or product.
  Real series_tol = Real(std::string_view("1e-120"), 64);
  /// Hard cap on terms/factors taken by any single series or product.
  std::size_t max_terms = 4'000'000;
  /// Multiplicative growth of the working precision when cancellation is detected.
  double escalation_factor = 2.0;
  /// Upper bound on escalation rounds per evaluation.
  int max_escalations = 8;

  /// Context with `digits` of precision and series_tol = 10^-digits.
  static PrecisionContext with_digits(long digits);

  /// Throws std::invalid_argument unless digits >= 30, series_tol < 10^(-digits/2)
  /// and escalation_factor > 1.
  void validate() const;

  Bits bits() const { return bits_for_digits(digits); }
};

/// Base q in (0,1) and order nu > -1.
///
/// Both are stored at kStorageBits so every evaluation, whatever its working
/// precision, sees the same exact numbers. Decimal inputs keep their text for
/// reports.
class QParams {
 public:
  static constexpr Bits kStorageBits = 8192;

  QParams(std::string_view q, std::string_view nu);
  QParams(double q, double nu);

  const std::string& q_text() const { return q_text_; }
  const std::string& nu_text() const { return nu_text_; }
  const Real& q_exact() const { return q_; }
  const Real& nu_exact() const { return nu_; }
  Real q(Bits bits) const { return q_.rounded(bits); }
  Real nu(Bits bits) const { return nu_.rounded(bits); }
  double q_double() const { return q_.to_double(); }
  double nu_double() const { return nu_.to_double(); }

  /// Same base with order nu + delta (used for J_{nu+1}).
  QParams with_order_shift(long delta) const;

 private:
  QParams(Real q, Real nu, std::string q_text, std::string nu_text);
  void validate() const;

  Real q_;
  Real nu_;
  std::string q_text_;
  std::string nu_text_;
};

/// Which power of q a q-Bessel evaluation uses as its base.
enum class Base { q, q_squared };

/// q or q^2 at storage precision.
Real base_exact(const QParams& params, Base base);

/// Neumaier-compensated accumulator that also records the largest partial sum.
class CompensatedSum {
 public:
  explicit CompensatedSum(Bits bits);

  void add(const Real& term);
  Real value() const;
  /// Largest |partial sum| seen so far (cancellation diagnostics).
  const Real& max_partial() const { return max_partial_; }
  std::size_t count() const { return count_; }

 private:
  Real sum_;
  Real compensation_;
  Real max_partial_;
  std::size_t count_ = 0;
};

/// f sampled on the lattice {base^j : j = 0..N-1}; zero beyond N.
class LatticeFunction {
 public:
  LatticeFunction(std::string base_text, std::vector<Real> values);
  LatticeFunction(const QParams& params, std::vector<Real> values)
      : LatticeFunction(params.q_text(), std::move(values)) {}

  /// Samples f(base^j) for j < n at `bits` precision.
  static LatticeFunction sample(const QParams& params, std::size_t n, const std::function<Real(const Real&)>& f,
                                Bits bits);

  const std::string& base_text() const { return base_text_; }
  const Real& base() const { return base_; }
  std::size_t size() const { return values_.size(); }
  std::span<const Real> values() const { return values_; }
  /// f(base^j), or zero past the truncation.
  Real at(std::size_t j) const;

  nlohmann::json to_json() const;
  static LatticeFunction from_json(const nlohmann::json& j);

 private:
  std::string base_text_;
  Real base_;
  std::vector<Real> values_;
};

/// (a;q)_n = (1-a)(1-aq)...(1-aq^(n-1)); (a;q)_0 = 1.
Real qpochhammer_finite(const Real& a, const Real& q, std::size_t n);

/// (a;q)_inf at the context precision. Throws ConvergenceError for |q| >= 1.
Real qpochhammer_infinite(const Real& a, const Real& q, const PrecisionContext& ctx);
/// Same at an explicit binary precision and relative truncation tolerance.
Real qpochhammer_infinite(const Real& a, const Real& q, Bits bits, const Real& tol, std::size_t max_terms);

/// (a_1,...,a_r;q)_inf = prod_i (a_i;q)_inf; the empty list gives 1.
Real qpochhammer_multi(std::span<const Real> a_list, const Real& q, const PrecisionContext& ctx);

/// (1-q) sum_{k<N} f(q^k) q^k. Exact finite sum; the lattice tail is zero.
Real qintegral_01(const LatticeFunction& f, const PrecisionContext& ctx);

struct QIntegralResult {
  Real value;
  std::size_t terms = 0;
  /// Geometric bound on the neglected tail.
  Real tail_bound;
};

/// Integral of an analytic integrand over the infinite lattice: terms are summed
/// until q^k |f(q^k)| stays below series_tol times the running sum for three
/// consecutive k (and k >= min_terms); the tail is bounded geometrically.
QIntegralResult qintegral_01(const std::function<Real(const Real&)>& f, const Real& q, const PrecisionContext& ctx,
                             std::size_t min_terms = 0);

/// <f,g> = integral of f g over [0,1]. The shorter function is zero-padded.
Real inner_product(const LatticeFunction& f, const LatticeFunction& g, const PrecisionContext& ctx);

Real norm_lq2(const LatticeFunction& f, const PrecisionContext& ctx);

}  // namespace qfb
