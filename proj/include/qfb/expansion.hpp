#pragma once

// q-Fourier-Bessel analysis on the lattice {q^i} for the basis functions
// J_nu(q j_k t; q^2). The engine computes their norms eta_k and the expansion
// coefficients of a given function. Orthonormality of the system
// u_k(t) = t^(1/2) J_nu(q j_k t; q^2) / sqrt(eta_k) is measured by its Gram matrix.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qfb/zeros.hpp"

namespace qfb {

/// A function known through its samples f(q^i). Lattice functions have finite
/// support; builtin analytic functions are sampled on demand and integrated
/// with the infinite-lattice closure.
class LatticeIntegrand {
 public:
  using Sampler = std::function<Real(std::size_t i, Bits bits)>;

  LatticeIntegrand(std::string name, Sampler sampler, std::optional<std::size_t> support);

  /// Samples of a lattice function. Throws BaseMismatchError unless its base is q.
  static LatticeIntegrand from_lattice(const LatticeFunction& f, const QParams& params);
  static LatticeIntegrand constant(const Real& c);
  /// t^s sampled at t = q^i.
  static LatticeIntegrand power(const QParams& params, const Real& s, std::string name);

  const std::string& name() const { return name_; }
  std::optional<std::size_t> support() const { return support_; }
  Real at(std::size_t i, Bits bits) const;

 private:
  std::string name_;
  Sampler sampler_;
  std::optional<std::size_t> support_;
};

/// J_nu(q^(i+1) j_k; q^2), the k-th basis function at t = q^i, extended lazily.
class ModeSampler {
 public:
  ModeSampler(HahnExtonBessel bessel, ZeroRecord record);

  const ZeroRecord& record() const { return record_; }
  const Real& at(std::size_t i);
  /// Index from which q^i j_k < q, past the oscillating region of the mode.
  std::size_t tail_start() const { return static_cast<std::size_t>(std::max<long>(record_.k + 1, 0)); }

 private:
  HahnExtonBessel bessel_;
  ZeroRecord record_;
  Real q_;
  Real next_argument_;
  std::vector<Real> values_;
};

/// (1-q) sum_i q^i g(i) with g sampled lazily.
struct LatticeSum {
  Real value;
  std::size_t terms = 0;
  Real tail_bound;
  /// False when max_terms was reached before the closure test passed.
  bool closed = true;
};

/// Sums up to `support` terms exactly, or (for infinite support) until three
/// consecutive terms past index `i_min` stay below 10^-(digits+5) times the
/// running sum. The tail bound is geometric in the last observed term ratio.
LatticeSum lattice_sum(const QParams& params, const std::function<Real(std::size_t)>& g, std::size_t i_min,
                       std::optional<std::size_t> support, const PrecisionContext& ctx);

enum class EtaMethod { integral, closed_form_nu_plus_1, closed_form_nu };

const char* to_string(EtaMethod method);

struct RiemannLebesgueRow {
  long m = 0;
  Real integral;        ///< I_m = integral of t f(t) J_nu(q j_m t; q^2)
  Real scaled;          ///< |I_m| q^(-m)
  Real envelope;        ///< (integral of t f^2)^(1/2) eta_m^(1/2)
  bool envelope_holds = false;
  std::optional<Real> ratio;  ///< |I_m / I_(m-1)|
};

struct RiemannLebesgueReport {
  std::string function;
  /// integral of t f(t)^2 (the squared norm of t^(1/2) f); infinite when the closure fails.
  Real weighted_norm_squared;
  bool integrable = true;
  std::vector<RiemannLebesgueRow> rows;
  Real sup_scaled;
  double trend = 1.0;  ///< bounded_trend of the scaled column

  bool envelope_holds() const;
  nlohmann::json to_json() const;
  /// m, |I_m|, |I_m| q^(-m), envelope.
  std::string to_csv() const;
};

struct ExpansionMode {
  long k = 0;
  Real eta;
  Real eta_closed_nu_plus_1;
  Real eta_closed_nu;
  Real a;  ///< a_k
  Real b;  ///< b_k
  Real integral;  ///< a_k eta_k
};

struct ExpansionResult {
  std::string q_text;
  std::string nu_text;
  long digits = 0;
  std::string function;
  long K = 0;
  std::vector<ExpansionMode> modes;
  /// Lattice length of the partial sums.
  std::size_t points = 0;
  /// f(q^j) for j < points.
  std::vector<Real> f_values;
  /// S_K on the lattice for K = 1..K.
  std::vector<LatticeFunction> partial_sums;
  /// sum_k a_k^2 eta_k and the bound integral of t f^2.
  Real bessel_sum;
  Real bessel_bound;
  double eta_trend = 1.0;  ///< bounded_trend of eta_k q^(-2k)

  /// bessel_sum <= bessel_bound up to rounding at the working precision.
  bool bessel_holds() const;

  nlohmann::json to_json() const;
  /// k, eta_k, a_k, b_k.
  std::string coefficients_csv() const;
  /// j, x, f, S_1..S_K.
  std::string convergence_csv() const;
};

/// Expansion engine for one (q, nu) and a zero table. Mode samples and norms
/// are cached, so an instance must not be shared between threads.
class FourierBessel {
 public:
  FourierBessel(ZeroTable zeros, PrecisionContext ctx);

  const QParams& params() const { return zeros_.params; }
  const ZeroTable& zeros() const { return zeros_; }
  const PrecisionContext& context() const { return ctx_; }
  long available_modes() const { return zeros_.size(); }

  ModeSampler& mode(long k);
  /// The basis function J_nu(q j_n t; q^2) as an integrand.
  LatticeIntegrand mode_function(long n);

  Real eta(long k, EtaMethod method = EtaMethod::integral);
  /// integral of t^weight f(t) J_nu(q j_k t; q^2); weight is 1 for a_k and 1/2 for b_k.
  Real moment(long k, const LatticeIntegrand& f, const Real& weight);
  Real coefficient(long k, const LatticeIntegrand& f);
  Real weighted_coefficient(long k, const LatticeIntegrand& f);
  std::vector<Real> coefficients(const LatticeIntegrand& f, long K);

  /// S_K(x) = sum_(k<=K) a_k J_nu(q j_k x; q^2) at arbitrary x >= 0.
  std::vector<Real> partial_sum(const std::vector<Real>& coeffs, const std::vector<Real>& x, long K);
  /// S_K(q^j) for j < points, reusing the mode samples.
  LatticeFunction partial_sum_lattice(const std::vector<Real>& coeffs, std::size_t points, long K);

  /// G[n][m] = <u_n, u_m> for n, m <= K.
  std::vector<std::vector<Real>> gram(long K);

  /// integral of t f(t)^2.
  LatticeSum weighted_norm_squared(const LatticeIntegrand& f);
  RiemannLebesgueReport riemann_lebesgue(const LatticeIntegrand& f, long m_lo, long m_hi);

  ExpansionResult expand(const LatticeIntegrand& f, long K, std::size_t points);

 private:
  void require_mode(long k) const;

  ZeroTable zeros_;
  PrecisionContext ctx_;
  HahnExtonBessel bessel_;
  std::map<long, std::unique_ptr<ModeSampler>> modes_;
  std::map<std::pair<long, int>, Real> eta_cache_;
};

// Single-call forms over a zero record or table.
Real eta_k(const QParams& params, const ZeroRecord& record, const PrecisionContext& ctx, EtaMethod method);
Real coefficient(const QParams& params, const LatticeIntegrand& f, const ZeroRecord& record, const Real& eta,
                 const PrecisionContext& ctx);
std::vector<Real> partial_sum(const ZeroTable& zeros, const std::vector<Real>& coeffs, const std::vector<Real>& x,
                              long K, const PrecisionContext& ctx);
std::vector<std::vector<Real>> gram_matrix(const ZeroTable& zeros, long K, const PrecisionContext& ctx);
RiemannLebesgueReport riemann_lebesgue_rate(const ZeroTable& zeros, const LatticeIntegrand& f, long m_lo, long m_hi,
                                            const PrecisionContext& ctx);

/// Builtin integrands by name: one | zero | constant:<c> | power:<s> | mode:<n>.
/// mode:<n> needs `engine`. Returns nullopt when `spec` names no builtin and
/// throws std::invalid_argument when it names one malformedly.
std::optional<LatticeIntegrand> builtin_integrand(const std::string& spec, const QParams& params,
                                                  FourierBessel* engine, Bits bits);

/// Gram matrix as CSV (row index n, then G[n][1..K]).
std::string gram_csv(const std::vector<std::vector<Real>>& gram, long digits);

}  // namespace qfb
