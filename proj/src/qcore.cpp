#include "qfb/qcore.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

namespace qfb {

namespace {

constexpr Bits kGuardBits = 32;

std::string double_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Real infinity(Bits bits) {
  Real r(bits);
  mpfr_set_inf(r.get(), 1);
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// PrecisionContext

PrecisionContext PrecisionContext::with_digits(long digits) {
  PrecisionContext ctx;
  ctx.digits = digits;
  ctx.series_tol = pow(Real(10L, 64), -digits);
  return ctx;
}

void PrecisionContext::validate() const {
  if (digits < 30) throw std::invalid_argument("precision context: digits must be >= 30, got " + std::to_string(digits));
  if (!(series_tol > 0L) || !(series_tol.log10_abs() < -static_cast<double>(digits) / 2.0)) {
    throw std::invalid_argument("precision context: series_tol must be positive and below 10^(-digits/2)");
  }
  if (!(escalation_factor > 1.0)) throw std::invalid_argument("precision context: escalation_factor must exceed 1");
  if (max_terms == 0) throw std::invalid_argument("precision context: max_terms must be positive");
}

// ---------------------------------------------------------------------------
// QParams

QParams::QParams(std::string_view q, std::string_view nu)
    : QParams(Real::parse(q, kStorageBits), Real::parse(nu, kStorageBits), std::string(q), std::string(nu)) {}

QParams::QParams(double q, double nu)
    : QParams(Real(q, kStorageBits), Real(nu, kStorageBits), double_text(q), double_text(nu)) {}

QParams::QParams(Real q, Real nu, std::string q_text, std::string nu_text)
    : q_(std::move(q)), nu_(std::move(nu)), q_text_(std::move(q_text)), nu_text_(std::move(nu_text)) {
  validate();
}

void QParams::validate() const {
  if (!(q_ > 0L) || !(q_ < 1L)) throw DomainError("q must lie strictly inside (0,1), got " + q_text_);
  if (!(nu_ > -1L)) throw DomainError("nu must be > -1, got " + nu_text_);
}

QParams QParams::with_order_shift(long delta) const {
  std::string text = nu_text_ + (delta >= 0 ? "+" : "") + std::to_string(delta);
  return QParams(q_, nu_ + delta, q_text_, std::move(text));
}

Real base_exact(const QParams& params, Base base) {
  return base == Base::q ? params.q_exact() : square(params.q_exact());
}

// ---------------------------------------------------------------------------
// CompensatedSum

CompensatedSum::CompensatedSum(Bits bits) : sum_(bits), compensation_(bits), max_partial_(bits) {}

void CompensatedSum::add(const Real& term) {
  const Bits bits = sum_.precision();
  const Real x = term.precision() == bits ? term : term.rounded(bits);
  const Real t = sum_ + x;
  if (abs(sum_) >= abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
  const Real magnitude = abs(sum_);
  if (magnitude > max_partial_) max_partial_ = magnitude;
  ++count_;
}

Real CompensatedSum::value() const { return sum_ + compensation_; }

// ---------------------------------------------------------------------------
// LatticeFunction

LatticeFunction::LatticeFunction(std::string base_text, std::vector<Real> values)
    : base_text_(std::move(base_text)), base_(Real::parse(base_text_, QParams::kStorageBits)), values_(std::move(values)) {
  if (!(base_ > 0L) || !(base_ < 1L)) throw DomainError("lattice base must lie in (0,1), got " + base_text_);
  if (values_.empty()) throw std::invalid_argument("lattice function needs at least one sample (N >= 1)");
}

LatticeFunction LatticeFunction::sample(const QParams& params, std::size_t n, const std::function<Real(const Real&)>& f,
                                        Bits bits) {
  std::vector<Real> values;
  values.reserve(n);
  const Real q = params.q(bits);
  Real t = Real::one(bits);
  for (std::size_t j = 0; j < n; ++j) {
    values.push_back(f(t));
    t *= q;
  }
  return LatticeFunction(params.q_text(), std::move(values));
}

Real LatticeFunction::at(std::size_t j) const { return j < values_.size() ? values_[j] : Real::zero(64); }

nlohmann::json LatticeFunction::to_json() const {
  nlohmann::json values = nlohmann::json::array();
  for (const Real& v : values_) values.push_back(v.to_string());
  return {{"q", base_text_}, {"N", values_.size()}, {"values", std::move(values)}};
}

LatticeFunction LatticeFunction::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("q") || !j.contains("values")) {
    throw std::invalid_argument("lattice function JSON needs \"q\" and \"values\"");
  }
  if (!j.at("q").is_string()) throw std::invalid_argument("lattice function \"q\" must be a decimal string");
  const auto& raw = j.at("values");
  if (!raw.is_array()) throw std::invalid_argument("lattice function \"values\" must be an array");
  std::vector<Real> values;
  values.reserve(raw.size());
  for (const auto& v : raw) {
    if (!v.is_string()) throw std::invalid_argument("lattice function values must be decimal strings");
    const std::string text = v.get<std::string>();
    // Keep every mantissa digit the file provides (at least 30). A value written
    // with D digits is parsed at bits_for_digits(D), which prints back as the same
    // D digits, so files written by to_json round-trip exactly.
    const auto mantissa_end = text.find_first_of("eE");
    const auto mantissa = std::string_view(text).substr(0, mantissa_end);
    const auto digits = static_cast<long>(std::count_if(mantissa.begin(), mantissa.end(), ::isdigit));
    values.push_back(Real::parse(text, bits_for_digits(std::max(digits, 30L))));
  }
  if (j.contains("N")) {
    const auto n = j.at("N").get<std::size_t>();
    if (n != values.size()) {
      throw std::invalid_argument("lattice function \"N\" (" + std::to_string(n) + ") disagrees with " +
                                  std::to_string(values.size()) + " values");
    }
  }
  return LatticeFunction(j.at("q").get<std::string>(), std::move(values));
}

// ---------------------------------------------------------------------------
// q-shifted factorials

Real qpochhammer_finite(const Real& a, const Real& q, std::size_t n) {
  const Bits bits = std::max(a.precision(), q.precision());
  Real product = Real::one(bits);
  Real term = a.rounded(bits);
  for (std::size_t i = 0; i < n; ++i) {
    product *= 1L - term;
    term *= q;
  }
  return product;
}

Real qpochhammer_infinite(const Real& a, const Real& q, Bits bits, const Real& tol, std::size_t max_terms) {
  if (!(abs(q) < 1L)) throw ConvergenceError("(a;q)_inf diverges for |q| >= 1");
  const Real qw = q.rounded(bits);
  Real product = Real::one(bits);
  Real term = a.rounded(bits);
  // Stop once |a q^n| < tol |partial|; the tail then lies within
  // 1 -+ |a| q^n / (1 - q) of one.
  for (std::size_t n = 0; !term.is_zero(); ++n) {
    if (abs(term) < tol * abs(product)) break;
    if (n >= max_terms) throw ConvergenceError("(a;q)_inf: exceeded max_terms factors");
    product *= 1L - term;
    if (product.is_zero()) break;
    term *= qw;
  }
  return product;
}

Real qpochhammer_infinite(const Real& a, const Real& q, const PrecisionContext& ctx) {
  const Bits bits = ctx.bits();
  return qpochhammer_infinite(a, q, bits + kGuardBits, ctx.series_tol, ctx.max_terms).rounded(bits);
}

Real qpochhammer_multi(std::span<const Real> a_list, const Real& q, const PrecisionContext& ctx) {
  const Bits bits = ctx.bits();
  Real product = Real::one(bits + kGuardBits);
  for (const Real& a : a_list) {
    product *= qpochhammer_infinite(a, q, bits + kGuardBits, ctx.series_tol, ctx.max_terms);
  }
  return product.rounded(bits);
}

// ---------------------------------------------------------------------------
// q-integrals

Real qintegral_01(const LatticeFunction& f, const PrecisionContext& ctx) {
  Bits bits = ctx.bits();
  for (const Real& v : f.values()) bits = std::max(bits, v.precision());
  const double required = -static_cast<double>(ctx.digits) / 2.0;

  for (int round = 0;; ++round) {
    const Real q = f.base().rounded(bits);
    CompensatedSum sum(bits);
    Real weight = Real::one(bits);
    for (const Real& v : f.values()) {
      sum.add(v * weight);
      weight *= q;
    }
    const Real total = sum.value();
    // Cancellation policy: re-run at a wider precision when the result is
    // tiny compared with the largest partial sum.
    const bool cancelled = !sum.max_partial().is_zero() &&
                           total.log10_abs() - sum.max_partial().log10_abs() < required;
    if (!cancelled || round >= ctx.max_escalations) return ((1L - q) * total).rounded(ctx.bits());
    bits = static_cast<Bits>(std::ceil(static_cast<double>(bits) * ctx.escalation_factor));
  }
}

QIntegralResult qintegral_01(const std::function<Real(const Real&)>& f, const Real& q, const PrecisionContext& ctx,
                             std::size_t min_terms) {
  if (!(q > 0L) || !(q < 1L)) throw DomainError("q-integral base must lie in (0,1)");
  const Bits bits = ctx.bits() + kGuardBits;
  const Real qw = q.rounded(bits);
  const Real scale = 1L - qw;
  CompensatedSum sum(bits);
  Real t = Real::one(bits);
  Real previous = Real::zero(bits);
  Real worst_ratio = Real::zero(bits);
  int small_run = 0;
  std::size_t k = 0;
  for (;; ++k) {
    if (k >= ctx.max_terms) throw ConvergenceError("q-integral closure: exceeded max_terms lattice points");
    const Real term = scale * t * f(t);
    sum.add(term);
    const Real magnitude = abs(term);
    if (k + 3 >= min_terms && magnitude <= ctx.series_tol * abs(sum.value())) {
      if (!previous.is_zero()) worst_ratio = max(worst_ratio, magnitude / previous);
      if (++small_run >= 3) {
        previous = magnitude;
        break;
      }
    } else {
      small_run = 0;
      worst_ratio = Real::zero(bits);
    }
    previous = magnitude;
    t *= qw;
  }
  QIntegralResult result{sum.value().rounded(ctx.bits()), k + 1, Real::zero(ctx.bits())};
  if (previous.is_zero()) {
    result.tail_bound = Real::zero(ctx.bits());
  } else if (worst_ratio < 1L) {
    result.tail_bound = (previous * worst_ratio / (1L - worst_ratio)).rounded(ctx.bits());
  } else {
    result.tail_bound = infinity(ctx.bits());
  }
  return result;
}

Real inner_product(const LatticeFunction& f, const LatticeFunction& g, const PrecisionContext& ctx) {
  if (f.base() != g.base()) {
    throw BaseMismatchError("inner product of lattice functions with bases " + f.base_text() + " and " +
                            g.base_text());
  }
  const std::size_t n = std::max(f.size(), g.size());
  std::vector<Real> product;
  product.reserve(n);
  for (std::size_t j = 0; j < n; ++j) product.push_back(f.at(j) * g.at(j));
  return qintegral_01(LatticeFunction(f.base_text(), std::move(product)), ctx);
}

Real norm_lq2(const LatticeFunction& f, const PrecisionContext& ctx) {
  const Real squared = inner_product(f, f, ctx);
  return squared > 0L ? sqrt(squared) : Real::zero(squared.precision());
}

}  // namespace qfb
