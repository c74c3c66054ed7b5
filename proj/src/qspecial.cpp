#include "qfb/qspecial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qfb {

namespace {

constexpr long kGuardDigits = 20;
constexpr long kSignDigits = 12;
// Parameters are stored at QParams::kStorageBits; stay below that.
constexpr long kMaxWorkingDigits = 2400;

Bits quantize(Bits bits) { return (bits + 63) / 64 * 64; }

Real epsilon(Bits bits) {
  Real r(bits);
  mpfr_set_ui_2exp(r.get(), 1, -static_cast<mpfr_exp_t>(bits), MPFR_RNDN);
  return r;
}

struct SeriesPass {
  Real sum;
  Real max_partial;
  std::size_t terms = 0;
  Real tail_bound;
};

// Sums sum_k weight(k) t_k with t_0 = 1 and t_(k+1) = t_k ratio(k). The ratios
// of every series summed here shrink monotonically in magnitude once past the
// peak, so after |ratio| < 1/4 the weighted tail is at most twice its first term.
template <class Ratio, class Weight>
SeriesPass sum_series(Bits bits, Ratio&& ratio, Weight&& weight, std::size_t max_terms) {
  CompensatedSum sum(bits);
  const Real eps = epsilon(bits);
  Real term = Real::one(bits);
  for (std::size_t k = 0;; ++k) {
    if (k >= max_terms) throw ConvergenceError("series did not converge within max_terms terms");
    sum.add(weight(k) * term);
    const Real r = ratio(k);
    term *= r;
    if (term.is_zero()) return {sum.value(), sum.max_partial(), k + 1, Real::zero(bits)};
    if (abs(r) < Real(0.25, 64)) {
      const Real next = 2L * abs(weight(k + 1) * term);
      if (k >= 1 && next <= eps * sum.max_partial()) return {sum.value(), sum.max_partial(), k + 1, next};
    }
  }
}

// log10 of the largest |t_k| for t_(k+1)/t_k given by log10_ratio(k).
template <class LogRatio>
double peak_log10(LogRatio&& log10_ratio) {
  double current = 0.0;
  double peak = 0.0;
  for (std::size_t k = 0; k < 100000; ++k) {
    const double step = log10_ratio(k);
    if (!(step > 0.0)) break;
    current += step;
    peak = std::max(peak, current);
  }
  return peak;
}

// Runs pass(bits) -> {series, scale} at increasing precision until the
// surviving digits reach `required`.
template <class Pass>
EvalResult run_adaptive(Pass&& pass, double peak_digits, long required, const PrecisionContext& ctx) {
  long digits = required + kGuardDigits + static_cast<long>(std::ceil(std::max(0.0, peak_digits)));
  digits = std::min(digits, kMaxWorkingDigits);
  for (int round = 0;; ++round) {
    const Bits bits = quantize(bits_for_digits(digits));
    auto [series, scale] = pass(bits);
    const Real magnitude = abs(scale);
    EvalResult result;
    result.value = series.sum * scale;
    result.max_partial_magnitude = series.max_partial * magnitude;
    result.tail_bound = series.tail_bound * magnitude;
    result.terms_used = series.terms;
    result.precision_used = digits_for_bits(bits);
    result.escalations = round;
    if (result.value.is_zero() || round >= ctx.max_escalations || digits >= kMaxWorkingDigits) return result;
    const double lost = result.cancellation_digits();
    if (static_cast<double>(result.precision_used) - lost >= static_cast<double>(required + 5)) return result;
    const auto grown = static_cast<long>(std::ceil(static_cast<double>(digits) * ctx.escalation_factor));
    const auto needed = required + kGuardDigits + static_cast<long>(std::ceil(lost));
    digits = std::min(std::max(grown, needed), kMaxWorkingDigits);
  }
}

void check_phi11_arguments(const Real& omega, const Real& q) {
  if (!(q > 0L) || !(q < 1L)) throw ConvergenceError("1phi1: base q must lie in (0,1) for convergence");
  if (!(omega >= 0L) || !(omega < 1L)) throw DomainError("1phi1: omega must lie in [0,1)");
}

double phi11_peak(const Real& omega, const Real& q, const Real& z) {
  if (z.is_zero()) return 0.0;
  const double lq = std::log10(q.to_double());
  const double lz = z.log10_abs();
  const double w = omega.to_double();
  const double qd = q.to_double();
  return peak_log10([&](std::size_t k) {
    const double qk = std::pow(qd, static_cast<double>(k));
    return static_cast<double>(k) * lq + lz - std::log10(1.0 - w * qk) - std::log10(1.0 - qk * qd);
  });
}

bool is_integer(const Real& x) { return mpfr_integer_p(x.get()) != 0; }

}  // namespace

// ---------------------------------------------------------------------------
// EvalResult

double EvalResult::cancellation_digits() const {
  if (value.is_zero() || max_partial_magnitude.is_zero()) return 0.0;
  return std::max(0.0, max_partial_magnitude.log10_abs() - value.log10_abs());
}

nlohmann::json EvalResult::to_json() const {
  const long shown = std::max(1L, static_cast<long>(std::floor(accurate_digits())));
  return {{"value", value.to_string(shown)},
          {"max_partial_magnitude", max_partial_magnitude.to_string(20)},
          {"terms_used", terms_used},
          {"precision_used", precision_used},
          {"escalations", escalations},
          {"tail_bound", tail_bound.to_string(5)},
          {"cancellation_digits", cancellation_digits()}};
}

// ---------------------------------------------------------------------------
// 1phi1

EvalResult phi11(const Real& omega, const Real& q, const Real& z, const PrecisionContext& ctx) {
  check_phi11_arguments(omega, q);
  auto pass = [&](Bits bits) {
    const Real qw = q.rounded(bits);
    const Real ww = omega.rounded(bits);
    const Real zw = z.rounded(bits);
    Real qk = Real::one(bits);
    Real qk1 = qw;
    auto ratio = [&](std::size_t) {
      Real r = -(qk * zw) / ((1L - ww * qk) * (1L - qk1));
      qk *= qw;
      qk1 *= qw;
      return r;
    };
    auto weight = [&](std::size_t) { return Real::one(bits); };
    return std::pair{sum_series(bits, ratio, weight, ctx.max_terms), Real::one(bits)};
  };
  return run_adaptive(pass, phi11_peak(omega, q, z), ctx.digits, ctx);
}

EvalResult phi11_derivative(const Real& omega, const Real& q, const Real& z, const PrecisionContext& ctx) {
  check_phi11_arguments(omega, q);
  // d/dz sum c_k z^k = sum_(k>=0) (k+1) c_(k+1) z^k.
  auto pass = [&](Bits bits) {
    const Real qw = q.rounded(bits);
    const Real ww = omega.rounded(bits);
    const Real zw = z.rounded(bits);
    const Real first = -1L / ((1L - ww) * (1L - qw));
    Real qk = qw;
    Real qk1 = square(qw);
    auto ratio = [&](std::size_t) {
      Real r = -(qk * zw) / ((1L - ww * qk) * (1L - qk1));
      qk *= qw;
      qk1 *= qw;
      return r;
    };
    auto weight = [&](std::size_t k) { return Real(static_cast<long>(k + 1), bits); };
    return std::pair{sum_series(bits, ratio, weight, ctx.max_terms), first};
  };
  return run_adaptive(pass, phi11_peak(omega, q, z) + 2.0, ctx.digits, ctx);
}

// ---------------------------------------------------------------------------
// HahnExtonBessel

HahnExtonBessel::HahnExtonBessel(QParams params, Base base, PrecisionContext ctx)
    : params_(std::move(params)),
      base_(base),
      ctx_(std::move(ctx)),
      base_exact_(base_exact(params_, base)),
      base_double_(base_exact_.to_double()),
      omega_double_(std::pow(base_double_, params_.nu_double() + 1.0)),
      cache_(std::make_shared<Cache>()) {}

std::shared_ptr<const HahnExtonBessel::Constants> HahnExtonBessel::constants(Bits bits) const {
  {
    std::lock_guard lock(cache_->mutex);
    if (auto it = cache_->by_bits.find(bits); it != cache_->by_bits.end()) return it->second;
  }
  const Real b = base_exact_.rounded(bits);
  const Real nu = params_.nu(bits);
  Real omega = pow(b, nu + 1L);
  const Real tol = epsilon(bits);
  Real prefactor = qpochhammer_infinite(omega, b, bits, tol, ctx_.max_terms) /
                   qpochhammer_infinite(b, b, bits, tol, ctx_.max_terms);
  auto made = std::make_shared<const Constants>(Constants{b, std::move(omega), nu, std::move(prefactor)});
  std::lock_guard lock(cache_->mutex);
  return cache_->by_bits.emplace(bits, std::move(made)).first->second;
}

double HahnExtonBessel::peak_term_digits(const Real& z) const {
  if (z.is_zero()) return 0.0;
  const double lb = std::log10(base_double_);
  const double lz2 = 2.0 * z.log10_abs();
  return peak_log10([&](std::size_t k) {
    const double bk = std::pow(base_double_, static_cast<double>(k));
    return static_cast<double>(k + 1) * lb + lz2 - std::log10(1.0 - omega_double_ * bk) -
           std::log10(1.0 - bk * base_double_);
  });
}

EvalResult HahnExtonBessel::evaluate(const Real& z, Mode mode, long required_digits) const {
  const Real& nu_exact = params_.nu_exact();
  if (z < 0L && !is_integer(nu_exact)) throw DomainError("J_nu(z) with z < 0 requires an integer order");
  if (z.is_zero()) {
    if (mode == Mode::value && nu_exact < 0L) throw DomainError("J_nu(0) is singular for nu < 0");
    if (mode == Mode::derivative && nu_exact < 1L) throw DomainError("dJ_nu/dz is singular at z = 0 for nu < 1");
  }
  auto pass = [&](Bits bits) {
    const auto c = constants(bits);
    const Real zw = z.rounded(bits);
    const Real y = square(zw);
    Real bk1 = c->base;
    Real omega_bk = c->omega;
    auto ratio = [&](std::size_t) {
      Real r = -(bk1 * y) / ((1L - omega_bk) * (1L - bk1));
      bk1 *= c->base;
      omega_bk *= c->base;
      return r;
    };
    Real scale = c->prefactor * (mode == Mode::value ? pow(zw, c->nu) : pow(zw, c->nu - 1L));
    if (mode == Mode::value) {
      auto weight = [&](std::size_t) { return Real::one(bits); };
      return std::pair{sum_series(bits, ratio, weight, ctx_.max_terms), std::move(scale)};
    }
    auto weight = [&](std::size_t k) { return c->nu + static_cast<long>(2 * k); };
    return std::pair{sum_series(bits, ratio, weight, ctx_.max_terms), std::move(scale)};
  };
  const double slack = mode == Mode::derivative ? 2.0 : 0.0;
  return run_adaptive(pass, peak_term_digits(z) + slack, required_digits, ctx_);
}

EvalResult HahnExtonBessel::value(const Real& z, long required_digits) const {
  return evaluate(z, Mode::value, required_digits);
}

EvalResult HahnExtonBessel::derivative(const Real& z, long required_digits) const {
  return evaluate(z, Mode::derivative, required_digits);
}

int HahnExtonBessel::sign(const Real& z) const { return evaluate(z, Mode::value, kSignDigits).value.sign(); }

int HahnExtonBessel::derivative_sign(const Real& z) const {
  return evaluate(z, Mode::derivative, kSignDigits).value.sign();
}

EvalResult jnu3(const QParams& params, Base base, const Real& z, const PrecisionContext& ctx) {
  return HahnExtonBessel(params, base, ctx).value(z);
}

EvalResult jnu3_derivative(const QParams& params, Base base, const Real& z, const PrecisionContext& ctx) {
  if (z < 0L) throw DomainError("dJ_nu/dz is only provided for z >= 0");
  return HahnExtonBessel(params, base, ctx).derivative(z);
}

// ---------------------------------------------------------------------------
// Asymptotic predictors

AsymptoticFrame::AsymptoticFrame(const Real& q, Bits bits)
    : q_(q.rounded(bits)), log_q_(log(q_)), q_tilde_(exp(4L * square(Real::pi(bits)) / log_q_)) {
  if (!(q_ > 0L) || !(q_ < 1L)) throw DomainError("asymptotic frame: q must lie in (0,1)");
}

Real AsymptoticFrame::beta(const Real& z) const { return Real::pi(q_.precision()) * log(z.rounded(q_.precision())) / log_q_; }

long AsymptoticFrame::K(const Real& z) const {
  const Bits bits = q_.precision();
  const Real half = Real(1L, bits) / 2L;
  return floor(half - log(z.rounded(bits)) / log_q_).to_long();
}

Real amplitude_A(const Real& z, const Real& q, const PrecisionContext& ctx) {
  if (!(z > 0L)) throw DomainError("A(z) requires z > 0");
  const Bits bits = ctx.bits() + 32;
  const AsymptoticFrame frame(q, bits);
  const Real zw = z.rounded(bits);
  const Real lz = log(zw);
  const Real pi = Real::pi(bits);
  const Real& lq = frame.log_q();
  const Real exponent = -square(lz) / (2L * lq) + square(pi) / (3L * lq) - lq / 12L;
  const Real cos2b = cos(2L * frame.beta(zw));
  const Real tol = epsilon(bits);
  Real product = Real::one(bits);
  for (Real r = frame.q_tilde(); r > tol; r *= frame.q_tilde()) product *= 1L - 2L * r * cos2b + square(r);
  return (2L * sqrt(zw) * exp(exponent) * product).rounded(ctx.bits());
}

Real predicted_derivative_leading(const QParams& params, long m, const Real& theta, const PrecisionContext& ctx) {
  if (m < 1) throw DomainError("predicted derivative: m must be >= 1");
  if (!(theta >= 0L) || !(theta < 1L)) throw DomainError("predicted derivative: theta must lie in [0,1)");
  const Bits bits = ctx.bits() + 32;
  const Real q = params.q(bits);
  const Real nu = params.nu(bits);
  const Real th = theta.rounded(bits);
  const Real q2 = square(q);
  const Real lq = log(q);
  const Real pi = Real::pi(bits);
  const Real tol = epsilon(bits);
  const PrecisionContext wide = PrecisionContext::with_digits(digits_for_bits(bits));

  const Real q2_inf = qpochhammer_infinite(q2, q2, bits, tol, ctx.max_terms);
  const Real y = pow(q, Real(2L - 2L * m, bits) + 2L * th);  // q^2 z^2 at z = q^(-m+theta)
  const Real amplitude = amplitude_A(y, q2, wide);

  // sum_k qt^k / |1 - qt^k e^(-2 i pi theta)|^2 with the base-q^2 dual qt = exp(2 pi^2 / ln q).
  const Real qt = exp(2L * square(pi) / lq);
  const Real cos2 = cos(2L * pi * th);
  Real dual_sum = Real::zero(bits);
  for (Real r = qt; r > tol; r *= qt) dual_sum += r / (1L - 2L * r * cos2 + square(r));

  const Real s = sin(pi * th);
  const Real c = cos(pi * th);
  const Real bracket = (nu + (2L * m - 1L) - 2L * th) * s + pi / lq * c + 8L * pi / lq * dual_sum * square(s) * c;
  const long sign_m = (m - 1) % 2 == 0 ? 1 : -1;
  const Real oscillating = amplitude * sign_m * bracket;

  const long K = floor(Real(m, bits) - Real(1L, bits) / 2L - th).to_long();
  const Real omega = pow(q, 2L * (nu + 1L));
  const long sign_k = (K + 1) % 2 == 0 ? 1 : -1;
  const Real shifted = pow(q, Real(2L * K + 4L - 2L * m, bits) + 2L * th);
  const Real remainder = sign_k * pow(q, (K + 1) * K) * pow(omega, K + 1) * nu *
                         qpochhammer_infinite(shifted, q2, bits, tol, ctx.max_terms) / q2_inf;

  const Real prefactor = pow(q, (Real(-m, bits) + th) * (nu - 1L)) / q2_inf;
  return (prefactor * (oscillating + remainder)).rounded(ctx.bits());
}

}  // namespace qfb
