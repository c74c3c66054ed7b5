#include "qfb/zeros.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qfb {

namespace {

constexpr long kGuardDigits = 60;
constexpr long kMaxBisections = 50000;
const char* const kScanRatio = "1.001";

Bits quantize(Bits bits) { return (bits + 63) / 64 * 64; }

int parity(long n) { return n % 2 == 0 ? 1 : -1; }

Real expm1(const Real& x) {
  Real r(x.precision());
  mpfr_expm1(r.get(), x.get(), MPFR_RNDN);
  return r;
}

std::string optional_text(const std::optional<Real>& x, long digits) { return x ? x->to_string(digits) : ""; }

nlohmann::json optional_json(const std::optional<Real>& x, long digits) {
  return x ? nlohmann::json(x->to_string(digits)) : nlohmann::json(nullptr);
}

nlohmann::json optional_json(const std::optional<bool>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); }

nlohmann::json optional_json(const std::optional<long>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); }

// Digits of j needed to reproduce epsilon to `digits` relative digits.
long j_digits(const ZeroRecord& r, long digits) {
  const long extra = r.epsilon.is_zero() ? 0 : static_cast<long>(std::ceil(std::max(0.0, -r.epsilon.log10_abs())));
  return digits + extra;
}

}  // namespace

// ---------------------------------------------------------------------------
// alpha_k

std::optional<Real> alpha_k_if_defined(const QParams& params, long k, Bits bits) {
  if (k < 1) throw DomainError("alpha_k: k must be >= 1");
  const Real q = params.q(bits);
  const Real nu = params.nu(bits);
  const Real log_q = log(q);
  const Real ratio = exp(2L * (nu + k) * log_q) / (1L - pow(q, 2 * k));
  if (!(ratio < 1L)) return std::nullopt;
  return log1p(-ratio) / (2L * log_q);
}

Real alpha_k(const QParams& params, long k, const PrecisionContext& ctx) {
  auto alpha = alpha_k_if_defined(params, k, ctx.bits());
  if (!alpha) {
    throw DomainError("alpha_k undefined for k = " + std::to_string(k) + ": q^(2(k+nu))/(1-q^(2k)) >= 1");
  }
  return *alpha;
}

// ---------------------------------------------------------------------------
// ZeroRecord

nlohmann::json ZeroRecord::to_json() const {
  const long d = std::max<long>(refined_to, 1);
  return {{"k", k},
          {"j", j.to_string(j_digits(*this, d))},
          {"epsilon_k", epsilon.to_string(d)},
          {"alpha_k", optional_json(alpha, d)},
          {"bracket_lo", bracket_lo.to_string(j_digits(*this, d))},
          {"bracket_hi", bracket_hi.to_string(j_digits(*this, d))},
          {"asymptotic_bracket", from_asymptotic_bracket},
          {"digits", refined_to}};
}

// ---------------------------------------------------------------------------
// ZeroFinder

ZeroFinder::ZeroFinder(QParams params, PrecisionContext ctx)
    : params_(std::move(params)),
      ctx_(std::move(ctx)),
      bessel_(params_, Base::q_squared, ctx_),
      log_q_(log(params_.q(ctx_.bits() + 64))) {}

Real ZeroFinder::lattice_point(long k, const Real& epsilon) const {
  const double tiny = epsilon.is_zero() ? 0.0 : std::max(0.0, -epsilon.log10_abs());
  const double peak = bessel_.peak_term_digits(exp(-Real(k, 64) * log_q_.rounded(64)));
  const auto digits = static_cast<long>(std::ceil(static_cast<double>(ctx_.digits + kGuardDigits) + tiny + 2.0 * peak));
  const Bits bits = std::min(quantize(bits_for_digits(digits)), QParams::kStorageBits);
  Real exponent = epsilon.rounded(bits);
  exponent -= k;
  return exp(exponent * log(params_.q(bits)));
}

int ZeroFinder::sign_at(long k, const Real& epsilon) const { return bessel_.sign(lattice_point(k, epsilon)); }

Real ZeroFinder::first_scan_start() const {
  const Bits bits = ctx_.bits();
  const Real b = square(params_.q(bits));
  const Real omega = pow(b, params_.nu(bits) + 1L);
  return Real::parse("0.99", bits) * sqrt((1L - omega) * (1L - b) / b);
}

ZeroBracket ZeroFinder::bracket(long k, const std::optional<Real>& previous) const {
  if (k < 1) throw DomainError("zero index k must be >= 1");
  const Bits ebits = ctx_.bits() + 64;
  const int left_sign = parity(k - 1);  // J_nu > 0 on (0, j_1) and alternates between zeros

  if (auto alpha = alpha_k_if_defined(params_, k, ebits); alpha && *alpha < 1L) {
    const Real lo = lattice_point(k, *alpha);
    const bool above_previous = !previous || lo > *previous;
    if (above_previous && sign_at(k, *alpha) == left_sign && sign_at(k, Real::zero(ebits)) == -left_sign) {
      return {lo, lattice_point(k, Real::zero(ebits)), Real::zero(ebits), *alpha, true};
    }
  }

  const Bits bits = ctx_.bits();
  const Real ratio = Real::parse(kScanRatio, bits);
  const Real limit = exp(-Real(k + 2, bits) * log_q_.rounded(bits));
  Real current = previous ? previous->rounded(bits) * ratio : first_scan_start();
  int current_sign = bessel_.sign(current);
  if (current_sign != left_sign) {
    throw ScanExhaustedError("zero " + std::to_string(k) + ": scan start z = " + current.to_string(20) +
                             " has the wrong sign; the previous zero is unreliable");
  }
  std::size_t steps = 0;
  while (current <= limit) {
    Real next = current * ratio;
    const int next_sign = bessel_.sign(next);
    ++steps;
    if (next_sign != current_sign) {
      auto epsilon = [&](const Real& z) { return Real(k, ebits) + log(z.rounded(ebits)) / log_q_; };
      return {current, next, epsilon(next), epsilon(current), false};
    }
    current = std::move(next);
  }
  throw ScanExhaustedError("zero " + std::to_string(k) + ": no sign change on the geometric grid with ratio " +
                           kScanRatio + " from " + (previous ? previous->to_string(20) : first_scan_start().to_string(20)) +
                           " to q^(-k-2) = " + limit.to_string(20) + " (" + std::to_string(steps) + " cells)");
}

ZeroRecord ZeroFinder::refine(long k, const ZeroBracket& br) const {
  const Bits ebits = ctx_.bits() + 64;
  Real lo = br.epsilon_lo.rounded(ebits);
  Real hi = br.epsilon_hi.rounded(ebits);
  if (!(lo < hi)) throw std::invalid_argument("zero bracket must satisfy epsilon_lo < epsilon_hi");
  const int sign_lo = sign_at(k, lo);
  const int sign_hi = sign_at(k, hi);
  if (sign_lo == sign_hi || sign_lo == 0 || sign_hi == 0) {
    throw ConvergenceError("zero " + std::to_string(k) + ": bracket endpoints do not straddle a sign change");
  }
  const Real target = pow(Real(10L, ebits), -ctx_.digits);
  const Real descent = pow(Real(2L, ebits), -32L);
  const Real four = Real(4L, ebits);

  bool exact = false;
  for (long iteration = 0;; ++iteration) {
    if (iteration >= kMaxBisections) throw ConvergenceError("zero " + std::to_string(k) + ": bisection did not converge");
    const Real scale = max(abs(lo), abs(hi));
    if (hi - lo <= target * scale) break;
    Real mid(ebits);
    if (lo.is_zero()) {
      mid = hi * descent;
    } else if (hi.is_zero()) {
      mid = lo * descent;
    } else if (lo > 0L && hi / lo > four) {
      mid = sqrt(lo * hi);
    } else if (hi < 0L && lo / hi > four) {
      mid = -sqrt(lo * hi);
    } else {
      mid = (lo + hi) / 2L;
    }
    const int s = sign_at(k, mid);
    if (s == 0) {
      lo = mid;
      hi = mid;
      exact = true;
      break;
    }
    (s == sign_lo ? lo : hi) = mid;
  }

  ZeroRecord record;
  record.k = k;
  record.epsilon = (lo + hi) / 2L;
  record.j = lattice_point(k, record.epsilon);
  record.bracket_lo = lattice_point(k, hi);
  record.bracket_hi = lattice_point(k, lo);
  record.alpha = alpha_k_if_defined(params_, k, ebits);
  record.from_asymptotic_bracket = br.from_asymptotic_bracket;
  if (exact || record.epsilon.is_zero()) {
    record.refined_to = digits_for_bits(ebits);
  } else {
    const double width = (hi - lo).log10_abs() - record.epsilon.log10_abs();
    record.refined_to = static_cast<long>(std::floor(-width));
  }
  return record;
}

// ---------------------------------------------------------------------------
// ZeroTable

const ZeroRecord& ZeroTable::at(long k) const {
  if (k < 1 || k > size()) throw std::out_of_range("zero table has no record for k = " + std::to_string(k));
  return records[static_cast<std::size_t>(k - 1)];
}

std::string ZeroTable::to_csv() const {
  std::ostringstream out;
  out << "k,j,epsilon_k,alpha_k,digits,asymptotic_bracket\r\n";
  for (const ZeroRecord& r : records) {
    const long d = std::max<long>(r.refined_to, 1);
    out << r.k << ',' << r.j.to_string(j_digits(r, d)) << ',' << r.epsilon.to_string(d) << ','
        << optional_text(r.alpha, d) << ',' << r.refined_to << ',' << (r.from_asymptotic_bracket ? "true" : "false")
        << "\r\n";
  }
  return out.str();
}

nlohmann::json ZeroTable::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const ZeroRecord& r : records) rows.push_back(r.to_json());
  return {{"q", params.q_text()}, {"nu", params.nu_text()}, {"digits", digits}, {"k0", optional_json(k0)},
          {"zeros", std::move(rows)}};
}

ZeroTable compute_zeros(const QParams& params, long k_max, const PrecisionContext& ctx) {
  if (k_max < 0) throw std::invalid_argument("k_max must be >= 0");
  const ZeroFinder finder(params, ctx);
  ZeroTable table{params, ctx.digits, {}, std::nullopt};
  std::optional<Real> previous;
  for (long k = 1; k <= k_max; ++k) {
    table.records.push_back(finder.refine(k, finder.bracket(k, previous)));
    previous = table.records.back().j;
  }
  for (auto it = table.records.rbegin(); it != table.records.rend() && it->from_asymptotic_bracket; ++it) {
    table.k0 = it->k;
  }
  return table;
}

ZeroBracket bracket_zero(const QParams& params, long k, const PrecisionContext& ctx) {
  const ZeroFinder finder(params, ctx);
  std::optional<Real> previous;
  for (long i = 1; i < k; ++i) previous = finder.refine(i, finder.bracket(i, previous)).j;
  return finder.bracket(k, previous);
}

ZeroRecord find_zero(const QParams& params, long k, const PrecisionContext& ctx) {
  const ZeroTable table = compute_zeros(params, k, ctx);
  return table.at(k);
}

// ---------------------------------------------------------------------------
// Shifted zeros

nlohmann::json ShiftedZeroCheck::to_json() const {
  return {{"k", k},
          {"holds", holds},
          {"lower_margin", lower_margin.to_string(12)},
          {"upper_margin", upper_margin.to_string(12)},
          {"epsilon_decreasing", epsilon_decreasing},
          {"companion_holds", optional_json(companion_holds)},
          {"companion_alpha_k_holds", optional_json(companion_alpha_k_holds)}};
}

ShiftedZeroCheck verify_shifted_zero(const ZeroTable& table, long k) {
  if (k < 2) throw std::invalid_argument("shifted-zero check needs k >= 2");
  const ZeroRecord& previous = table.at(k - 1);
  const ZeroRecord& current = table.at(k);
  const Bits bits = std::max(previous.epsilon.precision(), current.epsilon.precision());
  const Real log_q = log(table.params.q(bits));

  ShiftedZeroCheck check;
  check.k = k;
  // q j_k / j_(k-1) = q^(eps_k - eps_(k-1)) and q j_k / q^(1-k) = q^(eps_k).
  check.lower_margin = expm1((current.epsilon - previous.epsilon) * log_q);
  check.upper_margin = -expm1(current.epsilon * log_q);
  check.holds = check.lower_margin > 0L && check.upper_margin > 0L;
  check.epsilon_decreasing = current.epsilon < previous.epsilon;
  if (k < table.size()) {
    const ZeroRecord& next = table.at(k + 1);
    const bool below_next = next.epsilon < current.epsilon;
    if (next.alpha) check.companion_holds = below_next && current.epsilon < *next.alpha;
    if (current.alpha) check.companion_alpha_k_holds = below_next && current.epsilon < *current.alpha;
  }
  return check;
}

// ---------------------------------------------------------------------------
// Derivative signs

nlohmann::json SignPattern::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const SignRow& r : rows) {
    rows_json.push_back(
        {{"m", r.m}, {"theta", r.theta.to_string(12)}, {"observed", r.observed}, {"predicted", r.predicted}});
  }
  return {{"target", target == SignTarget::bessel_derivative ? "bessel" : "phi11"},
          {"limit", limit == ThetaLimit::zero ? "zero" : "infinity"},
          {"rule", rule},
          {"series_base", target == SignTarget::bessel_derivative || phi11_base == Base::q_squared ? "q^2" : "q"},
          {"threshold", optional_json(threshold)},
          {"rows", std::move(rows_json)}};
}

int predicted_sign(SignTarget target, ThetaLimit limit, long m) {
  if (target == SignTarget::bessel_derivative) return limit == ThetaLimit::zero ? parity(m) : parity(m - 1);
  return limit == ThetaLimit::zero ? parity(m + 1) : parity(m);
}

SignPattern derivative_sign_pattern(const QParams& params, long m_lo, long m_hi, const ThetaRule& rule,
                                    ThetaLimit limit, SignTarget target, const PrecisionContext& ctx,
                                    Base phi11_base) {
  if (m_lo < 1 || m_hi < m_lo) throw std::invalid_argument("sign pattern needs 1 <= m_lo <= m_hi");
  const Bits bits = ctx.bits() + 64;
  const HahnExtonBessel bessel(params, Base::q_squared, ctx);
  // Lattice base of the evaluation points: q for J_nu(z; q^2), Q for 1phi1.
  const Real series_base = base_exact(params, phi11_base).rounded(bits);
  const Real q = target == SignTarget::bessel_derivative ? params.q(bits) : series_base;
  const Real log_q = log(q);
  const Real omega = pow(series_base, params.nu(bits) + 1L);
  const PrecisionContext sign_ctx = PrecisionContext::with_digits(30);
  auto alpha = [&](long m, Bits b) { return alpha_k(params, m, PrecisionContext::with_digits(digits_for_bits(b))); };

  SignPattern pattern{target, limit, rule.text(), phi11_base, {}, std::nullopt};
  for (long m = m_lo; m <= m_hi; ++m) {
    Real theta = rule(m, bits, alpha);
    if (!(theta >= 0L) || !(theta < 1L)) {
      throw DomainError("theta rule \"" + rule.text() + "\" leaves [0,1) at m = " + std::to_string(m));
    }
    const Real z = exp((theta - m) * log_q);
    const int observed = target == SignTarget::bessel_derivative ? bessel.derivative_sign(z)
                                                                 : phi11_derivative(omega, series_base, z, sign_ctx).value.sign();
    pattern.rows.push_back({m, std::move(theta), observed, predicted_sign(target, limit, m)});
  }
  for (auto it = pattern.rows.rbegin(); it != pattern.rows.rend() && it->observed == it->predicted; ++it) {
    pattern.threshold = it->m;
  }
  return pattern;
}

nlohmann::json SignConstancyReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const SignConstancyRow& r : rows) {
    rows_json.push_back({{"m", r.m},
                         {"theta_star", r.samples > 0 ? nlohmann::json(r.theta_star.to_string(12)) : nlohmann::json()},
                         {"samples", r.samples},
                         {"constant", r.constant},
                         {"sign", r.sign}});
  }
  return {{"rule", rule},
          {"all_constant", all_constant},
          {"adjacent_alternate", adjacent_alternate},
          {"rows", std::move(rows_json)}};
}

SignConstancyReport verify_sign_constancy(const QParams& params, long m_lo, long m_hi, const ThetaRule& theta_star,
                                          int samples_per_interval, const PrecisionContext& ctx) {
  if (m_lo < 1 || m_hi < m_lo) throw std::invalid_argument("sign constancy needs 1 <= m_lo <= m_hi");
  if (samples_per_interval < 1) throw std::invalid_argument("sign constancy needs at least one sample per interval");
  const Bits bits = ctx.bits() + 64;
  const Real log_q = log(params.q(bits));
  const HahnExtonBessel bessel(params, Base::q_squared, ctx);
  auto alpha = [&](long m, Bits b) { return alpha_k(params, m, PrecisionContext::with_digits(digits_for_bits(b))); };

  SignConstancyReport report{theta_star.text(), {}, true, true};
  for (long m = m_lo; m <= m_hi; ++m) {
    SignConstancyRow row;
    row.m = m;
    try {
      row.theta_star = theta_star(m, bits, alpha);
    } catch (const std::domain_error&) {
      report.rows.push_back(row);
      report.all_constant = false;
      continue;
    }
    if (!(row.theta_star > 0L) || !(row.theta_star < 1L)) {
      // No interval (q^(-m+theta*), q^(-m)) to sample; recorded like an undefined theta*.
      report.rows.push_back(row);
      report.all_constant = false;
      continue;
    }
    row.samples = samples_per_interval;
    row.constant = true;
    for (int i = 0; i < samples_per_interval; ++i) {
      // theta_i = theta* (n - i) / (n + 1) lies strictly inside (0, theta*).
      const Real theta = row.theta_star * static_cast<long>(samples_per_interval - i) / static_cast<long>(samples_per_interval + 1);
      const int s = bessel.derivative_sign(exp((theta - m) * log_q));
      if (i == 0) {
        row.sign = s;
      } else if (s != row.sign) {
        row.constant = false;
      }
    }
    if (!row.constant) row.sign = 0;
    report.all_constant = report.all_constant && row.constant;
    report.rows.push_back(std::move(row));
  }
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const auto& a = report.rows[i - 1];
    const auto& b = report.rows[i];
    if (!a.constant || !b.constant || a.sign != -b.sign) report.adjacent_alternate = false;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Decay bounds

nlohmann::json DecayRow::to_json() const {
  return {{"k", k},
          {"derivative_scaled", derivative_scaled.to_string(15)},
          {"shifted_value", shifted_value.to_string(15)},
          {"shifted_bound", shifted_bound.to_string(15)},
          {"lattice_value", lattice_value.to_string(15)},
          {"enlarged_bound_nu", enlarged_bound_nu.to_string(15)},
          {"enlarged_value_nu", enlarged_value_nu.to_string(15)},
          {"enlarged_bound_nu_plus_1", enlarged_bound_nu1.to_string(15)},
          {"enlarged_value_nu_plus_1", enlarged_value_nu1.to_string(15)},
          {"product_negative", product_negative}};
}

nlohmann::json DecayReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const DecayRow& r : rows) rows_json.push_back(r.to_json());
  return {{"bound_constant", bound_constant.to_string(20)}, {"rows", std::move(rows_json)}};
}

DecayReport verify_decay_bounds(const ZeroTable& table, long k_lo, long k_hi, const PrecisionContext& ctx) {
  if (k_lo < 1 || k_hi < k_lo) throw std::invalid_argument("decay bounds need 1 <= k_lo <= k_hi");
  const QParams& params = table.params;
  const Bits bits = ctx.bits() + 64;
  const Real q = params.q(bits);
  const Real nu = params.nu(bits);
  const Real q2 = square(q);
  const Real tol = pow(Real(2L, bits), -static_cast<long>(bits));
  const HahnExtonBessel bessel(params, Base::q_squared, ctx);
  const HahnExtonBessel bessel_next(params.with_order_shift(1), Base::q_squared, ctx);

  const Real q2_inf = qpochhammer_infinite(q2, q2, bits, tol, ctx.max_terms);
  DecayReport report;
  report.bound_constant = qpochhammer_infinite(-q2, q2, bits, tol, ctx.max_terms) *
                          qpochhammer_infinite(-pow(q2, nu + 1L), q2, bits, tol, ctx.max_terms) / q2_inf;
  auto enlarged_constant = [&](const Real& mu) {
    const Real half = mu / 2L;
    return pow(q, half * (half - 1L)) / ((1L - q2) * square(q2_inf));
  };
  const Real b_nu = enlarged_constant(nu);
  const Real b_nu1 = enlarged_constant(nu + 1L);

  for (long k = k_lo; k <= k_hi; ++k) {
    const ZeroRecord& r = table.at(k);
    const Bits zbits = r.j.precision();
    const Real qz = params.q(zbits);
    DecayRow row;
    row.k = k;
    const EvalResult derivative = bessel.derivative(r.j);
    row.derivative_scaled = abs(derivative.value) * pow(q, (nu + (k - 2)) * k);
    const Real shifted_arg = qz * r.j;
    const EvalResult shifted = bessel.value(shifted_arg);
    row.shifted_value = abs(shifted.value);
    row.shifted_bound = report.bound_constant * pow(q, (nu + k) * (k - 1));
    row.lattice_value = abs(bessel.value(pow(qz, 1 - k)).value);
    const Real eps = r.epsilon.rounded(bits);
    row.enlarged_bound_nu = b_nu * pow(q, -square(Real(k, bits) + (nu - 3L) / 2L - eps));
    row.enlarged_bound_nu1 = b_nu1 * pow(q, -square(Real(k, bits) + (nu - 2L) / 2L - eps));
    row.enlarged_value_nu = row.shifted_value;
    row.enlarged_value_nu1 = abs(bessel_next.value(shifted_arg).value);
    row.product_negative = shifted.value.sign() * derivative.value.sign() < 0;
    report.rows.push_back(std::move(row));
  }
  return report;
}

double bounded_trend(const std::vector<Real>& values) {
  if (values.size() < 2) return 1.0;
  const std::size_t half = values.size() / 2;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i].log10_abs();
    (i < half ? lower : upper) = std::max(i < half ? lower : upper, v);
  }
  return std::pow(10.0, upper - lower);
}

}  // namespace qfb
