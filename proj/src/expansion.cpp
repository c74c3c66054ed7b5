#include "qfb/expansion.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qfb {

namespace {

constexpr long kGuardBits = 32;
constexpr long kToleranceGuardDigits = 5;

Real infinity(Bits bits) {
  Real r(bits);
  mpfr_set_inf(r.get(), 1);
  return r;
}

long shown_digits(const PrecisionContext& ctx) { return ctx.digits; }

}  // namespace

// ---------------------------------------------------------------------------
// LatticeIntegrand

LatticeIntegrand::LatticeIntegrand(std::string name, Sampler sampler, std::optional<std::size_t> support)
    : name_(std::move(name)), sampler_(std::move(sampler)), support_(support) {}

LatticeIntegrand LatticeIntegrand::from_lattice(const LatticeFunction& f, const QParams& params) {
  if (f.base() != params.q_exact()) {
    throw BaseMismatchError("lattice function base " + f.base_text() + " differs from q = " + params.q_text());
  }
  auto shared = std::make_shared<const LatticeFunction>(f);
  return LatticeIntegrand(
      "lattice", [shared](std::size_t i, Bits bits) { return shared->at(i).rounded(bits); }, f.size());
}

LatticeIntegrand LatticeIntegrand::constant(const Real& c) {
  return LatticeIntegrand(
      c == 1L ? "one" : "constant:" + c.to_string(20), [c](std::size_t, Bits bits) { return c.rounded(bits); },
      std::nullopt);
}

LatticeIntegrand LatticeIntegrand::power(const QParams& params, const Real& s, std::string name) {
  return LatticeIntegrand(
      std::move(name),
      [params, s](std::size_t i, Bits bits) {
        return pow(params.q(bits), s.rounded(bits) * static_cast<long>(i));
      },
      std::nullopt);
}

Real LatticeIntegrand::at(std::size_t i, Bits bits) const {
  if (support_ && i >= *support_) return Real::zero(bits);
  return sampler_(i, bits);
}

// ---------------------------------------------------------------------------
// ModeSampler

ModeSampler::ModeSampler(HahnExtonBessel bessel, ZeroRecord record)
    : bessel_(std::move(bessel)),
      record_(std::move(record)),
      q_(bessel_.params().q(record_.j.precision())),
      next_argument_(q_ * record_.j) {}

const Real& ModeSampler::at(std::size_t i) {
  while (values_.size() <= i) {
    values_.push_back(bessel_.value(next_argument_).value);
    next_argument_ *= q_;
  }
  return values_[i];
}

// ---------------------------------------------------------------------------
// Lattice sums

LatticeSum lattice_sum(const QParams& params, const std::function<Real(std::size_t)>& g, std::size_t i_min,
                       std::optional<std::size_t> support, const PrecisionContext& ctx) {
  const Bits bits = ctx.bits() + kGuardBits;
  const Real q = params.q(bits);
  const Real tol = pow(Real(10L, bits), -(ctx.digits + kToleranceGuardDigits));
  CompensatedSum sum(bits);
  Real weight = 1L - q;
  LatticeSum result;

  if (support) {
    for (std::size_t i = 0; i < *support; ++i) {
      sum.add(weight * g(i));
      weight *= q;
    }
    result.value = sum.value().rounded(ctx.bits());
    result.terms = *support;
    result.tail_bound = Real::zero(ctx.bits());
    return result;
  }

  Real previous = Real::zero(bits);
  Real worst_ratio = Real::zero(bits);
  int small_run = 0;
  std::size_t i = 0;
  for (;; ++i) {
    if (i >= ctx.max_terms) {
      result.closed = false;
      break;
    }
    const Real term = weight * g(i);
    sum.add(term);
    const Real magnitude = abs(term);
    if (i >= i_min && magnitude <= tol * abs(sum.value())) {
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
    weight *= q;
  }
  result.value = sum.value().rounded(ctx.bits());
  result.terms = i + 1;
  if (!result.closed || !(worst_ratio < 1L)) {
    result.tail_bound = infinity(ctx.bits());
  } else {
    result.tail_bound = (previous * worst_ratio / (1L - worst_ratio)).rounded(ctx.bits());
  }
  return result;
}

const char* to_string(EtaMethod method) {
  switch (method) {
    case EtaMethod::integral: return "integral";
    case EtaMethod::closed_form_nu_plus_1: return "closed_form_nu_plus_1";
    case EtaMethod::closed_form_nu: return "closed_form_nu";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Reports

bool RiemannLebesgueReport::envelope_holds() const {
  for (const auto& r : rows) {
    if (!r.envelope_holds) return false;
  }
  return !rows.empty();
}

nlohmann::json RiemannLebesgueReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"m", r.m},
                         {"I_m", r.integral.to_string(30)},
                         {"scaled", r.scaled.to_string(15)},
                         {"envelope", r.envelope.to_string(15)},
                         {"envelope_holds", r.envelope_holds},
                         {"ratio", r.ratio ? nlohmann::json(r.ratio->to_string(15)) : nlohmann::json()}});
  }
  return {{"function", function},
          {"weighted_norm_squared", weighted_norm_squared.to_string(30)},
          {"integrable", integrable},
          {"sup_scaled", sup_scaled.to_string(15)},
          {"trend", trend},
          {"rows", std::move(rows_json)}};
}

std::string RiemannLebesgueReport::to_csv() const {
  std::ostringstream out;
  out << "m,abs_I_m,abs_I_m_scaled,envelope\r\n";
  for (const auto& r : rows) {
    out << r.m << ',' << abs(r.integral).to_string(20) << ',' << r.scaled.to_string(20) << ','
        << r.envelope.to_string(20) << "\r\n";
  }
  return out.str();
}

nlohmann::json ExpansionResult::to_json() const {
  const long d = digits;
  nlohmann::json modes_json = nlohmann::json::array();
  for (const auto& m : modes) {
    modes_json.push_back({{"k", m.k},
                          {"eta", m.eta.to_string(d)},
                          {"eta_closed_form_nu_plus_1", m.eta_closed_nu_plus_1.to_string(d)},
                          {"eta_closed_form_nu", m.eta_closed_nu.to_string(d)},
                          {"a", m.a.to_string(d)},
                          {"b", m.b.to_string(d)},
                          {"integral", m.integral.to_string(d)}});
  }
  nlohmann::json sums = nlohmann::json::array();
  for (std::size_t i = 0; i < partial_sums.size(); ++i) {
    sums.push_back({{"K", i + 1}, {"lattice", partial_sums[i].to_json()}});
  }
  nlohmann::json f_json = nlohmann::json::array();
  for (const auto& v : f_values) f_json.push_back(v.to_string(d));
  return {{"q", q_text},
          {"nu", nu_text},
          {"digits", digits},
          {"function", function},
          {"K", K},
          {"modes", std::move(modes_json)},
          {"points", points},
          {"f_values", std::move(f_json)},
          {"partial_sums", std::move(sums)},
          {"bessel_inequality",
           {{"sum", bessel_sum.to_string(d)}, {"bound", bessel_bound.to_string(d)}, {"holds", bessel_holds()}}},
          {"eta_trend", eta_trend}};
}

bool ExpansionResult::bessel_holds() const {
  // For complete expansions the two sides agree to working precision.
  const Real slack = pow(Real(10L, bessel_bound.precision()), -(digits - 10));
  return bessel_sum <= bessel_bound * (1L + slack);
}

std::string ExpansionResult::coefficients_csv() const {
  std::ostringstream out;
  out << "k,eta,a_k,b_k\r\n";
  for (const auto& m : modes) {
    out << m.k << ',' << m.eta.to_string(digits) << ',' << m.a.to_string(digits) << ',' << m.b.to_string(digits)
        << "\r\n";
  }
  return out.str();
}

std::string ExpansionResult::convergence_csv() const {
  std::ostringstream out;
  out << "j,x,f";
  for (std::size_t K = 1; K <= partial_sums.size(); ++K) out << ",S_" << K;
  out << "\r\n";
  const Real q = QParams(q_text, nu_text).q(bits_for_digits(30));
  Real x = Real::one(q.precision());
  for (std::size_t j = 0; j < points; ++j, x *= q) {
    out << j << ',' << x.to_string(30) << ',' << f_values[j].to_string(30);
    for (const auto& s : partial_sums) out << ',' << s.at(j).to_string(30);
    out << "\r\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// FourierBessel

FourierBessel::FourierBessel(ZeroTable zeros, PrecisionContext ctx)
    : zeros_(std::move(zeros)), ctx_(std::move(ctx)), bessel_(zeros_.params, Base::q_squared, ctx_) {}

void FourierBessel::require_mode(long k) const {
  if (k < 1 || k > available_modes()) {
    throw std::invalid_argument("mode " + std::to_string(k) + " requested but only " +
                                std::to_string(available_modes()) + " zeros are available");
  }
}

ModeSampler& FourierBessel::mode(long k) {
  require_mode(k);
  auto& slot = modes_[k];
  if (!slot) slot = std::make_unique<ModeSampler>(bessel_, zeros_.at(k));
  return *slot;
}

LatticeIntegrand FourierBessel::mode_function(long n) {
  ModeSampler* sampler = &mode(n);
  return LatticeIntegrand(
      "mode:" + std::to_string(n), [sampler](std::size_t i, Bits bits) { return sampler->at(i).rounded(bits); },
      std::nullopt);
}

Real FourierBessel::eta(long k, EtaMethod method) {
  require_mode(k);
  const auto key = std::pair{k, static_cast<int>(method)};
  if (auto it = eta_cache_.find(key); it != eta_cache_.end()) return it->second;

  const Bits bits = ctx_.bits() + kGuardBits;
  const QParams& p = params();
  const ZeroRecord& r = zeros_.at(k);
  Real value(bits);
  if (method == EtaMethod::integral) {
    ModeSampler& s = mode(k);
    const Real q = p.q(bits);
    Real t = Real::one(bits);
    value = lattice_sum(
                p,
                [&](std::size_t i) {
                  const Real term = t * square(s.at(i));
                  t *= q;
                  return term;
                },
                s.tail_start(), std::nullopt, ctx_)
                .value;
  } else {
    const Real q = p.q(bits);
    const Real nu = p.nu(bits);
    const Real shifted = p.q(r.j.precision()) * r.j;
    const Real derivative = bessel_.derivative(r.j).value;
    if (method == EtaMethod::closed_form_nu_plus_1) {
      const HahnExtonBessel next(p.with_order_shift(1), Base::q_squared, ctx_);
      value = (q - 1L) / 2L * pow(q, nu - 1L) * next.value(shifted).value * derivative;
    } else {
      value = (q - 1L) / (2L * r.j) * pow(q, nu - 2L) * bessel_.value(shifted).value * derivative;
    }
  }
  value = value.rounded(ctx_.bits());
  eta_cache_.emplace(key, value);
  return value;
}

Real FourierBessel::moment(long k, const LatticeIntegrand& f, const Real& weight) {
  ModeSampler& s = mode(k);
  const Bits bits = ctx_.bits() + kGuardBits;
  const Real step = pow(params().q(bits), weight.rounded(bits));
  Real t = Real::one(bits);
  return lattice_sum(
             params(),
             [&](std::size_t i) {
               const Real term = t * f.at(i, bits) * s.at(i);
               t *= step;
               return term;
             },
             s.tail_start(), f.support(), ctx_)
      .value;
}

Real FourierBessel::coefficient(long k, const LatticeIntegrand& f) {
  return moment(k, f, Real::one(64)) / eta(k);
}

Real FourierBessel::weighted_coefficient(long k, const LatticeIntegrand& f) {
  return moment(k, f, Real(1L, 64) / 2L) / eta(k);
}

std::vector<Real> FourierBessel::coefficients(const LatticeIntegrand& f, long K) {
  if (K > 0) require_mode(K);
  std::vector<Real> out;
  for (long k = 1; k <= K; ++k) out.push_back(coefficient(k, f));
  return out;
}

std::vector<Real> FourierBessel::partial_sum(const std::vector<Real>& coeffs, const std::vector<Real>& x, long K) {
  if (K < 0 || static_cast<std::size_t>(K) > coeffs.size()) throw std::invalid_argument("partial sum: K exceeds coefficients");
  if (K > 0) require_mode(K);
  const Bits bits = ctx_.bits() + kGuardBits;
  std::vector<Real> out;
  out.reserve(x.size());
  for (const Real& xi : x) {
    CompensatedSum sum(bits);
    for (long k = 1; k <= K; ++k) {
      const ZeroRecord& r = zeros_.at(k);
      const Bits zbits = std::max(r.j.precision(), xi.precision());
      const Real argument = params().q(zbits) * r.j * xi.rounded(zbits);
      sum.add(coeffs[static_cast<std::size_t>(k - 1)] * bessel_.value(argument).value);
    }
    out.push_back(sum.value().rounded(ctx_.bits()));
  }
  return out;
}

LatticeFunction FourierBessel::partial_sum_lattice(const std::vector<Real>& coeffs, std::size_t points, long K) {
  if (K < 0 || static_cast<std::size_t>(K) > coeffs.size()) throw std::invalid_argument("partial sum: K exceeds coefficients");
  if (points == 0) throw std::invalid_argument("partial sum needs at least one lattice point");
  const Bits bits = ctx_.bits() + kGuardBits;
  std::vector<Real> values;
  values.reserve(points);
  for (std::size_t j = 0; j < points; ++j) {
    CompensatedSum sum(bits);
    for (long k = 1; k <= K; ++k) sum.add(coeffs[static_cast<std::size_t>(k - 1)] * mode(k).at(j));
    values.push_back(sum.value().rounded(ctx_.bits()));
  }
  return LatticeFunction(params(), std::move(values));
}

std::vector<std::vector<Real>> FourierBessel::gram(long K) {
  if (K > 0) require_mode(K);
  const Bits bits = ctx_.bits() + kGuardBits;
  const Real q = params().q(bits);
  std::vector<std::vector<Real>> g(static_cast<std::size_t>(K), std::vector<Real>(static_cast<std::size_t>(K)));
  for (long n = 1; n <= K; ++n) {
    for (long m = n; m <= K; ++m) {
      ModeSampler& a = mode(n);
      ModeSampler& b = mode(m);
      Real t = Real::one(bits);
      const Real integral = lattice_sum(
                                params(),
                                [&](std::size_t i) {
                                  const Real term = t * a.at(i) * b.at(i);
                                  t *= q;
                                  return term;
                                },
                                std::max(a.tail_start(), b.tail_start()), std::nullopt, ctx_)
                                .value;
      const Real entry = integral / sqrt(eta(n) * eta(m));
      g[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(m - 1)] = entry;
      g[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(n - 1)] = entry;
    }
  }
  return g;
}

LatticeSum FourierBessel::weighted_norm_squared(const LatticeIntegrand& f) {
  const Bits bits = ctx_.bits() + kGuardBits;
  const Real q = params().q(bits);
  Real t = Real::one(bits);
  // A divergent integral (t f^2 not summable) must not run to max_terms.
  PrecisionContext capped = ctx_;
  capped.max_terms = std::min<std::size_t>(ctx_.max_terms, 200'000);
  return lattice_sum(
      params(),
      [&](std::size_t i) {
        const Real term = t * square(f.at(i, bits));
        t *= q;
        return term;
      },
      0, f.support(), capped);
}

RiemannLebesgueReport FourierBessel::riemann_lebesgue(const LatticeIntegrand& f, long m_lo, long m_hi) {
  if (m_lo < 1 || m_hi < m_lo) throw std::invalid_argument("Riemann-Lebesgue report needs 1 <= m_lo <= m_hi");
  require_mode(m_hi);
  const Bits bits = ctx_.bits();
  const Real q = params().q(bits);
  RiemannLebesgueReport report;
  report.function = f.name();
  const LatticeSum norm = weighted_norm_squared(f);
  report.integrable = norm.closed;
  report.weighted_norm_squared = norm.closed ? norm.value : infinity(bits);
  report.sup_scaled = Real::zero(bits);
  std::vector<Real> scaled;
  for (long m = m_lo; m <= m_hi; ++m) {
    RiemannLebesgueRow row;
    row.m = m;
    row.integral = moment(m, f, Real::one(64));
    row.scaled = abs(row.integral) * pow(q, -m);
    row.envelope = report.integrable ? sqrt(report.weighted_norm_squared * eta(m)) : infinity(bits);
    row.envelope_holds = report.integrable && abs(row.integral) <= row.envelope;
    if (!report.rows.empty() && !report.rows.back().integral.is_zero()) {
      row.ratio = abs(row.integral / report.rows.back().integral);
    }
    report.sup_scaled = max(report.sup_scaled, row.scaled);
    scaled.push_back(row.scaled);
    report.rows.push_back(std::move(row));
  }
  report.trend = bounded_trend(scaled);
  return report;
}

ExpansionResult FourierBessel::expand(const LatticeIntegrand& f, long K, std::size_t points) {
  if (K < 0) throw std::invalid_argument("K must be >= 0");
  if (K > available_modes()) {
    throw std::invalid_argument("K = " + std::to_string(K) + " exceeds the " + std::to_string(available_modes()) +
                                " available zeros");
  }
  if (points == 0) throw std::invalid_argument("expansion needs at least one lattice point");
  const Bits bits = ctx_.bits();
  const Real q = params().q(bits);
  ExpansionResult result;
  result.q_text = params().q_text();
  result.nu_text = params().nu_text();
  result.digits = shown_digits(ctx_);
  result.function = f.name();
  result.K = K;
  result.points = points;

  std::vector<Real> coeffs;
  std::vector<Real> eta_scaled;
  CompensatedSum bessel(bits + kGuardBits);
  for (long k = 1; k <= K; ++k) {
    ExpansionMode m;
    m.k = k;
    m.eta = eta(k, EtaMethod::integral);
    m.eta_closed_nu_plus_1 = eta(k, EtaMethod::closed_form_nu_plus_1);
    m.eta_closed_nu = eta(k, EtaMethod::closed_form_nu);
    m.integral = moment(k, f, Real::one(64));
    m.a = m.integral / m.eta;
    m.b = weighted_coefficient(k, f);
    bessel.add(square(m.a) * m.eta);
    eta_scaled.push_back(m.eta * pow(q, -2 * k));
    coeffs.push_back(m.a);
    result.modes.push_back(std::move(m));
  }
  result.eta_trend = bounded_trend(eta_scaled);
  result.bessel_sum = bessel.value().rounded(bits);
  const LatticeSum norm = weighted_norm_squared(f);
  result.bessel_bound = norm.closed ? norm.value : infinity(bits);

  for (std::size_t j = 0; j < points; ++j) result.f_values.push_back(f.at(j, bits));
  for (long k = 1; k <= K; ++k) result.partial_sums.push_back(partial_sum_lattice(coeffs, points, k));
  return result;
}

// ---------------------------------------------------------------------------
// Single-call forms

namespace {

ZeroTable single_record_table(const QParams& params, const ZeroRecord& record, long digits) {
  // Mode k only needs its own zero; earlier slots are never sampled.
  ZeroTable table{params, digits, std::vector<ZeroRecord>(static_cast<std::size_t>(record.k)), std::nullopt};
  table.records.back() = record;
  return table;
}

}  // namespace

Real eta_k(const QParams& params, const ZeroRecord& record, const PrecisionContext& ctx, EtaMethod method) {
  FourierBessel engine(single_record_table(params, record, ctx.digits), ctx);
  return engine.eta(record.k, method);
}

Real coefficient(const QParams& params, const LatticeIntegrand& f, const ZeroRecord& record, const Real& eta,
                 const PrecisionContext& ctx) {
  if (!(eta > 0L)) throw DomainError("coefficient: eta_k must be positive");
  FourierBessel engine(single_record_table(params, record, ctx.digits), ctx);
  return engine.moment(record.k, f, Real::one(64)) / eta;
}

std::vector<Real> partial_sum(const ZeroTable& zeros, const std::vector<Real>& coeffs, const std::vector<Real>& x,
                              long K, const PrecisionContext& ctx) {
  FourierBessel engine(zeros, ctx);
  return engine.partial_sum(coeffs, x, K);
}

std::vector<std::vector<Real>> gram_matrix(const ZeroTable& zeros, long K, const PrecisionContext& ctx) {
  FourierBessel engine(zeros, ctx);
  return engine.gram(K);
}

RiemannLebesgueReport riemann_lebesgue_rate(const ZeroTable& zeros, const LatticeIntegrand& f, long m_lo, long m_hi,
                                            const PrecisionContext& ctx) {
  FourierBessel engine(zeros, ctx);
  return engine.riemann_lebesgue(f, m_lo, m_hi);
}

std::optional<LatticeIntegrand> builtin_integrand(const std::string& spec, const QParams& params,
                                                  FourierBessel* engine, Bits bits) {
  if (spec == "one") return LatticeIntegrand::constant(Real::one(bits));
  if (spec == "zero") return LatticeIntegrand::constant(Real::zero(bits));
  if (spec.rfind("constant:", 0) == 0) return LatticeIntegrand::constant(Real::parse(spec.substr(9), bits));
  if (spec.rfind("power:", 0) == 0) return LatticeIntegrand::power(params, Real::parse(spec.substr(6), bits), spec);
  if (spec.rfind("mode:", 0) == 0) {
    if (engine == nullptr) throw std::invalid_argument("mode:<n> needs an expansion engine");
    std::size_t used = 0;
    long n = 0;
    try {
      n = std::stol(spec.substr(5), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != spec.size() - 5) throw std::invalid_argument("mode:<n> needs an integer n, got '" + spec + "'");
    return engine->mode_function(n);
  }
  return std::nullopt;
}

std::string gram_csv(const std::vector<std::vector<Real>>& gram, long digits) {
  std::ostringstream out;
  out << "n";
  for (std::size_t m = 1; m <= gram.size(); ++m) out << ",G_" << m;
  out << "\r\n";
  for (std::size_t n = 0; n < gram.size(); ++n) {
    out << n + 1;
    for (const Real& v : gram[n]) out << ',' << v.to_string(digits);
    out << "\r\n";
  }
  return out.str();
}

}  // namespace qfb
