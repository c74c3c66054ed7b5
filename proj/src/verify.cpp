#include "qfb/verify.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qfb {

namespace {

const std::map<std::string, std::string>& anchors() {
  static const std::map<std::string, std::string> table = {
      {"consistency", "series and 1phi1 forms agree; q-integral of t^s; three forms of the norm eta_k"},
      {"derivative-decay", "J' at the k-th zero is O(q^(-k(k+nu-2)))"},
      {"eta-decay", "eta_m = O(q^(2m)) and the basis norm is O(q^m)"},
      {"gram", "orthonormality of t^(1/2) J_nu(q j_m t; q^2) / sqrt(eta_m)"},
      {"riemann-lebesgue", "coefficient integrals are O(q^m) when t^(1/2) f is square integrable"},
      {"shifted-value-bound", "|J_nu(q j_k; q^2)| <= C q^((k+nu)(k-1)) and the same bound on the lattice"},
      {"shifted-zeros", "zeros lie in (q^(-k+alpha_k), q^(-k)) and q j_k lies in (j_(k-1), q^(1-k))"},
      {"sign-constancy", "J' keeps one sign on (q^(-m+alpha_m), q^(-m)), alternating in m"},
      {"signs", "sign of J' and of the 1phi1 derivative at q^(-m+theta_m)"},
  };
  return table;
}

std::string fmt(const Real& x) { return x.to_string(6); }

std::string fmt_log(const Real& x) {
  if (x.is_zero()) return "0";
  std::ostringstream out;
  out << "1e" << static_cast<long>(std::floor(x.log10_abs()));
  return out.str();
}

Real ten_to(long exponent, Bits bits) { return pow(Real(10L, bits), exponent); }

/// First index from which every flag up to the end is true.
std::optional<long> threshold_of(const std::vector<std::pair<long, bool>>& flags) {
  std::optional<long> threshold;
  for (auto it = flags.rbegin(); it != flags.rend(); ++it) {
    if (!it->second) break;
    threshold = it->first;
  }
  return threshold;
}

/// Lazily built state shared by the checks of one run.
class Session {
 public:
  explicit Session(const VerifyConfig& config) : config_(config) {}

  const VerifyConfig& config() const { return config_; }
  const QParams& params() const { return config_.params; }
  const PrecisionContext& ctx() const { return config_.ctx; }

  const ZeroTable& zeros() {
    if (!zeros_) zeros_ = std::make_unique<ZeroTable>(compute_zeros(params(), config_.k_max, ctx()));
    return *zeros_;
  }

  FourierBessel& engine() {
    if (!engine_) engine_ = std::make_unique<FourierBessel>(zeros(), ctx());
    return *engine_;
  }

  const DecayReport& decay() {
    if (!decay_) decay_ = std::make_unique<DecayReport>(verify_decay_bounds(zeros(), 1, config_.k_max, ctx()));
    return *decay_;
  }

 private:
  const VerifyConfig& config_;
  std::unique_ptr<ZeroTable> zeros_;
  std::unique_ptr<FourierBessel> engine_;
  std::unique_ptr<DecayReport> decay_;
};

class RowSink {
 public:
  RowSink(std::vector<CheckRow>& rows, std::string check) : rows_(rows), check_(std::move(check)) {}

  CheckRow& add(nlohmann::json parameters, std::string margin, CheckStatus status,
                std::optional<long> threshold = std::nullopt) {
    CheckRow row;
    row.check = check_;
    row.index = next_++;
    row.anchor = check_anchor(check_);
    row.parameters = std::move(parameters);
    row.margin = std::move(margin);
    row.threshold = threshold;
    row.status = status;
    rows_.push_back(std::move(row));
    return rows_.back();
  }

 private:
  std::vector<CheckRow>& rows_;
  std::string check_;
  long next_ = 0;
};

CheckStatus pass_if(bool ok) { return ok ? CheckStatus::pass : CheckStatus::fail; }

// ---------------------------------------------------------------------------

void check_signs(Session& s, RowSink& out) {
  const auto& c = s.config();
  const long m_lo = 2;
  const long m_hi = std::max(c.k_max, m_lo);
  const long limit = std::min(c.sign_threshold_limit, m_hi);
  struct Case {
    SignTarget target;
    ThetaLimit limit;
    const std::string* rule;
    Base base;
    bool required;
  };
  const std::vector<Case> cases = {
      {SignTarget::bessel_derivative, ThetaLimit::zero, &c.theta_zero_rule, Base::q_squared, true},
      {SignTarget::bessel_derivative, ThetaLimit::infinity, &c.theta_inf_rule, Base::q_squared, true},
      {SignTarget::phi11_derivative, ThetaLimit::zero, &c.theta_zero_rule, Base::q_squared, true},
      {SignTarget::phi11_derivative, ThetaLimit::infinity, &c.theta_inf_rule, Base::q_squared, true},
      {SignTarget::phi11_derivative, ThetaLimit::zero, &c.theta_zero_rule, Base::q, false},
      {SignTarget::phi11_derivative, ThetaLimit::infinity, &c.theta_inf_rule, Base::q, false},
  };
  for (const Case& k : cases) {
    const ThetaRule rule(*k.rule);
    const SignPattern p = derivative_sign_pattern(s.params(), m_lo, m_hi, rule, k.limit, k.target, s.ctx(), k.base);
    long mismatches = 0;
    for (const auto& r : p.rows) mismatches += r.observed != r.predicted;
    nlohmann::json params = {{"target", k.target == SignTarget::bessel_derivative ? "bessel_derivative" : "phi11_derivative"},
                             {"limit", k.limit == ThetaLimit::zero ? "m*theta_m -> 0" : "m*theta_m -> infinity"},
                             {"rule", rule.text()},
                             {"m_range", {m_lo, m_hi}}};
    if (k.target == SignTarget::phi11_derivative) params["series_base"] = k.base == Base::q ? "q" : "q^2";
    std::string margin = p.threshold ? "matches from m=" + std::to_string(*p.threshold) : "no matching tail";
    margin += "; mismatches=" + std::to_string(mismatches);
    const bool ok = p.threshold && *p.threshold <= limit;
    out.add(std::move(params), margin, k.required ? pass_if(ok) : CheckStatus::reported, p.threshold);
  }
}

void check_sign_constancy(Session& s, RowSink& out) {
  const auto& c = s.config();
  const long m_lo = 2;
  const long m_hi = std::max(c.k_max, m_lo);
  const ThetaRule rule(c.theta_star_rule);
  const SignConstancyReport report =
      verify_sign_constancy(s.params(), m_lo, m_hi, rule, c.constancy_samples, s.ctx());
  std::vector<std::pair<long, bool>> flags;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    const bool alternates = i + 1 >= report.rows.size() ||
                            (report.rows[i + 1].constant && r.constant && report.rows[i + 1].sign == -r.sign);
    flags.emplace_back(r.m, r.samples > 0 && r.constant && alternates);
    out.add({{"m", r.m}, {"samples", r.samples}, {"theta_star", r.samples > 0 ? r.theta_star.to_string(8) : "undefined"}},
            r.samples == 0 ? "theta* undefined" : (r.constant ? "constant sign " + std::to_string(r.sign) : "sign changes"),
            CheckStatus::reported);
  }
  const auto threshold = threshold_of(flags);
  const long limit = std::min(c.sign_threshold_limit, m_hi);
  out.add({{"rule", rule.text()}, {"samples", c.constancy_samples}, {"m_range", {m_lo, m_hi}}},
          threshold ? "constant and alternating from m=" + std::to_string(*threshold) : "no constant tail",
          pass_if(threshold && *threshold <= limit), threshold);
}

void check_shifted_zeros(Session& s, RowSink& out) {
  const auto& c = s.config();
  if (c.k_max < 1) {
    out.add({{"k_max", c.k_max}}, "no zeros requested", CheckStatus::reported);
    return;
  }
  const ZeroTable& t = s.zeros();
  out.add({{"property", "asymptotic bracket isolates j_k from k0"}, {"k_max", c.k_max}},
          t.k0 ? "k0=" + std::to_string(*t.k0) : "bracket never isolates the tail",
          pass_if(t.k0 && *t.k0 <= c.k0_limit), t.k0);

  for (long k = 1; k <= t.size(); ++k) {
    const ZeroRecord& r = t.at(k);
    const bool inside = r.alpha && r.epsilon > 0L && r.epsilon < *r.alpha;
    const bool required = t.k0 && k >= *t.k0;
    std::string margin = r.alpha ? "epsilon/alpha=" + fmt(r.epsilon / *r.alpha) : "alpha undefined";
    out.add({{"property", "0 < epsilon_k < alpha_k"}, {"k", k}}, margin,
            required ? pass_if(inside) : CheckStatus::reported);
  }

  std::vector<std::pair<long, bool>> companion;
  for (long k = 2; k <= t.size(); ++k) {
    const ShiftedZeroCheck chk = verify_shifted_zero(t, k);
    out.add({{"property", "j_(k-1) < q j_k < q^(1-k)"}, {"k", k}},
            "lower=" + fmt(chk.lower_margin) + "; upper=" + fmt(chk.upper_margin), pass_if(chk.holds));
    out.add({{"property", "epsilon_k < epsilon_(k-1)"}, {"k", k}},
            "epsilon_k/epsilon_(k-1)=" + fmt(t.at(k).epsilon / t.at(k - 1).epsilon), pass_if(chk.epsilon_decreasing));
    if (chk.companion_holds) companion.emplace_back(k, *chk.companion_holds);
  }
  for (const auto& [k, holds] : companion) {
    out.add({{"property", "q^(-k-1+alpha_(k+1)) < j_k/q < j_(k+1)"}, {"k", k}}, holds ? "inside" : "outside",
            CheckStatus::reported);
  }
  if (!companion.empty()) {
    const auto threshold = threshold_of(companion);
    out.add({{"property", "j_k/q location holds from a threshold"}, {"k_range", {companion.front().first, companion.back().first}}},
            threshold ? "holds from k=" + std::to_string(*threshold) : "fails at the largest k",
            pass_if(threshold && *threshold <= c.k0_limit), threshold);
  }

  const long census_k = std::min<long>(6, c.k_max);
  const Bits bits = s.ctx().bits();
  const Real upper = pow(s.params().q(bits), -census_k);
  long below = 0;
  for (const auto& r : t.records) below += r.j < upper;
  const PrecisionContext census_ctx = PrecisionContext::with_digits(30);
  const long census = zero_census(s.params(), upper, census_ctx);
  out.add({{"property", "dense-scan census of zeros below q^-K"}, {"K", census_k}, {"grid_ratio", "1.001"}},
          "census=" + std::to_string(census) + "; table=" + std::to_string(below), pass_if(census == below));
}

void check_derivative_decay(Session& s, RowSink& out) {
  const auto& c = s.config();
  const long k_lo = 4;
  if (c.k_max < k_lo) {
    out.add({{"k_max", c.k_max}}, "range 4..k_max is empty", CheckStatus::reported);
    return;
  }
  const DecayReport& d = s.decay();
  std::vector<Real> scaled;
  Real sup = Real::zero(64);
  for (const auto& r : d.rows) {
    if (r.k < k_lo) continue;
    scaled.push_back(r.derivative_scaled);
    sup = max(sup, r.derivative_scaled);
    out.add({{"k", r.k}}, "|J'(j_k)| q^(k(k+nu-2))=" + fmt(r.derivative_scaled), CheckStatus::reported);
  }
  PrecisionContext doubled = PrecisionContext::with_digits(2 * s.ctx().digits);
  doubled.max_terms = s.ctx().max_terms;
  const ZeroTable fine = compute_zeros(s.params(), c.k_max, doubled);
  const DecayReport fine_decay = verify_decay_bounds(fine, k_lo, c.k_max, doubled);
  Real sup_fine = Real::zero(64);
  for (const auto& r : fine_decay.rows) sup_fine = max(sup_fine, r.derivative_scaled);
  const double trend = bounded_trend(scaled);
  const Real slack = ten_to(-s.ctx().digits / 2, sup.precision());
  const bool ok = sup.is_finite() && sup_fine <= sup * (1L + slack) && trend <= c.trend_limit;
  std::ostringstream margin;
  margin << "sup=" << fmt(sup) << "; sup at " << doubled.digits << " digits=" << fmt(sup_fine) << "; trend=" << trend;
  out.add({{"k_range", {k_lo, c.k_max}}, {"digits", s.ctx().digits}, {"doubled_digits", doubled.digits}}, margin.str(),
          pass_if(ok));
}

void check_shifted_value_bound(Session& s, RowSink& out) {
  const auto& c = s.config();
  if (c.k_max < 1) {
    out.add({{"k_max", c.k_max}}, "no zeros requested", CheckStatus::reported);
    return;
  }
  const DecayReport& d = s.decay();
  for (const auto& r : d.rows) {
    if (r.k >= 4) {
      out.add({{"property", "|J(q j_k)| <= C q^((k+nu)(k-1))"}, {"k", r.k}},
              "value/bound=" + fmt(r.shifted_value / r.shifted_bound), pass_if(r.shifted_value <= r.shifted_bound));
    }
    if (r.k >= 2) {
      out.add({{"property", "|J(q^(1-k))| <= C q^((k+nu)(k-1))"}, {"k", r.k}},
              "value/bound=" + fmt(r.lattice_value / r.shifted_bound), pass_if(r.lattice_value <= r.shifted_bound));
    }
    out.add({{"property", "J(q j_k) J'(j_k) < 0"}, {"k", r.k}}, r.product_negative ? "negative" : "not negative",
            pass_if(r.product_negative));
    out.add({{"property", "enlarged bound B_mu(q) q^(-(k+(mu-3)/2-epsilon_k)^2)"}, {"k", r.k}},
            "nu: value/bound=" + fmt(r.enlarged_value_nu / r.enlarged_bound_nu) +
                "; nu+1: value/bound=" + fmt(r.enlarged_value_nu1 / r.enlarged_bound_nu1),
            CheckStatus::reported);
  }
}

void check_eta_decay(Session& s, RowSink& out) {
  const auto& c = s.config();
  if (c.k_max < 1) {
    out.add({{"k_max", c.k_max}}, "no zeros requested", CheckStatus::reported);
    return;
  }
  FourierBessel& e = s.engine();
  const Bits bits = s.ctx().bits();
  const Real q = s.params().q(bits);
  std::vector<Real> scaled;
  std::vector<Real> root_scaled;
  Real sup = Real::zero(bits);
  Real sup_root = Real::zero(bits);
  for (long m = 1; m <= c.k_max; ++m) {
    const Real eta = e.eta(m);
    const Real a = eta * pow(q, -2 * m);
    const Real b = sqrt(eta) * pow(q, -m);
    scaled.push_back(a);
    root_scaled.push_back(b);
    sup = max(sup, a);
    sup_root = max(sup_root, b);
    out.add({{"m", m}}, "eta_m q^(-2m)=" + fmt(a) + "; sqrt(eta_m) q^(-m)=" + fmt(b), CheckStatus::reported);
  }
  const double trend = bounded_trend(scaled);
  const double root_trend = bounded_trend(root_scaled);
  std::ostringstream margin;
  margin << "sup eta_m q^(-2m)=" << fmt(sup) << "; trend=" << trend;
  out.add({{"property", "sup eta_m q^(-2m) finite"}, {"m_range", {1, c.k_max}}}, margin.str(),
          pass_if(sup.is_finite() && trend <= c.trend_limit));
  std::ostringstream root_margin;
  root_margin << "sup sqrt(eta_m) q^(-m)=" << fmt(sup_root) << "; trend=" << root_trend;
  out.add({{"property", "sqrt(eta_m) q^(-m) bounded"}, {"m_range", {1, c.k_max}}}, root_margin.str(),
          pass_if(sup_root.is_finite() && root_trend <= c.trend_limit));
}

void check_gram(Session& s, RowSink& out) {
  const auto& c = s.config();
  const long K = std::min(c.gram_K, c.k_max);
  if (K < 1) {
    out.add({{"K", K}}, "no modes available", CheckStatus::reported);
    return;
  }
  const auto G = s.engine().gram(K);
  Real worst = Real::zero(64);
  for (long n = 0; n < K; ++n) {
    Real row_worst = Real::zero(64);
    for (long m = 0; m < K; ++m) {
      const Real residual = abs(G[n][m] - (n == m ? 1L : 0L));
      row_worst = max(row_worst, residual);
    }
    worst = max(worst, row_worst);
    out.add({{"n", n + 1}}, "max_m |G[n][m] - delta|=" + fmt(row_worst), CheckStatus::reported);
  }
  out.add({{"K", K}, {"tolerance", c.tolerance.to_string(3)}}, "max |G - I|=" + fmt(worst),
          pass_if(worst < c.tolerance));
}

void check_riemann_lebesgue(Session& s, RowSink& out) {
  const auto& c = s.config();
  if (c.k_max < 1) {
    out.add({{"k_max", c.k_max}}, "no zeros requested", CheckStatus::reported);
    return;
  }
  std::vector<LatticeIntegrand> functions = c.functions;
  if (functions.empty()) {
    functions.push_back(LatticeIntegrand::constant(Real::one(64)));
    functions.push_back(LatticeIntegrand::power(s.params(), Real::parse("-0.25", 64), "power:-0.25"));
  }
  for (const auto& f : functions) {
    const RiemannLebesgueReport r = s.engine().riemann_lebesgue(f, 1, c.k_max);
    for (const auto& row : r.rows) {
      out.add({{"function", f.name()}, {"m", row.m}},
              "|I_m|=" + fmt(abs(row.integral)) + "; |I_m| q^(-m)=" + fmt(row.scaled) + "; envelope=" + fmt(row.envelope),
              r.integrable ? pass_if(row.envelope_holds) : CheckStatus::reported);
    }
    std::ostringstream margin;
    margin << "sup |I_m| q^(-m)=" << fmt(r.sup_scaled) << "; trend=" << r.trend
           << "; integral of t f^2=" << (r.integrable ? fmt(r.weighted_norm_squared) : std::string("divergent"));
    const bool bounded = r.sup_scaled.is_finite() && r.trend <= c.trend_limit;
    // Outside the square-integrable class the decay is only reported.
    out.add({{"function", f.name()}, {"property", "sup |I_m| q^(-m) finite"}, {"m_range", {1, c.k_max}},
             {"integrable", r.integrable}},
            margin.str(), r.integrable ? pass_if(bounded) : CheckStatus::reported);
  }
}

void check_consistency(Session& s, RowSink& out) {
  const auto& c = s.config();
  const PrecisionContext& ctx = s.ctx();
  const Bits bits = ctx.bits();
  const Real q = s.params().q(bits);

  const long route_digits = std::min<long>(60, ctx.digits / 2);
  const Real route_tol = ten_to(-route_digits, bits);
  const std::vector<std::pair<std::string, Real>> grid = {
      {"0.1", Real::parse("0.1", bits)}, {"1", Real::one(bits)}, {"q^-3", pow(q, -3)}, {"q^-6", pow(q, -6)}};
  const HahnExtonBessel bessel(s.params(), Base::q_squared, ctx);
  for (const auto& [label, z] : grid) {
    const Real direct = bessel.value(z).value;
    const Real route = jnu3_via_phi11(s.params(), z, ctx).value;
    const Real rel = abs(direct - route) / abs(direct);
    out.add({{"property", "series form = 1phi1 form"}, {"z", label}, {"tolerance", "1e-" + std::to_string(route_digits)}},
            "relative difference=" + fmt_log(rel), pass_if(rel < route_tol));
  }

  const long integral_digits = std::min<long>(100, ctx.digits - 20);
  const Real integral_tol = ten_to(-integral_digits, bits);
  for (long sp : {0L, 1L, 2L, 3L, 7L}) {
    const auto result = qintegral_01([sp](const Real& t) { return pow(t, sp); }, q, ctx);
    const Real exact = (1L - q) / (1L - pow(q, sp + 1));
    const Real rel = abs(result.value - exact) / exact;
    out.add({{"property", "q-integral of t^s"}, {"s", sp}, {"tolerance", "1e-" + std::to_string(integral_digits)}},
            "relative difference=" + fmt_log(rel), pass_if(rel < integral_tol));
  }

  const long K = std::min(c.eta_K, c.k_max);
  if (K < 1) return;
  FourierBessel& e = s.engine();
  const HahnExtonBessel next(s.params().with_order_shift(1), Base::q_squared, ctx);
  for (long k = 1; k <= K; ++k) {
    const Real a = e.eta(k, EtaMethod::integral);
    const Real b = e.eta(k, EtaMethod::closed_form_nu_plus_1);
    const Real d = e.eta(k, EtaMethod::closed_form_nu);
    const Real rel = max(abs(a - b), abs(a - d)) / abs(a);
    out.add({{"property", "three forms of eta_k agree and eta_k > 0"}, {"k", k}, {"tolerance", c.tolerance.to_string(3)}},
            "eta_k=" + fmt(a) + "; relative spread=" + fmt_log(rel), pass_if(a > 0L && rel < c.tolerance));

    const ZeroRecord& r = e.zeros().at(k);
    const Real shifted = s.params().q(r.j.precision()) * r.j;
    const Real lhs = next.value(shifted).value;
    const Real rhs = bessel.value(shifted).value / shifted;
    const Real rel_rec = abs(lhs - rhs) / abs(rhs);
    out.add({{"property", "J_(nu+1)(q j_k) = J_nu(q j_k) / (q j_k)"}, {"k", k}, {"tolerance", c.tolerance.to_string(3)}},
            "relative difference=" + fmt_log(rel_rec), pass_if(rel_rec < c.tolerance));
  }
}

using CheckFn = void (*)(Session&, RowSink&);

const std::map<std::string, CheckFn>& check_functions() {
  static const std::map<std::string, CheckFn> table = {
      {"consistency", check_consistency},
      {"derivative-decay", check_derivative_decay},
      {"eta-decay", check_eta_decay},
      {"gram", check_gram},
      {"riemann-lebesgue", check_riemann_lebesgue},
      {"shifted-value-bound", check_shifted_value_bound},
      {"shifted-zeros", check_shifted_zeros},
      {"sign-constancy", check_sign_constancy},
      {"signs", check_signs},
  };
  return table;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

const char* to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::reported: return "reported";
  }
  return "?";
}

const std::vector<std::string>& check_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const auto& [id, fn] : check_functions()) v.push_back(id);
    return v;
  }();
  return ids;
}

const std::string& check_anchor(const std::string& check) {
  const auto it = anchors().find(check);
  if (it == anchors().end()) throw std::invalid_argument("unknown check id '" + check + "'");
  return it->second;
}

bool VerificationReport::passed() const { return count(CheckStatus::fail) == 0; }

std::size_t VerificationReport::count(CheckStatus status) const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [status](const CheckRow& r) { return r.status == status; }));
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& r : rows) {
    checks.push_back({{"check", r.check},
                      {"index", r.index},
                      {"anchor", r.anchor},
                      {"parameters", r.parameters},
                      {"margin", r.margin},
                      {"threshold", r.threshold ? nlohmann::json(*r.threshold) : nlohmann::json()},
                      {"status", to_string(r.status)}});
  }
  return {{"q", q_text},
          {"nu", nu_text},
          {"digits", digits},
          {"k_max", k_max},
          {"rows", std::move(checks)},
          {"summary",
           {{"pass", count(CheckStatus::pass)},
            {"fail", count(CheckStatus::fail)},
            {"reported", count(CheckStatus::reported)},
            {"passed", passed()}}}};
}

std::string VerificationReport::to_csv() const {
  std::ostringstream out;
  out << "check,index,anchor,parameters,margin,threshold,status\r\n";
  for (const auto& r : rows) {
    out << csv_field(r.check) << ',' << r.index << ',' << csv_field(r.anchor) << ',' << csv_field(r.parameters.dump())
        << ',' << csv_field(r.margin) << ',' << (r.threshold ? std::to_string(*r.threshold) : std::string()) << ','
        << to_string(r.status) << "\r\n";
  }
  return out.str();
}

VerificationReport run_verification(const VerifyConfig& config, const std::vector<std::string>& checks) {
  std::set<std::string> selected;
  for (const auto& id : checks) {
    check_anchor(id);
    selected.insert(id);
  }
  if (selected.empty()) selected.insert(check_ids().begin(), check_ids().end());
  if (config.k_max < 0) throw std::invalid_argument("k_max must be >= 0");
  config.ctx.validate();

  VerificationReport report;
  report.q_text = config.params.q_text();
  report.nu_text = config.params.nu_text();
  report.digits = config.ctx.digits;
  report.k_max = config.k_max;
  Session session(config);
  // std::set iterates in id order, which is the canonical row order.
  for (const auto& id : selected) {
    RowSink sink(report.rows, id);
    check_functions().at(id)(session, sink);
  }
  return report;
}

EvalResult jnu3_via_phi11(const QParams& params, const Real& z, const PrecisionContext& ctx) {
  if (z < 0L) throw DomainError("jnu3_via_phi11 needs z >= 0");
  const Bits bits = std::max<Bits>(ctx.bits() + 64, z.precision());
  const Real q2 = square(params.q(bits));
  const Real nu = params.nu(bits);
  const Real omega = pow(q2, nu + 1L);
  const Real tol = pow(Real(2L, bits), -static_cast<long>(bits));
  const Real prefactor =
      qpochhammer_infinite(omega, q2, bits, tol, ctx.max_terms) / qpochhammer_infinite(q2, q2, bits, tol, ctx.max_terms);
  const Real zb = z.rounded(bits);
  EvalResult series = phi11(omega, q2, q2 * square(zb), ctx);
  const Real scale = zb.is_zero() ? (nu == 0L ? Real::one(bits) : Real::zero(bits)) : pow(zb, nu);
  series.value = (scale * prefactor * series.value).rounded(ctx.bits());
  series.max_partial_magnitude = abs(scale * prefactor) * series.max_partial_magnitude;
  return series;
}

long zero_census(const QParams& params, const Real& upper, const PrecisionContext& ctx) {
  const ZeroFinder finder(params, ctx);
  const HahnExtonBessel& bessel = finder.bessel();
  // Zeros can sit within q^(2k^2) of a lattice point, so the upper end keeps
  // its full precision and the grid inherits it.
  const Bits bits = std::max<Bits>({ctx.bits(), upper.precision(), 128});
  const Real ratio = Real::parse("1.001", bits);
  const Real top = upper.rounded(bits);
  Real z = finder.first_scan_start().rounded(bits);
  int last = bessel.sign(z);
  long changes = 0;
  while (z < top) {
    z = min(z * ratio, top);
    const int s = bessel.sign(z);
    if (s != 0 && last != 0 && s != last) ++changes;
    if (s != 0) last = s;
  }
  return changes;
}

}  // namespace qfb
