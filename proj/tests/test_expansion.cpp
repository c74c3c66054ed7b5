#include <doctest.h>

#include <algorithm>
#include <map>

#include "oracles.hpp"
#include "qfb/expansion.hpp"

using namespace qfb;

namespace {

const PrecisionContext ctx = PrecisionContext::with_digits(120);
const Bits bits = ctx.bits();

Real dec(const char* text) { return Real(std::string_view(text), bits); }
Real ten_to(long e) { return pow(Real(10L, bits), e); }

FourierBessel& engine(const char* q, const char* nu) {
  static std::map<std::pair<std::string, std::string>, std::unique_ptr<FourierBessel>> cache;
  auto& slot = cache[{q, nu}];
  if (!slot) slot = std::make_unique<FourierBessel>(compute_zeros(QParams(q, nu), 12, ctx), ctx);
  return *slot;
}

/// (1-q) sum_i q^i t_i^p f(t_i) J(q j t_i)^r at t_i = q^i, by straight summation at 300 digits.
oracle::Float lattice_moment(const oracle::Float& q, const oracle::Float& nu, const oracle::Float& j,
                             const std::function<oracle::Float(const oracle::Float&)>& f, int power_of_j) {
  const oracle::Float b = q * q;
  const oracle::Float prefactor = oracle::long_product(pow(b, nu + 1), b, 4000) / oracle::long_product(b, b, 4000);
  oracle::Float sum = 0;
  oracle::Float t = 1;
  oracle::Float largest = 0;
  for (int i = 0; i < 5000; ++i, t *= q) {
    const oracle::Float z = q * j * t;
    const oracle::Float jv = pow(z, nu) * prefactor * oracle::jnu3_series(nu, b, z);
    oracle::Float term = t * t * f(t);
    for (int r = 0; r < power_of_j; ++r) term *= jv;
    sum += term;
    largest = std::max(largest, abs(sum));
    if (i > 20 && abs(term) < largest * oracle::Float("1e-290")) break;
  }
  return (1 - q) * sum;
}

}  // namespace

TEST_SUITE("expansion") {
  TEST_CASE("a basis function expands to a unit coefficient vector") {
    FourierBessel& e = engine("0.5", "0");
    const std::vector<Real> a = e.coefficients(e.mode_function(2), 8);
    for (long k = 1; k <= 8; ++k) {
      const Real target = k == 2 ? Real::one(bits) : Real::zero(bits);
      CHECK_MESSAGE(abs(a[k - 1] - target) < ten_to(-40), "k=", k);
    }
  }

  TEST_CASE("the zero function has zero coefficients") {
    FourierBessel& e = engine("0.5", "0");
    for (const Real& a : e.coefficients(LatticeIntegrand::constant(Real::zero(bits)), 6)) CHECK(a.is_zero());
  }

  TEST_CASE("coefficients of f = 1 against a direct lattice-sum oracle and a doubled-precision run") {
    FourierBessel& e = engine("0.5", "0");
    const auto one = LatticeIntegrand::constant(Real::one(bits));
    const oracle::Float q("0.5"), nu(0);
    const PrecisionContext wide = PrecisionContext::with_digits(240);
    FourierBessel e2(compute_zeros(QParams("0.5", "0"), 4, wide), wide);
    for (long k = 1; k <= 4; ++k) {
      const oracle::Float j = oracle::to_float(e2.zeros().at(k).j);
      const oracle::Float integral = lattice_moment(q, nu, j, [](const oracle::Float&) { return oracle::Float(1); }, 1);
      const oracle::Float eta = lattice_moment(q, nu, j, [](const oracle::Float&) { return oracle::Float(1); }, 2);
      const Real a = e.coefficient(k, one);
      CHECK_MESSAGE(oracle::relative_error(a, integral / eta) < 1e-100, "k=", k);
      CHECK(oracle::relative_error(e.eta(k), eta) < 1e-100);
      const Real a2 = e2.coefficient(k, one);
      CHECK(abs(a - a2) <= abs(a2) * ten_to(-110));
    }
  }

  TEST_CASE("the three eta forms agree and eta is positive") {
    for (const char* nt : {"0", "2.5"}) {
      FourierBessel& e = engine("0.5", nt);
      std::vector<Real> scaled;
      const Real q2 = square(e.params().q(bits));
      for (long k = 1; k <= 10; ++k) {
        const Real a = e.eta(k, EtaMethod::integral);
        const Real b = e.eta(k, EtaMethod::closed_form_nu_plus_1);
        const Real c = e.eta(k, EtaMethod::closed_form_nu);
        CHECK(a > 0);
        CHECK_MESSAGE(abs(a - b) <= a * ten_to(-40), "nu=", nt, " k=", k);
        CHECK_MESSAGE(abs(a - c) <= a * ten_to(-40), "nu=", nt, " k=", k);
        scaled.push_back(a / pow(q2, k));
      }
      CHECK(bounded_trend(scaled) <= 2.0);
    }
  }

  TEST_CASE("single-mode partial sums reproduce the mode on the lattice") {
    FourierBessel& e = engine("0.5", "0");
    const LatticeIntegrand f = e.mode_function(2);
    const std::vector<Real> a = e.coefficients(f, 6);
    for (long K = 2; K <= 6; ++K) {
      const LatticeFunction s = e.partial_sum_lattice(a, 40, K);
      for (std::size_t j = 0; j < 40; ++j) CHECK(abs(s.at(j) - f.at(j, bits)) < ten_to(-40));
    }
    const LatticeFunction zero = e.partial_sum_lattice(a, 40, 0);
    for (std::size_t j = 0; j < 40; ++j) CHECK(zero.at(j).is_zero());
    for (const Real& v : e.partial_sum(a, {dec("0.3"), dec("0.7"), dec("1")}, 0)) CHECK(v.is_zero());
    // Off the lattice the partial sum still reproduces the mode.
    const Real x = dec("0.7");
    const Real mode = HahnExtonBessel(e.params(), Base::q_squared, ctx).value(e.params().q(bits) * e.zeros().at(2).j * x).value;
    CHECK(abs(e.partial_sum(a, {x}, 4).front() - mode) < ten_to(-40));
  }

  TEST_CASE("Gram matrix of the normalized system") {
    for (const char* qt : {"0.3", "0.5", "0.8"}) {
      FourierBessel& e = engine(qt, "0");
      const auto g = e.gram(8);
      REQUIRE(g.size() == 8);
      for (std::size_t n = 0; n < 8; ++n) {
        CHECK(abs(g[n][n] - 1L) < ten_to(-40));
        for (std::size_t m = 0; m < 8; ++m) {
          if (m != n) CHECK_MESSAGE(abs(g[n][m]) < ten_to(-40), "q=", qt, " n=", n + 1, " m=", m + 1);
          CHECK(abs(g[n][m] - g[m][n]) < ten_to(-110));
        }
      }
      const std::string csv = gram_csv(g, 30);
      CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
    }
  }

  TEST_CASE("Riemann-Lebesgue decay and the Cauchy-Schwarz envelope") {
    FourierBessel& e = engine("0.5", "0");
    const QParams& params = e.params();
    const Real q = params.q(bits);
    struct Case {
      LatticeIntegrand f;
      Real norm_squared;  // integral of t f^2, closed form
    };
    const std::vector<Case> cases{
        {LatticeIntegrand::constant(Real::one(bits)), 1L / (1L + q)},
        {LatticeIntegrand::power(params, dec("-0.25"), "t^-1/4"), (1L - q) / (1L - pow(q, dec("1.5")))}};
    for (const Case& c : cases) {
      const RiemannLebesgueReport r = e.riemann_lebesgue(c.f, 1, 12);
      CHECK(r.integrable);
      CHECK(abs(r.weighted_norm_squared - c.norm_squared) <= c.norm_squared * ten_to(-100));
      CHECK(r.envelope_holds());
      CHECK(r.trend <= 2.0);
      REQUIRE(r.rows.size() == 12);
      for (const RiemannLebesgueRow& row : r.rows) {
        const Real envelope = sqrt(c.norm_squared * e.eta(row.m));
        CHECK(abs(row.envelope - envelope) <= envelope * ten_to(-100));
        CHECK(abs(row.integral) <= envelope);
        CHECK(abs(row.scaled - abs(row.integral) / pow(q, row.m)) <= row.scaled * ten_to(-100));
      }
      const std::string csv = r.to_csv();
      CHECK(csv.rfind("m,abs_I_m,abs_I_m_scaled,envelope\r\n", 0) == 0);
    }
  }

  TEST_CASE("t^-1 is recognised as outside the Riemann-Lebesgue hypothesis") {
    FourierBessel& e = engine("0.5", "0");
    const RiemannLebesgueReport r = e.riemann_lebesgue(LatticeIntegrand::power(e.params(), dec("-1"), "t^-1"), 1, 4);
    CHECK_FALSE(r.integrable);
  }

  TEST_CASE("expansion result: Bessel inequality, determinism, formats") {
    FourierBessel& e = engine("0.5", "0");
    const auto one = LatticeIntegrand::constant(Real::one(bits));
    const ExpansionResult r = e.expand(one, 8, 20);
    CHECK(r.K == 8);
    CHECK(r.modes.size() == 8);
    CHECK(r.partial_sums.size() == 8);
    CHECK(r.bessel_holds());
    CHECK(r.bessel_sum <= r.bessel_bound * (1L + ten_to(-100)));
    CHECK(r.eta_trend <= 2.0);
    CHECK(e.expand(one, 8, 20).to_json().dump() == r.to_json().dump());
    const std::string conv = r.convergence_csv();
    CHECK(conv.rfind("j,x,f,S_1,S_2,S_3,S_4,S_5,S_6,S_7,S_8\r\n", 0) == 0);
    CHECK(r.coefficients_csv().rfind("k,eta,a_k,b_k\r\n", 0) == 0);
    // Partial sums re-parse to identical lattice functions.
    for (const auto& item : r.to_json().at("partial_sums")) {
      const nlohmann::json lattice = item.at("lattice");
      CHECK(LatticeFunction::from_json(lattice).to_json().dump() == lattice.dump());
    }
    const ExpansionResult none = e.expand(one, 0, 5);
    CHECK(none.modes.empty());
    CHECK(none.partial_sums.empty());
  }

  TEST_CASE("K beyond the available zeros is an error") {
    FourierBessel& e = engine("0.5", "0");
    CHECK_THROWS_AS(e.expand(LatticeIntegrand::constant(Real::one(bits)), 13, 5), std::invalid_argument);
    CHECK_THROWS_AS(e.eta(13), std::invalid_argument);
  }

  TEST_CASE("lattice integrands") {
    const QParams params("0.5", "0");
    const LatticeFunction f(params, {dec("1"), dec("2"), dec("3")});
    const LatticeIntegrand g = LatticeIntegrand::from_lattice(f, params);
    REQUIRE(g.support().has_value());
    CHECK(*g.support() == 3);
    CHECK(g.at(1, bits) == 2);
    CHECK(g.at(7, bits).is_zero());
    CHECK_THROWS_AS(LatticeIntegrand::from_lattice(LatticeFunction("0.25", {dec("1")}), params), BaseMismatchError);
    const LatticeSum s = lattice_sum(params, [&](std::size_t i) { return f.at(i); }, 0, 3, ctx);
    CHECK(s.value == dec("0.5") * (dec("1") + dec("1") + dec("0.75")));
    CHECK(s.closed);
    CHECK(s.terms == 3);
  }

  TEST_CASE("weighted coefficients use the half-power weight") {
    FourierBessel& e = engine("0.5", "0");
    const auto one = LatticeIntegrand::constant(Real::one(bits));
    const Real half = dec("0.5");
    for (long k = 1; k <= 3; ++k) {
      CHECK(abs(e.weighted_coefficient(k, one) - e.moment(k, one, half) / e.eta(k)) <= abs(e.weighted_coefficient(k, one)) * ten_to(-110));
      // b_k of t^(1/2) f equals a_k of f.
      const auto root = LatticeIntegrand::power(e.params(), half, "t^1/2");
      CHECK(abs(e.weighted_coefficient(k, root) - e.coefficient(k, one)) <= abs(e.coefficient(k, one)) * ten_to(-100));
    }
  }
}
