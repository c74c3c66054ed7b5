#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "oracles.hpp"
#include "qfb/verify.hpp"
#include "qfb/zeros.hpp"

using namespace qfb;

namespace {

const PrecisionContext ctx = PrecisionContext::with_digits(120);
const Bits bits = ctx.bits();

Real dec(const char* text) { return Real(std::string_view(text), bits); }

const ZeroTable& table(const char* q, const char* nu) {
  static std::map<std::pair<std::string, std::string>, ZeroTable> cache;
  const auto key = std::pair<std::string, std::string>(q, nu);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, compute_zeros(QParams(q, nu), 12, ctx)).first;
  return it->second;
}

oracle::Float oracle_alpha(const oracle::Float& q, const oracle::Float& nu, long k) {
  return log(1 - pow(q, 2 * (k + nu)) / (1 - pow(q, 2 * k))) / (2 * log(q));
}

}  // namespace

TEST_SUITE("zeros") {
  TEST_CASE("alpha_k against the printed formula") {
    const Real a = alpha_k(QParams("0.5", "0"), 3, ctx);
    const oracle::Float direct = log(1 - pow(oracle::Float(2), -6) / (1 - pow(oracle::Float(2), -6))) / (2 * log(oracle::Float("0.5")));
    CHECK(oracle::relative_error(a, direct) < 1e-115);
    CHECK(a > 0);
    for (long k = 1; k <= 12; ++k) {
      const Real v = alpha_k(QParams("0.3", "2.5"), k, ctx);
      CHECK(oracle::relative_error(v, oracle_alpha(oracle::Float("0.3"), oracle::Float("2.5"), k)) < 1e-110);
    }
  }

  TEST_CASE("alpha_k decays like q^(2k)") {
    const QParams params("0.5", "0.5");
    const Real q2 = square(params.q(bits));
    Real previous = alpha_k(params, 1, ctx);
    for (long k = 2; k <= 30; ++k) {
      const Real a = alpha_k(params, k, ctx);
      CHECK(a < previous);
      CHECK(a / pow(q2, k) < 2L);
      previous = a;
    }
  }

  TEST_CASE("alpha_k is undefined where the logarithm's argument is not positive") {
    // nu = 1, q = 0.9, k = 1: 1 - 0.9^4 / (1 - 0.9^2) = 1 - 0.6561 / 0.19 < 0.
    const QParams params("0.9", "1");
    CHECK_THROWS_AS(alpha_k(params, 1, ctx), DomainError);
    CHECK_FALSE(alpha_k_if_defined(params, 1, bits).has_value());
    long first = 0;
    for (long k = 1; k <= 20 && first == 0; ++k)
      if (alpha_k_if_defined(params, k, bits)) first = k;
    REQUIRE(first > 1);
    for (long k = first; k <= first + 10; ++k) CHECK(alpha_k(params, k, ctx) > 0);
  }

  TEST_CASE("first bracket contains the dense-scan zero") {
    const QParams params("0.5", "0");
    const ZeroBracket b = bracket_zero(params, 1, ctx);
    const auto scan = oracle::scan_zeros(oracle::Float(0), oracle::Float("0.5"), oracle::Float("0.05"), oracle::Float(4));
    REQUIRE(!scan.empty());
    CHECK(oracle::to_float(b.lo) < scan.front());
    CHECK(scan.front() < oracle::to_float(b.hi));
  }

  TEST_CASE("the asymptotic bracket isolates the eighth zero") {
    const QParams params("0.5", "0");
    const ZeroBracket b = bracket_zero(params, 8, ctx);
    CHECK(b.from_asymptotic_bracket);
    const ZeroFinder finder(params, ctx);
    const Real a8 = alpha_k(params, 8, ctx);
    CHECK(finder.sign_at(8, Real::zero(bits)) != finder.sign_at(8, a8));
    const Real q = params.q(bits);
    CHECK(abs(b.hi - pow(q, -8L)) <= pow(q, -8L) * dec("1e-110"));
  }

  TEST_CASE("brackets are disjoint and ordered") {
    const QParams params("0.5", "0.5");
    std::optional<Real> previous;
    const ZeroFinder finder(params, ctx);
    Real last_hi = Real::zero(bits);
    for (long k = 1; k <= 8; ++k) {
      const ZeroBracket b = finder.bracket(k, previous);
      CHECK(b.lo < b.hi);
      CHECK(last_hi <= b.lo);
      last_hi = b.hi;
      previous = finder.refine(k, b).j;
    }
  }

  TEST_CASE("zeros agree with the dense-scan oracle and the census") {
    for (const char* qt : {"0.3", "0.5", "0.8"}) {
      for (const char* nt : {"0", "0.5", "1", "2.5"}) {
        const QParams params(qt, nt);
        const ZeroTable& t = table(qt, nt);
        const oracle::Float q(qt);
        const oracle::Float upper = pow(q, -6);
        const auto scan = oracle::scan_zeros(oracle::Float(nt), q, oracle::Float("0.05"), upper);
        long below = 0;
        for (const ZeroRecord& r : t.records)
          if (oracle::to_float(r.j) < upper) ++below;
        CHECK_MESSAGE(static_cast<long>(scan.size()) == below, "q=", qt, " nu=", nt);
        const Real upper_real = pow(params.q(2048), -6L);
        CHECK(zero_census(params, upper_real, PrecisionContext::with_digits(30)) == below);
        for (std::size_t i = 0; i < scan.size() && static_cast<long>(i) < t.size(); ++i)
          CHECK_MESSAGE(oracle::relative_error(t.records[i].j, scan[i]) < 1e-30, "q=", qt, " nu=", nt, " k=", i + 1);
      }
    }
  }

  TEST_CASE("a returned zero is a zero at working precision") {
    const ZeroTable& t = table("0.5", "0");
    const HahnExtonBessel bessel(t.params, Base::q_squared, ctx);
    for (const ZeroRecord& r : t.records) {
      const EvalResult e = bessel.value(r.j);
      CHECK(abs(e.value) < e.max_partial_magnitude * pow(Real(10L, bits), -ctx.digits / 2));
      // epsilon is tiny, so the comparison is absolute at the precision j is carried at.
      const Real expected = r.k + log(r.j) / log(t.params.q(r.j.precision()));
      CHECK(abs(r.epsilon - expected) <= pow(Real(2L, bits), -static_cast<long>(r.j.precision()) + 12));
    }
  }

  TEST_CASE("zero table structure") {
    const ZeroTable t = compute_zeros(QParams("0.5", "0"), 8, ctx);
    REQUIRE(t.size() == 8);
    REQUIRE(t.k0.has_value());
    CHECK(*t.k0 <= 4);
    for (long k = 1; k <= 8; ++k) {
      const ZeroRecord& r = t.at(k);
      CHECK(r.k == k);
      if (k > 1) CHECK(t.at(k - 1).j < r.j);
      if (k >= *t.k0) {
        REQUIRE(r.alpha.has_value());
        CHECK(r.epsilon > 0);
        CHECK(r.epsilon < *r.alpha);
        CHECK(r.from_asymptotic_bracket);
      }
    }
    CHECK_THROWS_AS(t.at(9), std::out_of_range);
    const std::string csv = t.to_csv();
    CHECK(csv.rfind("k,j,epsilon_k,alpha_k,digits,asymptotic_bracket", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
    CHECK(t.to_json().at("zeros").size() == 8);

    const ZeroTable empty = compute_zeros(QParams("0.5", "0"), 0, ctx);
    CHECK(empty.size() == 0);
    const std::string empty_csv = empty.to_csv();
    CHECK(std::count(empty_csv.begin(), empty_csv.end(), '\n') == 1);
  }

  TEST_CASE("epsilon_k decreases and stays inside (0, alpha_k) across the desk grid") {
    for (const char* qt : {"0.3", "0.5", "0.8"}) {
      for (const char* nt : {"0", "0.5", "1", "2.5"}) {
        const ZeroTable& t = table(qt, nt);
        REQUIRE(t.k0.has_value());
        CHECK(*t.k0 <= 4);
        for (long k = *t.k0; k <= 12; ++k) {
          CHECK(t.at(k).epsilon > 0);
          CHECK(t.at(k).epsilon < *t.at(k).alpha);
          if (k > *t.k0) CHECK(t.at(k).epsilon < t.at(k - 1).epsilon);
        }
      }
    }
  }

  TEST_CASE("shifted zeros interlace") {
    const ZeroTable& t = table("0.5", "0");
    for (long k = 2; k <= 12; ++k) {
      const ShiftedZeroCheck c = verify_shifted_zero(t, k);
      CHECK(c.holds);
      CHECK(c.lower_margin > 0);
      CHECK(c.upper_margin > 0);
      CHECK(c.epsilon_decreasing);
      if (k < 12) {
        REQUIRE(c.companion_holds.has_value());
        CHECK(*c.companion_holds);
      } else {
        CHECK_FALSE(c.companion_holds.has_value());
      }
    }
  }

  TEST_CASE("predicted signs") {
    for (long m = 1; m <= 6; ++m) {
      const int even = m % 2 == 0 ? 1 : -1;
      CHECK(predicted_sign(SignTarget::bessel_derivative, ThetaLimit::zero, m) == even);
      CHECK(predicted_sign(SignTarget::bessel_derivative, ThetaLimit::infinity, m) == -even);
      CHECK(predicted_sign(SignTarget::phi11_derivative, ThetaLimit::zero, m) == -even);
      CHECK(predicted_sign(SignTarget::phi11_derivative, ThetaLimit::infinity, m) == even);
    }
  }

  TEST_CASE("derivative sign patterns") {
    const QParams params("0.5", "0");
    const ThetaRule small("m^-2");
    const ThetaRule large("m^-0.5");
    const auto check_all = [](const SignPattern& p) {
      for (const SignRow& row : p.rows) CHECK_MESSAGE(row.observed == row.predicted, "m=", row.m);
      REQUIRE(p.threshold.has_value());
      CHECK(*p.threshold == p.rows.front().m);
    };
    const SignPattern a = derivative_sign_pattern(params, 5, 12, small, ThetaLimit::zero, SignTarget::bessel_derivative, ctx);
    check_all(a);
    for (const SignRow& row : a.rows) CHECK(row.observed == (row.m % 2 == 0 ? 1 : -1));
    const SignPattern b = derivative_sign_pattern(params, 5, 12, large, ThetaLimit::infinity, SignTarget::bessel_derivative, ctx);
    check_all(b);
    for (const SignRow& row : b.rows) CHECK(row.observed == (row.m % 2 == 0 ? -1 : 1));
    const SignPattern c = derivative_sign_pattern(params, 5, 12, small, ThetaLimit::zero, SignTarget::phi11_derivative, ctx);
    check_all(c);
    for (const SignRow& row : c.rows) CHECK(row.observed == (row.m % 2 == 0 ? -1 : 1));
  }

  TEST_CASE("derivative sign is constant between q^(-m+alpha_m) and q^(-m)") {
    const QParams params("0.5", "0");
    const SignConstancyReport r = verify_sign_constancy(params, 6, 12, ThetaRule("alpha"), 32, ctx);
    CHECK(r.all_constant);
    CHECK(r.adjacent_alternate);
    REQUIRE(r.rows.size() == 7);
    for (const SignConstancyRow& row : r.rows) CHECK(row.samples == 32);
    const SignConstancyReport one = verify_sign_constancy(params, 6, 6, ThetaRule("alpha"), 1, ctx);
    CHECK(one.all_constant);
  }

  TEST_CASE("decay bounds") {
    const ZeroTable& t = table("0.5", "0.5");
    const DecayReport r = verify_decay_bounds(t, 2, 12, ctx);
    std::vector<Real> scaled;
    for (const DecayRow& row : r.rows) {
      if (row.k >= 4) {
        CHECK(row.shifted_value <= row.shifted_bound);
        scaled.push_back(row.derivative_scaled);
        CHECK(row.derivative_scaled.is_finite());
      }
      CHECK(row.lattice_value <= row.shifted_bound);
      CHECK(row.product_negative);
    }
    CHECK(bounded_trend(scaled) <= 2.0);
    // C recomputed from long products.
    const oracle::Float q2 = oracle::Float("0.25");
    const oracle::Float c = oracle::long_product(-q2, q2, 4000) * oracle::long_product(-pow(q2, oracle::Float("1.5")), q2, 4000) /
                            oracle::long_product(q2, q2, 4000);
    CHECK(oracle::relative_error(r.bound_constant, c) < 1e-100);
  }

  TEST_CASE("bounded trend statistic") {
    std::vector<Real> flat(8, Real(1L, 64));
    CHECK(bounded_trend(flat) == doctest::Approx(1.0));
    std::vector<Real> growing;
    for (int i = 0; i < 8; ++i) growing.emplace_back(std::pow(2.0, i), 64);
    CHECK(bounded_trend(growing) > 2.0);
  }
}
