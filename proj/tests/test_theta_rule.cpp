#include <doctest.h>

#include <stdexcept>

#include "qfb/theta_rule.hpp"

using namespace qfb;

namespace {

constexpr Bits bits = 256;

double eval(const char* text, long m, double alpha = 0.0) {
  const ThetaRule rule(text);
  return rule(m, bits, [alpha](long, Bits b) { return Real(alpha, b); }).to_double();
}

}  // namespace

TEST_SUITE("theta_rule") {
  TEST_CASE("default rules") {
    CHECK(eval("m^-2", 4) == doctest::Approx(1.0 / 16));
    CHECK(eval("m^-0.5", 4) == doctest::Approx(0.5));
    CHECK(eval("1/sqrt(m)", 9) == doctest::Approx(1.0 / 3));
    CHECK(eval("1/m^2", 5) == doctest::Approx(0.04));
  }

  TEST_CASE("precedence and associativity") {
    CHECK(eval("2^3^2", 1) == doctest::Approx(512));
    CHECK(eval("-m^2", 3) == doctest::Approx(-9));
    CHECK(eval("(1+m)*2-3/4", 1) == doctest::Approx(3.25));
    CHECK(eval("exp(log(m))", 7) == doctest::Approx(7));
  }

  TEST_CASE("alpha variable") {
    const ThetaRule rule("alpha/2");
    CHECK(rule.uses_alpha());
    CHECK_FALSE(ThetaRule("m^-2").uses_alpha());
    CHECK(eval("alpha/2", 3, 0.5) == doctest::Approx(0.25));
    CHECK(rule.text() == "alpha/2");
  }

  TEST_CASE("malformed rules are rejected") {
    for (const char* bad : {"", "m^", "(m", "m)", "foo(m)", "2 m", "m +* 2", "beta"})
      CHECK_THROWS_AS(ThetaRule{bad}, std::invalid_argument);
  }
}
