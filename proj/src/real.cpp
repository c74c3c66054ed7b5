#include "qfb/real.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <stdexcept>

namespace qfb {

namespace {

constexpr double kLog2Of10 = 3.321928094887362;

Bits wider(const Real& a, const Real& b) { return std::max(a.precision(), b.precision()); }

}  // namespace

Bits bits_for_digits(long digits) {
  return static_cast<Bits>(std::ceil(static_cast<double>(std::max(digits, 1L)) * kLog2Of10)) + 8;
}

long digits_for_bits(Bits bits) { return static_cast<long>(std::floor(static_cast<double>(bits - 8) / kLog2Of10)); }

Real::Real() : Real(Bits{64}) {}

Real::Real(Bits bits) {
  mpfr_init2(value_, std::max<Bits>(bits, MPFR_PREC_MIN));
  mpfr_set_zero(value_, 1);
}

Real::Real(long value, Bits bits) : Real(bits) { mpfr_set_si(value_, value, MPFR_RNDN); }

Real::Real(double value, Bits bits) : Real(bits) { mpfr_set_d(value_, value, MPFR_RNDN); }

Real::Real(std::string_view decimal, Bits bits) : Real(bits) {
  const std::string text(decimal);
  if (text.empty()) throw std::invalid_argument("empty decimal string");
  char* end = nullptr;
  mpfr_strtofr(value_, text.c_str(), &end, 10, MPFR_RNDN);
  if (end == text.c_str() || *end != '\0' || mpfr_nan_p(value_)) {
    throw std::invalid_argument("malformed decimal string: '" + text + "'");
  }
}

Real::Real(const Real& other) : Real(other.precision()) { mpfr_set(value_, other.value_, MPFR_RNDN); }

Real::Real(Real&& other) noexcept : Real(other.precision()) { mpfr_swap(value_, other.value_); }

Real& Real::operator=(const Real& other) {
  if (this != &other) {
    if (precision() != other.precision()) mpfr_set_prec(value_, other.precision());
    mpfr_set(value_, other.value_, MPFR_RNDN);
  }
  return *this;
}

Real& Real::operator=(Real&& other) noexcept {
  mpfr_swap(value_, other.value_);
  return *this;
}

Real::~Real() { mpfr_clear(value_); }

Real Real::parse(std::string_view decimal, Bits bits) { return Real(decimal, bits); }

Real Real::pi(Bits bits) {
  Real r(bits);
  mpfr_const_pi(r.value_, MPFR_RNDN);
  return r;
}

Real Real::rounded(Bits bits) const {
  Real r(bits);
  mpfr_set(r.value_, value_, MPFR_RNDN);
  return r;
}

double Real::log10_abs() const {
  if (is_zero()) return -HUGE_VAL;
  if (!is_finite()) return HUGE_VAL;
  long exponent = 0;
  const double mantissa = mpfr_get_d_2exp(&exponent, value_, MPFR_RNDN);
  return std::log10(std::fabs(mantissa)) + static_cast<double>(exponent) * std::log10(2.0);
}

std::string Real::to_string(long digits) const {
  if (mpfr_nan_p(value_)) return "nan";
  if (mpfr_inf_p(value_)) return sign() > 0 ? "inf" : "-inf";
  if (is_zero()) return "0";
  digits = std::max(digits, 1L);
  // %.*Re gives digits after the point; one more sits before it.
  const int length = mpfr_snprintf(nullptr, 0, "%.*Re", static_cast<int>(digits - 1), value_);
  std::string out(static_cast<std::size_t>(length) + 1, '\0');
  mpfr_snprintf(out.data(), out.size(), "%.*Re", static_cast<int>(digits - 1), value_);
  out.resize(static_cast<std::size_t>(length));
  return out;
}

std::string Real::to_string() const { return to_string(digits_for_bits(precision())); }

#define QFB_BINARY_OP(op, fn)                                   \
  Real operator op(const Real& a, const Real& b) {              \
    Real r(wider(a, b));                                        \
    fn(r.value_, a.value_, b.value_, MPFR_RNDN);                \
    return r;                                                   \
  }                                                             \
  Real& Real::operator op##=(const Real& rhs) {                 \
    if (rhs.precision() > precision()) {                        \
      *this = *this op rhs;                                     \
    } else {                                                    \
      fn(value_, value_, rhs.value_, MPFR_RNDN);                \
    }                                                           \
    return *this;                                               \
  }

QFB_BINARY_OP(+, mpfr_add)
QFB_BINARY_OP(-, mpfr_sub)
QFB_BINARY_OP(*, mpfr_mul)
QFB_BINARY_OP(/, mpfr_div)
#undef QFB_BINARY_OP

Real& Real::operator+=(long rhs) {
  mpfr_add_si(value_, value_, rhs, MPFR_RNDN);
  return *this;
}
Real& Real::operator-=(long rhs) {
  mpfr_sub_si(value_, value_, rhs, MPFR_RNDN);
  return *this;
}
Real& Real::operator*=(long rhs) {
  mpfr_mul_si(value_, value_, rhs, MPFR_RNDN);
  return *this;
}
Real& Real::operator/=(long rhs) {
  mpfr_div_si(value_, value_, rhs, MPFR_RNDN);
  return *this;
}

Real Real::operator-() const {
  Real r(precision());
  mpfr_neg(r.value_, value_, MPFR_RNDN);
  return r;
}

Real operator+(const Real& a, long b) {
  Real r(a);
  return r += b;
}
Real operator-(const Real& a, long b) {
  Real r(a);
  return r -= b;
}
Real operator*(const Real& a, long b) {
  Real r(a);
  return r *= b;
}
Real operator/(const Real& a, long b) {
  Real r(a);
  return r /= b;
}
Real operator+(long a, const Real& b) { return b + a; }
Real operator-(long a, const Real& b) {
  Real r(b.precision());
  mpfr_si_sub(r.value_, a, b.value_, MPFR_RNDN);
  return r;
}
Real operator*(long a, const Real& b) { return b * a; }
Real operator/(long a, const Real& b) {
  Real r(b.precision());
  mpfr_si_div(r.value_, a, b.value_, MPFR_RNDN);
  return r;
}

std::partial_ordering operator<=>(const Real& a, const Real& b) {
  if (mpfr_unordered_p(a.value_, b.value_)) return std::partial_ordering::unordered;
  const int c = mpfr_cmp(a.value_, b.value_);
  return c < 0 ? std::partial_ordering::less : c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent;
}

std::partial_ordering operator<=>(const Real& a, long b) {
  if (mpfr_nan_p(a.value_)) return std::partial_ordering::unordered;
  const int c = mpfr_cmp_si(a.value_, b);
  return c < 0 ? std::partial_ordering::less : c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent;
}

#define QFB_UNARY_FN(name, fn)       \
  Real name(const Real& x) {         \
    Real r(x.precision());           \
    fn(r.get(), x.get(), MPFR_RNDN); \
    return r;                        \
  }

QFB_UNARY_FN(abs, mpfr_abs)
QFB_UNARY_FN(sqrt, mpfr_sqrt)
QFB_UNARY_FN(exp, mpfr_exp)
QFB_UNARY_FN(log, mpfr_log)
QFB_UNARY_FN(log1p, mpfr_log1p)
QFB_UNARY_FN(log10, mpfr_log10)
QFB_UNARY_FN(sin, mpfr_sin)
QFB_UNARY_FN(cos, mpfr_cos)
QFB_UNARY_FN(square, mpfr_sqr)
#undef QFB_UNARY_FN

Real floor(const Real& x) {
  Real r(x.precision());
  mpfr_floor(r.get(), x.get());
  return r;
}

Real pow(const Real& base, const Real& exponent) {
  Real r(wider(base, exponent));
  mpfr_pow(r.get(), base.get(), exponent.get(), MPFR_RNDN);
  return r;
}

Real pow(const Real& base, long exponent) {
  Real r(base.precision());
  mpfr_pow_si(r.get(), base.get(), exponent, MPFR_RNDN);
  return r;
}

Real max(const Real& a, const Real& b) { return a < b ? b : a; }
Real min(const Real& a, const Real& b) { return b < a ? b : a; }

std::ostream& operator<<(std::ostream& os, const Real& x) { return os << x.to_string(); }

}  // namespace qfb
