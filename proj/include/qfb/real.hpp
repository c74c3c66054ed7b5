#pragma once

// Thin value-semantics wrapper over an MPFR number.
//
// Every Real carries its own precision. Binary operations produce a result at
// the larger precision of their operands, so precision never depends on
// process-wide state and evaluations at different precisions may run
// concurrently.

#include <mpfr.h>

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace qfb {

using Bits = mpfr_prec_t;

/// Binary precision needed to carry `digits` decimal digits (plus a few guard bits).
Bits bits_for_digits(long digits);
/// Decimal digits represented by `bits`.
long digits_for_bits(Bits bits);

class Real {
 public:
  Real();
  explicit Real(Bits bits);
  Real(long value, Bits bits);
  Real(int value, Bits bits) : Real(static_cast<long>(value), bits) {}
  Real(double value, Bits bits);
  Real(std::string_view decimal, Bits bits);

  Real(const Real& other);
  Real(Real&& other) noexcept;
  Real& operator=(const Real& other);
  Real& operator=(Real&& other) noexcept;
  ~Real();

  /// Parses a decimal string; throws std::invalid_argument when malformed.
  static Real parse(std::string_view decimal, Bits bits);
  static Real pi(Bits bits);
  static Real zero(Bits bits) { return Real(0L, bits); }
  static Real one(Bits bits) { return Real(1L, bits); }

  Bits precision() const { return mpfr_get_prec(value_); }
  /// Copy rounded (or exactly extended) to `bits`.
  Real rounded(Bits bits) const;

  bool is_zero() const { return mpfr_zero_p(value_) != 0; }
  bool is_finite() const { return mpfr_number_p(value_) != 0; }
  int sign() const { return mpfr_sgn(value_); }
  double to_double() const { return mpfr_get_d(value_, MPFR_RNDN); }
  long to_long() const { return mpfr_get_si(value_, MPFR_RNDN); }
  /// log10(|x|) as a double; safe for exponents far outside double range.
  double log10_abs() const;

  /// Scientific notation with `digits` significant digits ("-1.2345e-17").
  std::string to_string(long digits) const;
  /// Scientific notation with all digits justified by the precision.
  std::string to_string() const;

  Real& operator+=(const Real& rhs);
  Real& operator-=(const Real& rhs);
  Real& operator*=(const Real& rhs);
  Real& operator/=(const Real& rhs);
  Real& operator+=(long rhs);
  Real& operator-=(long rhs);
  Real& operator*=(long rhs);
  Real& operator/=(long rhs);

  Real operator-() const;

  friend Real operator+(const Real& a, const Real& b);
  friend Real operator-(const Real& a, const Real& b);
  friend Real operator*(const Real& a, const Real& b);
  friend Real operator/(const Real& a, const Real& b);
  friend Real operator+(const Real& a, long b);
  friend Real operator-(const Real& a, long b);
  friend Real operator*(const Real& a, long b);
  friend Real operator/(const Real& a, long b);
  friend Real operator+(long a, const Real& b);
  friend Real operator-(long a, const Real& b);
  friend Real operator*(long a, const Real& b);
  friend Real operator/(long a, const Real& b);

  friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.value_, b.value_) != 0; }
  friend std::partial_ordering operator<=>(const Real& a, const Real& b);
  friend bool operator==(const Real& a, long b) { return mpfr_cmp_si(a.value_, b) == 0; }
  friend std::partial_ordering operator<=>(const Real& a, long b);

  mpfr_srcptr get() const { return value_; }
  mpfr_ptr get() { return value_; }

 private:
  mpfr_t value_;
};

Real abs(const Real& x);
Real sqrt(const Real& x);
Real exp(const Real& x);
Real log(const Real& x);
/// log(1 + x), accurate for small |x|.
Real log1p(const Real& x);
Real log10(const Real& x);
Real sin(const Real& x);
Real cos(const Real& x);
Real floor(const Real& x);
Real pow(const Real& base, const Real& exponent);
Real pow(const Real& base, long exponent);
Real square(const Real& x);
Real max(const Real& a, const Real& b);
Real min(const Real& a, const Real& b);

std::ostream& operator<<(std::ostream& os, const Real& x);

}  // namespace qfb
