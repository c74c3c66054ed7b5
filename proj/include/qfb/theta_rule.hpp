#pragma once

// Offset rules theta(m) written as small arithmetic expressions in the index m,
// for example "m^-2", "1/sqrt(m)" or "alpha/2".
//
// Grammar: numbers, the variables m and alpha (alpha_m of the zero bracket),
// + - * / ^ (right associative, binds tighter than unary minus on its left
// operand), parentheses and the functions sqrt, exp, log.

#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "qfb/real.hpp"

namespace qfb {

class ThetaRule {
 public:
  /// Parses `text`; throws std::invalid_argument with the offending position.
  explicit ThetaRule(std::string_view text);

  const std::string& text() const { return text_; }
  bool uses_alpha() const { return uses_alpha_; }

  /// theta(m) at `bits`; `alpha` supplies alpha_m when the rule mentions it.
  Real operator()(long m, Bits bits, const std::function<Real(long, Bits)>& alpha = {}) const;

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
  bool uses_alpha_ = false;
};

}  // namespace qfb
