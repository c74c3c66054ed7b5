#include "qfb/theta_rule.hpp"

#include <cctype>
#include <stdexcept>
#include <vector>

namespace qfb {

struct ThetaRule::Node {
  enum class Kind { number, m, alpha, neg, add, sub, mul, div, pow, sqrt, exp, log } kind;
  std::string literal;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const ThetaRule::Node>;
using Kind = ThetaRule::Node::Kind;

NodePtr make(Kind kind, std::vector<NodePtr> args = {}, std::string literal = {}) {
  return std::make_shared<const ThetaRule::Node>(ThetaRule::Node{kind, std::move(literal), std::move(args)});
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    NodePtr root = expression();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected character");
    return root;
  }

  bool saw_alpha() const { return saw_alpha_; }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("theta rule \"" + std::string(text_) + "\": " + what + " at position " +
                                std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expression() {
    NodePtr left = term();
    for (;;) {
      if (accept('+')) {
        left = make(Kind::add, {left, term()});
      } else if (accept('-')) {
        left = make(Kind::sub, {left, term()});
      } else {
        return left;
      }
    }
  }

  NodePtr term() {
    NodePtr left = unary();
    for (;;) {
      if (accept('*')) {
        left = make(Kind::mul, {left, unary()});
      } else if (accept('/')) {
        left = make(Kind::div, {left, unary()});
      } else {
        return left;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::neg, {unary()});
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Kind::pow, {base, unary()});
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    if (accept('(')) {
      NodePtr inner = expression();
      if (!accept(')')) fail("missing ')'");
      return inner;
    }
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected character");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    return make(Kind::number, {}, std::string(text_.substr(start, pos_ - start)));
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name == "m") return make(Kind::m);
    if (name == "alpha") {
      saw_alpha_ = true;
      return make(Kind::alpha);
    }
    Kind kind;
    if (name == "sqrt") {
      kind = Kind::sqrt;
    } else if (name == "exp") {
      kind = Kind::exp;
    } else if (name == "log") {
      kind = Kind::log;
    } else {
      pos_ = start;
      fail("unknown identifier '" + std::string(name) + "'");
    }
    if (!accept('(')) fail("expected '(' after " + std::string(name));
    NodePtr arg = expression();
    if (!accept(')')) fail("missing ')'");
    return make(kind, {arg});
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  bool saw_alpha_ = false;
};

Real evaluate(const ThetaRule::Node& node, long m, Bits bits, const std::function<Real(long, Bits)>& alpha) {
  auto arg = [&](std::size_t i) { return evaluate(*node.args[i], m, bits, alpha); };
  switch (node.kind) {
    case Kind::number: return Real::parse(node.literal, bits);
    case Kind::m: return Real(m, bits);
    case Kind::alpha:
      if (!alpha) throw std::invalid_argument("theta rule mentions alpha but no alpha_m is available");
      return alpha(m, bits);
    case Kind::neg: return -arg(0);
    case Kind::add: return arg(0) + arg(1);
    case Kind::sub: return arg(0) - arg(1);
    case Kind::mul: return arg(0) * arg(1);
    case Kind::div: return arg(0) / arg(1);
    case Kind::pow: return pow(arg(0), arg(1));
    case Kind::sqrt: return sqrt(arg(0));
    case Kind::exp: return exp(arg(0));
    case Kind::log: return log(arg(0));
  }
  throw std::logic_error("theta rule: unhandled node");
}

}  // namespace

ThetaRule::ThetaRule(std::string_view text) : text_(text) {
  Parser parser(text);
  root_ = parser.parse();
  uses_alpha_ = parser.saw_alpha();
}

Real ThetaRule::operator()(long m, Bits bits, const std::function<Real(long, Bits)>& alpha) const {
  Real value = evaluate(*root_, m, bits, alpha);
  if (!value.is_finite()) throw std::domain_error("theta rule \"" + text_ + "\" is not finite at m = " + std::to_string(m));
  return value;
}

}  // namespace qfb
