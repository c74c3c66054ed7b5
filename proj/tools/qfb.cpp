// qfb: command-line front end with one subcommand per library operation
// (eval, zeros, verify, expand).
//
// Exit codes: 0 success, 1 at least one failed check, 2 usage or runtime error.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qfb/expansion.hpp"
#include "qfb/verify.hpp"

namespace {

constexpr long kDefaultKCap = 16;
constexpr int kExitFailedCheck = 1;
constexpr int kExitError = 2;

struct RunConfig {
  std::string q = "0.5";
  std::string nu = "0";
  long digits = 120;
  long k_max = 12;
  bool allow_large_k = false;
  std::string tol = "1e-40";
  std::string theta_zero_rule = "m^-2";
  std::string theta_inf_rule = "m^-0.5";
  std::string f = "one";
  long K = 8;
  long points = 0;
  std::string format = "json";
  std::string out;
  std::string plot;
  std::string convergence;
  std::vector<std::string> checks;
  std::vector<std::string> z;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

qfb::QParams make_params(const RunConfig& c) { return qfb::QParams(c.q, c.nu); }

qfb::PrecisionContext make_context(const RunConfig& c) {
  if (c.digits < 30) throw UsageError("--digits must be >= 30 (got " + std::to_string(c.digits) + ")");
  qfb::PrecisionContext ctx = qfb::PrecisionContext::with_digits(c.digits);
  ctx.validate();
  return ctx;
}

void check_k_max(const RunConfig& c) {
  if (c.k_max < 0) throw UsageError("--kmax must be >= 0");
  if (c.k_max > kDefaultKCap && !c.allow_large_k) {
    throw UsageError("--kmax " + std::to_string(c.k_max) + " exceeds the cap of " + std::to_string(kDefaultKCap) +
                     " (working precision grows like k^2); pass --allow-large-k to override");
  }
}

void write_output(const RunConfig& c, const std::string& text) {
  if (c.out.empty() || c.out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream file(c.out, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open --out file '" + c.out + "'");
  file << text;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + path + "'");
  file << text;
}

std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

/// A decimal, or q^e with a decimal exponent e (for example "q^-5").
qfb::Real parse_z(const std::string& text, const qfb::QParams& params, qfb::Bits bits) {
  if (text.rfind("q^", 0) == 0) {
    std::string exponent = text.substr(2);
    if (exponent.size() >= 2 && exponent.front() == '(' && exponent.back() == ')') {
      exponent = exponent.substr(1, exponent.size() - 2);
    }
    return pow(params.q(bits), qfb::Real::parse(exponent, bits));
  }
  return qfb::Real::parse(text, bits);
}

/// one | zero | constant:<c> | power:<s> | mode:<n> | path to a lattice-function JSON file.
qfb::LatticeIntegrand resolve_function(const std::string& spec, const qfb::QParams& params, qfb::FourierBessel* engine,
                                       qfb::Bits bits) {
  if (spec.rfind("mode:", 0) == 0 && engine == nullptr) throw UsageError("--f mode:<n> is only available for expand");
  try {
    if (auto builtin = qfb::builtin_integrand(spec, params, engine, bits)) return *builtin;
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--f: ") + e.what());
  }
  std::ifstream file(spec);
  if (!file) throw UsageError("--f '" + spec + "' is neither a builtin function nor a readable file");
  nlohmann::json j;
  try {
    file >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("--f '" + spec + "': invalid JSON (" + e.what() + ")");
  }
  return qfb::LatticeIntegrand::from_lattice(qfb::LatticeFunction::from_json(j), params);
}

// ---------------------------------------------------------------------------

int cmd_eval(const RunConfig& c) {
  if (c.z.empty()) throw UsageError("eval needs at least one --z value");
  const qfb::QParams params = make_params(c);
  const qfb::PrecisionContext ctx = make_context(c);
  const qfb::HahnExtonBessel bessel(params, qfb::Base::q_squared, ctx);
  const qfb::Bits bits = ctx.bits() + 64;

  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream csv;
  csv << "z,J,dJ,terms,digits_used,escalations,cancellation_digits\r\n";
  for (const std::string& text : c.z) {
    const qfb::Real z = parse_z(text, params, bits);
    const qfb::EvalResult value = bessel.value(z);
    std::optional<qfb::EvalResult> derivative;
    std::string derivative_note;
    try {
      derivative = bessel.derivative(z);
    } catch (const qfb::DomainError& e) {
      derivative_note = e.what();
    }
    const std::string z_text = z.to_string(c.digits);
    const std::string value_text = value.to_json().at("value").get<std::string>();
    const std::string derivative_text =
        derivative ? derivative->to_json().at("value").get<std::string>() : std::string("undefined");
    const long used = std::max(value.precision_used, derivative ? derivative->precision_used : 0L);
    csv << text << ',' << value_text << ',' << derivative_text << ',' << value.terms_used << ',' << used << ','
        << value.escalations << ',' << static_cast<long>(std::ceil(value.cancellation_digits())) << "\r\n";
    nlohmann::json row = {{"z_input", text}, {"z", z_text}, {"J", value.to_json()}};
    row["dJ"] = derivative ? derivative->to_json() : nlohmann::json{{"undefined", derivative_note}};
    rows.push_back(std::move(row));
  }
  if (c.format == "csv") {
    write_output(c, csv.str());
  } else {
    write_output(c, json_text({{"q", params.q_text()}, {"nu", params.nu_text()}, {"digits", c.digits}, {"rows", rows}}));
  }
  return 0;
}

int cmd_zeros(const RunConfig& c) {
  check_k_max(c);
  const qfb::QParams params = make_params(c);
  const qfb::PrecisionContext ctx = make_context(c);
  const qfb::ZeroTable table = qfb::compute_zeros(params, c.k_max, ctx);
  write_output(c, c.format == "csv" ? table.to_csv() : json_text(table.to_json()));
  return 0;
}

int cmd_verify(const RunConfig& c) {
  check_k_max(c);
  qfb::VerifyConfig config;
  config.params = make_params(c);
  config.ctx = make_context(c);
  config.k_max = c.k_max;
  config.theta_zero_rule = qfb::ThetaRule(c.theta_zero_rule).text();
  config.theta_inf_rule = qfb::ThetaRule(c.theta_inf_rule).text();
  config.tolerance = qfb::Real::parse(c.tol, 64);
  if (!(config.tolerance > 0L)) throw UsageError("--tol must be positive");
  for (const auto& id : c.checks) {
    try {
      qfb::check_anchor(id);
    } catch (const std::invalid_argument&) {
      std::string known;
      for (const auto& k : qfb::check_ids()) known += (known.empty() ? "" : ", ") + k;
      throw UsageError("unknown check id '" + id + "' (known: " + known + ")");
    }
  }
  if (!c.f.empty() && c.f != "one") {
    config.functions.push_back(resolve_function(c.f, config.params, nullptr, config.ctx.bits()));
  }
  const qfb::VerificationReport report = qfb::run_verification(config, c.checks);
  write_output(c, c.format == "csv" ? report.to_csv() : json_text(report.to_json()));
  std::cerr << "verify: " << report.count(qfb::CheckStatus::pass) << " pass, " << report.count(qfb::CheckStatus::fail)
            << " fail, " << report.count(qfb::CheckStatus::reported) << " reported\n";
  return report.passed() ? 0 : kExitFailedCheck;
}

int cmd_expand(const RunConfig& c) {
  check_k_max(c);
  if (c.K < 0) throw UsageError("--K must be >= 0");
  if (c.K > c.k_max) {
    throw UsageError("--K " + std::to_string(c.K) + " exceeds the available zeros (--kmax " + std::to_string(c.k_max) +
                     ")");
  }
  const qfb::QParams params = make_params(c);
  const qfb::PrecisionContext ctx = make_context(c);
  qfb::FourierBessel engine(qfb::compute_zeros(params, c.k_max, ctx), ctx);
  const qfb::LatticeIntegrand f = resolve_function(c.f, params, &engine, ctx.bits());
  std::size_t points = 24;
  if (c.points > 0) {
    points = static_cast<std::size_t>(c.points);
  } else if (f.support()) {
    points = *f.support();
  }
  const qfb::ExpansionResult result = engine.expand(f, c.K, points);
  write_output(c, c.format == "csv" ? result.coefficients_csv() : json_text(result.to_json()));
  if (!c.convergence.empty()) write_file(c.convergence, result.convergence_csv());
  if (!c.plot.empty() && c.K > 0) write_file(c.plot, engine.riemann_lebesgue(f, 1, c.K).to_csv());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"q-Fourier-Bessel toolkit: J_nu(z;q^2), its zeros, expansions and verification"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig c;

  app.add_option("--q", c.q, "base q in (0,1), decimal string")->capture_default_str();
  app.add_option("--nu", c.nu, "order nu > -1, decimal string")->capture_default_str();
  app.add_option("--digits", c.digits, "decimal working precision (>= 30)")->envname("QFB_DIGITS")->capture_default_str();
  app.add_option("--kmax", c.k_max, "number of zeros / largest index")->capture_default_str();
  app.add_flag("--allow-large-k", c.allow_large_k, "allow --kmax above 16");
  app.add_option("--tol", c.tol, "tolerance for the Gram, norm and recurrence checks")->capture_default_str();
  app.add_option("--theta-zero-rule", c.theta_zero_rule, "theta_m rule with m*theta_m -> 0")->capture_default_str();
  app.add_option("--theta-inf-rule", c.theta_inf_rule, "theta_m rule with m*theta_m -> infinity")->capture_default_str();
  app.add_option("--f", c.f, "one | zero | constant:<c> | power:<s> | mode:<n> | lattice JSON file")->capture_default_str();
  app.add_option("--K", c.K, "number of expansion modes")->capture_default_str();
  app.add_option("--points", c.points, "lattice points for partial sums (default: file length or 24)");
  app.add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app.add_option("--out", c.out, "output file (default stdout)");

  auto* eval = app.add_subcommand("eval", "evaluate J_nu(z;q^2) and its derivative");
  eval->add_option("--z,z", c.z, "arguments: decimals or q^<e>, e.g. q^-5");
  auto* zeros = app.add_subcommand("zeros", "tabulate positive zeros j_1..j_kmax");
  auto* verify = app.add_subcommand("verify", "run the verification suite");
  verify->add_option("--check", c.checks, "check id (repeatable; default all)");
  auto* expand = app.add_subcommand("expand", "q-Fourier-Bessel expansion of --f");
  expand->add_option("--plot", c.plot, "CSV of (m, |I_m|, |I_m| q^-m, envelope) for plotting");
  expand->add_option("--convergence", c.convergence, "CSV of partial sums on the lattice");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (*eval) return cmd_eval(c);
    if (*zeros) return cmd_zeros(c);
    if (*verify) return cmd_verify(c);
    if (*expand) return cmd_expand(c);
  } catch (const std::exception& e) {
    std::cerr << "qfb: error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
