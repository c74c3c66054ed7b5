// Python bindings. Numbers cross the boundary as decimal strings and results as
// JSON documents, the same representation the command-line tool writes.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "qfb/verify.hpp"

namespace py = pybind11;

namespace {

qfb::PrecisionContext context(long digits) {
  qfb::PrecisionContext ctx = qfb::PrecisionContext::with_digits(digits);
  ctx.validate();
  return ctx;
}

qfb::Base parse_base(const std::string& base) {
  if (base == "q") return qfb::Base::q;
  if (base == "q^2") return qfb::Base::q_squared;
  throw std::invalid_argument("base must be 'q' or 'q^2', got '" + base + "'");
}

qfb::LatticeIntegrand integrand(const std::string& spec, const qfb::QParams& params, qfb::FourierBessel* engine,
                                qfb::Bits bits) {
  if (auto builtin = qfb::builtin_integrand(spec, params, engine, bits)) return *builtin;
  // Otherwise a lattice function JSON document.
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(spec);
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("f must be one | zero | constant:<c> | power:<s> | mode:<n> | lattice JSON");
  }
  return qfb::LatticeIntegrand::from_lattice(qfb::LatticeFunction::from_json(j), params);
}

std::string evaluate(const std::string& q, const std::string& nu, const std::string& z, long digits,
                     const std::string& base) {
  const qfb::QParams params(q, nu);
  const qfb::PrecisionContext ctx = context(digits);
  const qfb::HahnExtonBessel bessel(params, parse_base(base), ctx);
  const qfb::Real zr = qfb::Real::parse(z, std::max<qfb::Bits>(ctx.bits(), 64));
  nlohmann::json out = {{"q", q}, {"nu", nu}, {"z", z}, {"base", base}};
  out["value"] = bessel.value(zr).to_json();
  try {
    out["derivative"] = bessel.derivative(zr).to_json();
  } catch (const qfb::DomainError&) {
    out["derivative"] = nullptr;
  }
  return out.dump();
}

std::string zeros(const std::string& q, const std::string& nu, long k_max, long digits) {
  return qfb::compute_zeros(qfb::QParams(q, nu), k_max, context(digits)).to_json().dump();
}

std::string verify(const std::string& q, const std::string& nu, long k_max, long digits,
                   const std::vector<std::string>& checks, const std::optional<std::string>& f) {
  qfb::VerifyConfig config;
  config.params = qfb::QParams(q, nu);
  config.ctx = context(digits);
  config.k_max = k_max;
  if (f) config.functions.push_back(integrand(*f, config.params, nullptr, config.ctx.bits()));
  return qfb::run_verification(config, checks).to_json().dump();
}

std::string expand(const std::string& q, const std::string& nu, const std::string& f, long K, long k_max,
                   std::size_t points, long digits) {
  const qfb::QParams params(q, nu);
  const qfb::PrecisionContext ctx = context(digits);
  qfb::FourierBessel engine(qfb::compute_zeros(params, std::max(k_max, K), ctx), ctx);
  const qfb::LatticeIntegrand g = integrand(f, params, &engine, ctx.bits());
  return engine.expand(g, K, points).to_json().dump();
}

std::string qintegral_power(const std::string& q, const std::string& s, long digits) {
  const qfb::PrecisionContext ctx = context(digits);
  const qfb::Real qr = qfb::QParams(q, "0").q(ctx.bits());
  const qfb::Real sr = qfb::Real::parse(s, ctx.bits());
  const auto r = qfb::qintegral_01([&sr](const qfb::Real& t) { return pow(t, sr); }, qr, ctx);
  return r.value.to_string(digits);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hahn-Exton q-Bessel functions, their zeros and q-Fourier-Bessel expansions";
  m.def("evaluate", &evaluate, py::arg("q"), py::arg("nu"), py::arg("z"), py::arg("digits") = 120,
        py::arg("base") = "q^2");
  m.def("zeros", &zeros, py::arg("q"), py::arg("nu"), py::arg("k_max"), py::arg("digits") = 120);
  m.def("verify", &verify, py::arg("q"), py::arg("nu"), py::arg("k_max") = 12, py::arg("digits") = 120,
        py::arg("checks") = std::vector<std::string>{}, py::arg("f") = std::nullopt);
  m.def("expand", &expand, py::arg("q"), py::arg("nu"), py::arg("f") = "one", py::arg("K") = 8, py::arg("k_max") = 12,
        py::arg("points") = 24, py::arg("digits") = 120);
  m.def("qintegral_power", &qintegral_power, py::arg("q"), py::arg("s"), py::arg("digits") = 120);
  m.def("check_ids", &qfb::check_ids);
  m.def("check_anchor", &qfb::check_anchor, py::arg("check"));
}
