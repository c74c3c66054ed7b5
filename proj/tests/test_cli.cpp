#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "qfb/expansion.hpp"

#ifdef QFB_CLI_PATH

using namespace qfb;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::filesystem::path scratch() {
  static const std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() / ("qfb_cli_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Run run(const std::string& args) {
  const auto err_path = scratch() / "stderr.txt";
  const std::string command = std::string("'") + QFB_CLI_PATH + "' " + args + " 2>'" + err_path.string() + "'";
  Run r;
  FILE* pipe = ::popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buffer{};
  std::size_t n;
  while ((n = std::fread(buffer.data(), 1, buffer.size(), pipe)) > 0) r.out.append(buffer.data(), n);
  const int status = ::pclose(pipe);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_path);
  return r;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          cell += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        cells.push_back(cell);
        cell.clear();
      } else {
        cell += c;
      }
    }
    cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

Real dec(const std::string& text) { return Real(std::string_view(text), 1024); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("eval at the origin") {
    const Run zero = run("--q 0.5 --nu 0 --format csv eval --z 0");
    REQUIRE(zero.status == 0);
    const auto rows = csv_rows(zero.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"z", "J", "dJ", "terms", "digits_used", "escalations", "cancellation_digits"});
    // At nu = 0 the prefactor (q^2;q^2)_inf / (q^2;q^2)_inf is one and so is J(0).
    CHECK(dec(rows[1][1]) == 1);
    CHECK(rows[1][2] == "undefined");
    const Run one = run("--q 0.5 --nu 1 --format csv eval --z 0");
    REQUIRE(one.status == 0);
    CHECK(dec(csv_rows(one.out)[1][1]).is_zero());
  }

  TEST_CASE("eval far out widens the precision and agrees with a doubled-precision rerun") {
    const Run a = run("--q 0.5 --nu 0 --digits 120 --format csv eval --z q^-5");
    const Run b = run("--q 0.5 --nu 0 --digits 240 --format csv eval --z q^-5");
    REQUIRE(a.status == 0);
    REQUIRE(b.status == 0);
    const auto ra = csv_rows(a.out)[1];
    const auto rb = csv_rows(b.out)[1];
    CHECK(std::stol(ra[4]) > 120);
    CHECK(std::stod(ra[6]) > 5);
    CHECK(abs(dec(ra[1]) - dec(rb[1])) <= abs(dec(rb[1])) * dec("1e-115"));
  }

  TEST_CASE("an invalid base exits nonzero and names the invariant") {
    const Run r = run("--q 1.2 eval --z 1");
    CHECK(r.status != 0);
    CHECK(r.err.find("q must lie strictly inside (0,1)") != std::string::npos);
  }

  TEST_CASE("zeros table") {
    const Run r = run("--q 0.5 --nu 0 --kmax 8 --format csv zeros");
    REQUIRE(r.status == 0);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 9);
    CHECK(rows[0] == std::vector<std::string>{"k", "j", "epsilon_k", "alpha_k", "digits", "asymptotic_bracket"});
    for (std::size_t i = 2; i < rows.size(); ++i) CHECK(dec(rows[i - 1][1]) < dec(rows[i][1]));
    for (std::size_t i = 4; i < rows.size(); ++i) {
      CHECK(dec(rows[i][2]) > 0);
      CHECK(dec(rows[i][2]) < dec(rows[i][3]));
    }
    // Cross-check against the dense scan below q^-6.
    const auto scan = oracle::scan_zeros(oracle::Float(0), oracle::Float("0.5"), oracle::Float("0.05"), oracle::Float(64));
    REQUIRE(scan.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(oracle::relative_error(dec(rows[i + 1][1]), scan[i]) < 1e-30);
  }

  TEST_CASE("an empty zero table") {
    const Run r = run("--kmax 0 --format csv zeros");
    CHECK(r.status == 0);
    CHECK(csv_rows(r.out).size() == 1);
  }

  TEST_CASE("outputs are deterministic") {
    const std::string args = "--q 0.3 --nu 0.5 --kmax 6 zeros";
    const Run a = run(args);
    const Run b = run(args);
    CHECK(a.status == 0);
    CHECK(a.out == b.out);
    const Run c = run("--kmax 6 --K 4 --points 8 --format json expand");
    const Run d = run("--kmax 6 --K 4 --points 8 --format json expand");
    CHECK(c.status == 0);
    CHECK(c.out == d.out);
  }

  TEST_CASE("large k needs an explicit override") {
    CHECK(run("--kmax 20 zeros").status == 2);
  }

  TEST_CASE("verify selects checks and reports the exit code") {
    const Run gram = run("--kmax 8 --format csv verify --check gram");
    CHECK(gram.status == 0);
    const auto rows = csv_rows(gram.out);
    REQUIRE(rows.size() > 1);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][0] == "gram");
    const Run bogus = run("verify --check nonsense");
    CHECK(bogus.status == 2);
    CHECK(bogus.err.find("gram") != std::string::npos);
  }

  TEST_CASE("flagship verification run") {
    const Run r = run("--q 0.5 --nu 0 --kmax 10 --digits 120 --format json verify");
    CHECK(r.status == 0);
    const auto j = nlohmann::json::parse(r.out);
    for (const auto& row : j.at("rows")) CHECK(row.at("status") != "fail");
  }

  TEST_CASE("Riemann-Lebesgue check on a user lattice function") {
    const QParams params("0.5", "0");
    const Bits bits = bits_for_digits(120);
    const auto f = LatticeFunction::sample(params, 60, [](const Real& t) { return 1L + t * t; }, bits);
    const auto path = scratch() / "f.json";
    std::ofstream(path) << f.to_json().dump(2);
    const Run r = run("--q 0.5 --nu 0 --kmax 6 --format json --f '" + path.string() + "' verify --check riemann-lebesgue");
    REQUIRE(r.status == 0);
    const auto rows = nlohmann::json::parse(r.out).at("rows");
    REQUIRE(rows.size() >= 6);
    // Independent envelope: (integral of t f^2)^(1/2) eta_m^(1/2) with eta_m by straight summation.
    const auto zeros = compute_zeros(params, 6, PrecisionContext::with_digits(60));
    const oracle::Float q("0.5");
    const oracle::Float b = q * q;
    oracle::Float norm = 0;
    oracle::Float t = 1;
    for (std::size_t i = 0; i < 60; ++i, t *= q) norm += (1 - q) * t * t * pow(1 + t * t, 2);
    long checked = 0;
    for (const auto& row : rows) {
      if (!row.at("parameters").contains("m")) continue;
      const long m = row.at("parameters").at("m");
      const oracle::Float j = oracle::to_float(zeros.at(m).j);
      oracle::Float eta = 0;
      oracle::Float s = 1;
      // At nu = 0 the prefactor of J_0(.; b) is one.
      for (int i = 0; i < 700; ++i, s *= q) eta += (1 - q) * s * s * pow(oracle::jnu3_series(oracle::Float(0), b, q * j * s), 2);
      const oracle::Float envelope = sqrt(norm * eta);
      const std::string margin = row.at("margin");
      const auto at = margin.find("envelope=");
      REQUIRE(at != std::string::npos);
      const double reported = std::stod(margin.substr(at + 9));
      CHECK(std::abs(reported / envelope.convert_to<double>() - 1) < 1e-5);
      CHECK(row.at("status") == "pass");
      ++checked;
    }
    CHECK(checked == 6);
  }

  TEST_CASE("expand a basis function") {
    const Run r = run("--q 0.5 --nu 0 --kmax 6 --K 4 --points 10 --f mode:2 --format json expand");
    REQUIRE(r.status == 0);
    const auto j = nlohmann::json::parse(r.out);
    for (const auto& mode : j.at("modes")) {
      const Real a = dec(mode.at("a").get<std::string>());
      const Real target(mode.at("k") == 2 ? 1L : 0L, 1024);
      CHECK(abs(a - target) < dec("1e-40"));
    }
    for (const auto& sum : j.at("partial_sums")) {
      const auto lattice = sum.at("lattice");
      CHECK(LatticeFunction::from_json(lattice).to_json() == lattice);
    }
  }

  TEST_CASE("expand writes plot and convergence tables") {
    const auto plot = scratch() / "plot.csv";
    const auto conv = scratch() / "conv.csv";
    const Run r =
        run("--kmax 6 --K 4 --points 8 expand --plot '" + plot.string() + "' --convergence '" + conv.string() + "'");
    REQUIRE(r.status == 0);
    const auto plot_rows = csv_rows(slurp(plot));
    REQUIRE(plot_rows.size() == 5);
    CHECK(plot_rows[0] == std::vector<std::string>{"m", "abs_I_m", "abs_I_m_scaled", "envelope"});
    const auto conv_rows = csv_rows(slurp(conv));
    REQUIRE(conv_rows.size() == 9);
    CHECK(conv_rows[0].size() == 7);
  }

  TEST_CASE("expand errors") {
    const Run many = run("--kmax 6 --K 7 expand");
    CHECK(many.status == 2);
    CHECK_FALSE(many.err.empty());
    CHECK(run("--f /nonexistent/f.json expand").status == 2);
    const auto bad = scratch() / "bad.json";
    std::ofstream(bad) << R"({"q": "0.5", "values": [1, 2]})";
    CHECK(run("--f '" + bad.string() + "' expand").status == 2);
    const auto other = scratch() / "other.json";
    std::ofstream(other) << R"({"q": "0.25", "values": ["1", "2"]})";
    CHECK(run("--f '" + other.string() + "' expand").status == 2);
  }
}

#endif
