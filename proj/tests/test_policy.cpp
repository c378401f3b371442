#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "pilot/policy.hpp"
#include "pilot/rng.hpp"

using namespace pilot;

namespace {

PolicyCoefficients random_policy(Rng& rng, int degree, double lo = -3.0,
                                 double hi = 3.0) {
  PolicyCoefficients phi = PolicyCoefficients::defaults(degree);
  for (auto* part : {&phi.m, &phi.v, &phi.s}) {
    for (double& c : *part) c = rng.uniform(lo, hi);
  }
  return phi;
}

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "pilot_policy_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("horner_eval basics") {
  CHECK(horner_eval(DenseVector{5.0}, 0.37) == 5.0);
  CHECK(horner_eval(DenseVector{5.0}, -0.9) == 5.0);
  // 1 + 2x + 3x^2 at x = 2 -> 17 (naive power sum gives the same)
  CHECK(horner_eval(DenseVector{1, 2, 3}, 2.0) == 17.0);
  CHECK(oracles::naive_poly(DenseVector{1, 2, 3}, 2.0) == 17.0);
  CHECK_THROWS_AS(horner_eval(DenseVector{}, 0.0), ContractViolation);
}

TEST_CASE("horner matches naive evaluation for degrees 0-6") {
  Rng rng(17);
  for (int degree = 0; degree <= 6; ++degree) {
    for (int trial = 0; trial < 200; ++trial) {
      const auto coeffs =
          oracles::random_vector(rng, static_cast<std::size_t>(degree) + 1, -5.0, 5.0);
      const double x = rng.uniform(-1.0, 1.0);
      const double got = horner_eval(coeffs, x);
      const double want = oracles::naive_poly(coeffs, x);
      CHECK(std::abs(got - want) <= 1e-13 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("zero coefficients give the sigmoid midpoint outputs") {
  PolicyCoefficients phi = PolicyCoefficients::defaults(3);
  phi.m.assign(4, 0.0);
  phi.v.assign(4, 0.0);
  phi.s.assign(4, 0.0);
  for (double rho : {-1.0, -0.25, 0.0, 0.8}) {
    const PolicyOutputs out = evaluate_policy(phi, rho);
    CHECK(out.p_m == 0.5);
    CHECK(out.p_v == 0.25);
    CHECK(out.p_s == 0.5);
  }
}

TEST_CASE("large constant coefficient saturates p_m") {
  PolicyCoefficients phi = PolicyCoefficients::defaults(2);
  phi.m = {20.0, 0.0, 0.0};
  const PolicyOutputs out = evaluate_policy(phi, 0.3);
  CHECK(out.p_m == Catch::Approx(1.0).margin(1e-8));
  CHECK(out.p_m < 1.0);
}

TEST_CASE("hand-computed degree-2 evaluation") {
  // f(0.4) = 1 - 0.4 + 0.5 * 0.16 = 0.68, sigmoid(0.68) ~ 0.66374
  PolicyCoefficients phi = PolicyCoefficients::defaults(2);
  phi.m = {1.0, -1.0, 0.5};
  const PolicyOutputs out = evaluate_policy(phi, 0.4);
  CHECK(out.p_m == Catch::Approx(0.66374).margin(5e-6));
}

TEST_CASE("evaluate_policy rejects out-of-range rho") {
  const auto phi = PolicyCoefficients::defaults(1);
  CHECK_THROWS_AS(evaluate_policy(phi, 1.5), ContractViolation);
  CHECK_THROWS_AS(evaluate_policy(phi, std::nan("")), ContractViolation);
}

TEST_CASE("policy output ranges hold strictly over random draws") {
  Rng rng(4242);
  for (int trial = 0; trial < 10000; ++trial) {
    const int degree = static_cast<int>(rng.uniform_index(4)) + 1;
    const auto phi = random_policy(rng, degree);
    const double rho = rng.uniform(-1.0, 1.0);
    const PolicyOutputs out = evaluate_policy(phi, rho);
    CHECK(out.p_m > 0.0);
    CHECK(out.p_m < 1.0);
    CHECK(out.p_s > 0.0);
    CHECK(out.p_s < 1.0);
    CHECK(out.p_v > 0.0);
    CHECK(out.p_v < 0.5);
  }
}

TEST_CASE("degree 1 response is affine in rho") {
  Rng rng(91);
  const auto phi = random_policy(rng, 1);
  // Second differences of f over a uniform grid vanish for an affine map.
  const double h = 0.05;
  for (double rho = -0.95; rho <= 0.95; rho += h) {
    const double f0 = horner_eval(phi.m, rho - h);
    const double f1 = horner_eval(phi.m, rho);
    const double f2 = horner_eval(phi.m, rho + h);
    CHECK(std::abs(f2 - 2.0 * f1 + f0) <= 1e-12);
  }
}

TEST_CASE("policy jacobian at zero coefficients and rho = 0") {
  const auto phi = [&] {
    PolicyCoefficients p = PolicyCoefficients::defaults(3);
    p.m.assign(4, 0.0);
    p.v.assign(4, 0.0);
    p.s.assign(4, 0.0);
    return p;
  }();
  const PolicyJacobian jac = policy_jacobian(phi, 0.0);
  CHECK(jac.m[0] == 0.25);   // sigma'(0) = 0.25
  CHECK(jac.v[0] == 0.125);  // halved for p_v
  CHECK(jac.s[0] == 0.25);
  for (std::size_t k = 1; k < 4; ++k) {
    CHECK(jac.m[k] == 0.0);
    CHECK(jac.v[k] == 0.0);
    CHECK(jac.s[k] == 0.0);
  }
}

TEST_CASE("policy jacobian matches central finite differences") {
  Rng rng(2024);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const int degree = static_cast<int>(rng.uniform_index(3)) + 1;
    const auto phi = random_policy(rng, degree);
    const double rho = rng.uniform(-1.0, 1.0);
    const PolicyJacobian jac = policy_jacobian(phi, rho);

    auto fd = [&](std::vector<double> PolicyCoefficients::* member, std::size_t k,
                  auto select) {
      PolicyCoefficients up = phi;
      (up.*member)[k] += h;
      PolicyCoefficients down = phi;
      (down.*member)[k] -= h;
      return (select(evaluate_policy(up, rho)) - select(evaluate_policy(down, rho))) /
             (2.0 * h);
    };

    for (std::size_t k = 0; k <= static_cast<std::size_t>(degree); ++k) {
      const double fm = fd(&PolicyCoefficients::m, k,
                           [](const PolicyOutputs& o) { return o.p_m; });
      const double fv = fd(&PolicyCoefficients::v, k,
                           [](const PolicyOutputs& o) { return o.p_v; });
      const double fs = fd(&PolicyCoefficients::s, k,
                           [](const PolicyOutputs& o) { return o.p_s; });
      CHECK(oracles::grad_close(jac.m[k], fm, 1e-6, 1e-10));
      CHECK(oracles::grad_close(jac.v[k], fv, 1e-6, 1e-10));
      CHECK(oracles::grad_close(jac.s[k], fs, 1e-6, 1e-10));
    }
  }
}

TEST_CASE("save/load round-trips coefficients bit-exactly") {
  Rng rng(7);
  const auto phi = random_policy(rng, 3, -10.0, 10.0);
  const auto path = temp_file("roundtrip.txt").string();
  save_policy(phi, path);
  const PolicyCoefficients loaded = load_policy(path);
  CHECK(loaded.degree == phi.degree);
  CHECK(loaded.m == phi.m);
  CHECK(loaded.v == phi.v);
  CHECK(loaded.s == phi.s);
}

TEST_CASE("loaded coefficients evaluate identically to the saved ones") {
  Rng rng(70);
  const auto phi = random_policy(rng, 2);
  const auto path = temp_file("evaluate.txt").string();
  save_policy(phi, path);
  const PolicyCoefficients loaded = load_policy(path);
  for (int i = 0; i < 100; ++i) {
    const double rho = rng.uniform(-1.0, 1.0);
    const PolicyOutputs a = evaluate_policy(phi, rho);
    const PolicyOutputs b = evaluate_policy(loaded, rho);
    CHECK(a.p_m == b.p_m);
    CHECK(a.p_v == b.p_v);
    CHECK(a.p_s == b.p_s);
  }
}

TEST_CASE("policy file with a missing coefficient is a degree mismatch") {
  Rng rng(71);
  const auto phi = random_policy(rng, 2);
  const auto path = temp_file("missing.txt").string();
  save_policy(phi, path);
  // Drop the final line (s_2), leaving 3(d+1) - 1 values.
  std::ifstream in(path);
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  in.close();
  contents.erase(contents.rfind("s_2"));
  std::ofstream out(path);
  out << contents;
  out.close();
  CHECK_THROWS_WITH(load_policy(path), Catch::Matchers::ContainsSubstring("s_2") &&
                                           Catch::Matchers::ContainsSubstring("degree"));
}

TEST_CASE("malformed policy files name the offending line") {
  const auto path = temp_file("malformed.txt").string();
  std::ofstream out(path);
  out << "degree = 1\n"
      << "m_0 = 0.5\n"
      << "v_0 = not_a_number\n";
  out.close();
  CHECK_THROWS_WITH(load_policy(path), Catch::Matchers::ContainsSubstring("line 3"));
  CHECK_THROWS_AS(load_policy(temp_file("does_not_exist.txt").string()), IoError);
}
