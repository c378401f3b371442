#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pilot/errors.hpp"

namespace pilot {

/// The three control variables produced by the policy for one step.
/// Out of evaluate_policy(): p_m, p_s in (0,1) and p_v in (0,0.5), open
/// intervals because the sigmoid never attains its bounds. Fixed overrides
/// bypass the sigmoid and may sit exactly on an endpoint.
struct PolicyOutputs {
  double p_m = 0.0;
  double p_v = 0.0;
  double p_s = 0.0;
};

/// Learnable policy: three degree-d polynomials in rho, one per control
/// variable, 3(d+1) scalar coefficients total. Index k holds the coefficient
/// of rho^k.
struct PolicyCoefficients {
  int degree = 0;
  std::vector<double> m;
  std::vector<double> v;
  std::vector<double> s;

  /// Starts near the Adam-like regime: p_m ~ 0.88, p_v ~ 0.44, p_s ~ 0.12.
  static PolicyCoefficients defaults(int degree) {
    PolicyCoefficients phi;
    phi.degree = degree;
    phi.m.assign(static_cast<std::size_t>(degree) + 1, 0.0);
    phi.v.assign(static_cast<std::size_t>(degree) + 1, 0.0);
    phi.s.assign(static_cast<std::size_t>(degree) + 1, 0.0);
    phi.m[0] = 2.0;
    phi.v[0] = 2.0;
    phi.s[0] = -2.0;
    return phi;
  }

  void validate() const {
    if (degree < 0) {
      throw ContractViolation("PolicyCoefficients: degree must be >= 0");
    }
    const std::size_t want = static_cast<std::size_t>(degree) + 1;
    if (m.size() != want || v.size() != want || s.size() != want) {
      throw ContractViolation("PolicyCoefficients: expected " + std::to_string(want) +
                              " coefficients per polynomial");
    }
    for (const auto* coeffs : {&m, &v, &s}) {
      for (double c : *coeffs) {
        if (!std::isfinite(c)) {
          throw ContractViolation("PolicyCoefficients: non-finite coefficient");
        }
      }
    }
  }
};

/// sum_k c_k x^k by nested multiplication. c[k] is the coefficient of x^k.
inline double horner_eval(std::span<const double> coeffs, double x) {
  if (coeffs.empty()) {
    throw ContractViolation("horner_eval: at least one coefficient required");
  }
  double acc = coeffs.back();
  for (std::size_t i = coeffs.size() - 1; i-- > 0;) {
    acc = acc * x + coeffs[i];
  }
  return acc;
}

/// Overflow-safe logistic sigmoid.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline void check_rho_bound(double rho, const char* who) {
  if (!(std::abs(rho) <= 1.0)) {
    throw ContractViolation(std::string(who) + ": |rho| must be <= 1, got " +
                            std::to_string(rho));
  }
}

/// Maps the smoothed agreement rho to the control variables:
///   p_m = sigmoid(f(rho; phi_m)), p_s = sigmoid(f(rho; phi_s)),
///   p_v = 0.5 * sigmoid(f(rho; phi_v)).
inline PolicyOutputs evaluate_policy(const PolicyCoefficients& phi, double rho) {
  check_rho_bound(rho, "evaluate_policy");
  PolicyOutputs out;
  out.p_m = sigmoid(horner_eval(phi.m, rho));
  out.p_v = 0.5 * sigmoid(horner_eval(phi.v, rho));
  out.p_s = sigmoid(horner_eval(phi.s, rho));
  return out;
}

/// Per-coefficient partials of the control variables at fixed rho:
///   d p / d c_k = sigma'(f) * rho^k,   sigma' = sigma (1 - sigma),
/// additionally halved for p_v. Entry k corresponds to c_k.
struct PolicyJacobian {
  std::vector<double> m;
  std::vector<double> v;
  std::vector<double> s;
};

inline PolicyJacobian policy_jacobian(const PolicyCoefficients& phi, double rho) {
  check_rho_bound(rho, "policy_jacobian");
  const std::size_t n = static_cast<std::size_t>(phi.degree) + 1;
  PolicyJacobian jac;
  jac.m.resize(n);
  jac.v.resize(n);
  jac.s.resize(n);
  const double sm = sigmoid(horner_eval(phi.m, rho));
  const double sv = sigmoid(horner_eval(phi.v, rho));
  const double ss = sigmoid(horner_eval(phi.s, rho));
  const double dm = sm * (1.0 - sm);
  const double dv = 0.5 * sv * (1.0 - sv);
  const double ds = ss * (1.0 - ss);
  double power = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    jac.m[k] = dm * power;
    jac.v[k] = dv * power;
    jac.s[k] = ds * power;
    power *= rho;
  }
  return jac;
}

namespace detail {

inline std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace detail

/// Writes coefficients as a plain-text key-value file:
///   degree = d
///   m_k = <float>, v_k = <float>, s_k = <float>   for k = 0..d
/// Floats carry 17 significant digits so save/load round-trips bit-exactly.
inline void save_policy(const PolicyCoefficients& phi, const std::string& path) {
  phi.validate();
  std::ofstream out(path);
  if (!out) {
    throw IoError("save_policy: cannot open '" + path + "' for writing");
  }
  out << "degree = " << phi.degree << "\n";
  for (int k = 0; k <= phi.degree; ++k) {
    const auto i = static_cast<std::size_t>(k);
    out << "m_" << k << " = " << detail::format_g17(phi.m[i]) << "\n";
    out << "v_" << k << " = " << detail::format_g17(phi.v[i]) << "\n";
    out << "s_" << k << " = " << detail::format_g17(phi.s[i]) << "\n";
  }
  if (!out.good()) {
    throw IoError("save_policy: write to '" + path + "' failed");
  }
}

inline PolicyCoefficients load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("load_policy: cannot open '" + path + "'");
  }
  auto fail = [&path](int line, const std::string& msg) -> void {
    throw ConfigError("policy file '" + path + "': line " + std::to_string(line) +
                      ": " + msg);
  };

  std::map<std::string, double> values;
  std::map<std::string, int> value_lines;
  int degree = -1;
  int degree_line = 0;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "missing key");
    if (value.empty()) fail(line_no, "missing value for '" + key + "'");

    if (key == "degree") {
      if (degree >= 0) fail(line_no, "duplicate 'degree'");
      try {
        std::size_t used = 0;
        degree = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail(line_no, "invalid degree '" + value + "'");
      }
      if (degree < 0) fail(line_no, "degree must be >= 0");
      degree_line = line_no;
      continue;
    }
    char* end = nullptr;
    const double parsed = std::strtod(value.c_str(), &end);
    if (end != value.c_str() + value.size()) {
      fail(line_no, "invalid float '" + value + "' for '" + key + "'");
    }
    if (values.count(key)) fail(line_no, "duplicate key '" + key + "'");
    values[key] = parsed;
    value_lines[key] = line_no;
  }
  if (degree < 0) {
    throw ConfigError("policy file '" + path + "': missing 'degree' line");
  }

  PolicyCoefficients phi;
  phi.degree = degree;
  const std::size_t n = static_cast<std::size_t>(degree) + 1;
  phi.m.resize(n);
  phi.v.resize(n);
  phi.s.resize(n);
  std::size_t consumed = 0;
  const std::array<std::pair<const char*, std::vector<double>*>, 3> families = {
      {{"m_", &phi.m}, {"v_", &phi.v}, {"s_", &phi.s}}};
  for (int k = 0; k <= degree; ++k) {
    for (auto [prefix, dest] : families) {
      const std::string key = prefix + std::to_string(k);
      const auto it = values.find(key);
      if (it == values.end()) {
        throw ConfigError("policy file '" + path + "': degree " +
                          std::to_string(degree) + " declared on line " +
                          std::to_string(degree_line) + " but '" + key +
                          "' is missing (degree mismatch)");
      }
      (*dest)[static_cast<std::size_t>(k)] = it->second;
      ++consumed;
    }
  }
  if (consumed != values.size()) {
    for (const auto& [key, unused] : values) {
      const bool known = [&] {
        if (key.size() < 3 || key[1] != '_') return false;
        if (key[0] != 'm' && key[0] != 'v' && key[0] != 's') return false;
        try {
          const int k = std::stoi(key.substr(2));
          return k >= 0 && k <= degree;
        } catch (const std::exception&) {
          return false;
        }
      }();
      if (!known) {
        throw ConfigError("policy file '" + path + "': line " +
                          std::to_string(value_lines.at(key)) + ": unexpected key '" +
                          key + "' for degree " + std::to_string(degree) +
                          " (degree mismatch)");
      }
    }
  }
  phi.validate();
  return phi;
}

}  // namespace pilot
