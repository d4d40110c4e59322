#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "sprify/descriptor_system.hpp"
#include "sprify/synthesis.hpp"
#include "sprify/types.hpp"

namespace sprify {

using nlohmann::json;

inline json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Matrix matrix_from_json(const json& j, const std::string& name, Index rows, Index cols) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    fail(ErrorCode::parse_error, name + ": expected " + std::to_string(rows) + " rows");
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      fail(ErrorCode::parse_error, name + ": row " + std::to_string(i) + " must have " + std::to_string(cols) +
                                       " entries");
    for (Index k = 0; k < cols; ++k) {
      const json& v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) fail(ErrorCode::parse_error, name + ": entries must be numbers");
      M(i, k) = v.get<double>();  // integers widen to double here
    }
  }
  if (!M.allFinite()) fail(ErrorCode::parse_error, name + ": non-finite entries");
  return M;
}

/// SystemFile: { "n": 2, "m": 1, "E": [[...]], "A": ..., "B": ..., "C": ..., "D": ... }
inline DescriptorSystem parse_system(const json& j) {
  if (!j.is_object()) fail(ErrorCode::parse_error, "system file: expected a JSON object");
  for (const char* key : {"n", "m", "E", "A", "B", "C", "D"})
    if (!j.contains(key)) fail(ErrorCode::parse_error, std::string("system file: missing key \"") + key + "\"");
  if (!j["n"].is_number_integer() || !j["m"].is_number_integer())
    fail(ErrorCode::parse_error, "system file: n and m must be integers");
  const Index n = j["n"].get<Index>();
  const Index m = j["m"].get<Index>();
  if (n < 1 || m < 1) fail(ErrorCode::parse_error, "system file: n and m must be positive");
  DescriptorSystem sys;
  sys.E = matrix_from_json(j["E"], "E", n, n);
  sys.A = matrix_from_json(j["A"], "A", n, n);
  sys.B = matrix_from_json(j["B"], "B", n, m);
  sys.C = matrix_from_json(j["C"], "C", m, n);
  sys.D = matrix_from_json(j["D"], "D", m, m);
  return sys;
}

inline json system_to_json(const DescriptorSystem& sys) {
  return json{{"n", sys.n()},          {"m", sys.m()},          {"E", matrix_to_json(sys.E)},
              {"A", matrix_to_json(sys.A)}, {"B", matrix_to_json(sys.B)}, {"C", matrix_to_json(sys.C)},
              {"D", matrix_to_json(sys.D)}};
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::parse_error, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, path + ": " + e.what());
  }
}

inline DescriptorSystem load_system(const std::string& path) { return parse_system(load_json_file(path)); }

struct ControllerData {
  Matrix K, L;
  std::optional<Matrix> H1, D2, A2, B2, C2, N, P, Q;
  std::optional<double> kappa;
};

/// ControllerFile: { "K": [[...]], "L": [[...]], "intermediates": { ... } }
inline ControllerData parse_controller(const json& j) {
  if (!j.is_object()) fail(ErrorCode::parse_error, "controller file: expected a JSON object");
  for (const char* key : {"K", "L"})
    if (!j.contains(key)) fail(ErrorCode::parse_error, std::string("controller file: missing key \"") + key + "\"");
  if (!j["K"].is_array() || j["K"].empty())
    fail(ErrorCode::parse_error, "controller file: K must be a nonempty 2d array");
  const Index m = static_cast<Index>(j["K"].size());
  ControllerData c;
  c.K = matrix_from_json(j["K"], "K", m, m);
  c.L = matrix_from_json(j["L"], "L", m, m);
  if (j.contains("intermediates")) {
    const json& im = j["intermediates"];
    if (!im.is_object()) fail(ErrorCode::parse_error, "controller file: intermediates must be an object");
    auto grab = [&](const char* key, std::optional<Matrix>& slot) {
      if (!im.contains(key)) return;
      const json& v = im[key];
      if (!v.is_array() || v.empty() || !v[0].is_array() || v[0].empty())
        fail(ErrorCode::parse_error, std::string("controller file: intermediates.") + key + " must be a 2d array");
      slot = matrix_from_json(v, key, static_cast<Index>(v.size()), static_cast<Index>(v[0].size()));
    };
    grab("H1", c.H1);
    grab("D2", c.D2);
    grab("A2", c.A2);
    grab("B2", c.B2);
    grab("C2", c.C2);
    grab("N", c.N);
    grab("P", c.P);
    grab("Q", c.Q);
    if (im.contains("kappa")) {
      if (!im["kappa"].is_number()) fail(ErrorCode::parse_error, "controller file: intermediates.kappa must be a number");
      c.kappa = im["kappa"].get<double>();
    }
  }
  return c;
}

inline ControllerData load_controller(const std::string& path) { return parse_controller(load_json_file(path)); }

inline json controller_to_json(const ControllerGains& gains, const GinvDecomposition& dec) {
  json im{{"H1", matrix_to_json(dec.H1)}, {"D2", matrix_to_json(dec.D2)}, {"N", matrix_to_json(gains.N)},
          {"kappa", gains.kappa}};
  if (dec.has_R) {
    im["A2"] = matrix_to_json(dec.A2);
    im["B2"] = matrix_to_json(dec.B2);
    im["C2"] = matrix_to_json(dec.C2);
  }
  if (gains.P) im["P"] = matrix_to_json(*gains.P);
  if (gains.Q.size() > 0) im["Q"] = matrix_to_json(gains.Q);
  return json{{"K", matrix_to_json(gains.K)}, {"L", matrix_to_json(gains.L)}, {"intermediates", std::move(im)}};
}

/// Parses "a", "bi", "a+bi", "a-bi" (also "i", "-i"); exponents allowed in
/// either part.
inline Complex parse_complex(const std::string& text) {
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
  if (s.empty()) fail(ErrorCode::parse_error, "parse_complex: empty string");

  auto parse_real = [](const std::string& part) -> double {
    if (part == "+" || part == "") return 1.0;
    if (part == "-") return -1.0;
    char* end = nullptr;
    const double v = std::strtod(part.c_str(), &end);
    if (end != part.c_str() + part.size())
      fail(ErrorCode::parse_error, "parse_complex: cannot parse \"" + part + "\"");
    return v;
  };

  // split before the sign that separates real and imaginary parts
  std::size_t split = std::string::npos;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') split = i;
  }
  const bool has_i = s.back() == 'i';
  if (split == std::string::npos) {
    if (has_i) return Complex(0.0, parse_real(s.substr(0, s.size() - 1)));
    return Complex(parse_real(s), 0.0);
  }
  if (!has_i) fail(ErrorCode::parse_error, "parse_complex: expected trailing 'i' in \"" + text + "\"");
  return Complex(parse_real(s.substr(0, split)), parse_real(s.substr(split, s.size() - split - 1)));
}

}  // namespace sprify
