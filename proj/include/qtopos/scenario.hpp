#pragma once

// Scenario documents: JSON descriptions of a Hilbert space, named operators,
// states and commuting groups. Complex numbers are encoded as [re, im] and
// matrices as row-major nested arrays of them.
//
// {
//   "dimension": 2,
//   "tolerance": 1e-9,
//   "builtins": ["pauli2"],
//   "operators": [{"name": "H", "matrix": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]}],
//   "projectors": [{"name": "Pzplus", "of": "Z", "eigenvalues": [1]}],
//   "states": [{"name": "zplus", "vector": [[1, 0], [0, 0]]}],
//   "contexts": [["H"]],
//   "closure": "intersections"
// }

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qtopos/contexts.hpp"
#include "qtopos/error.hpp"
#include "qtopos/numerics.hpp"

namespace qtopos {

struct NamedState {
  std::string name;
  Vector vector;
};

struct Scenario {
  std::size_t dimension = 0;
  Tolerance tolerance;
  std::vector<NamedOperator> operators;
  /// Named propositions: explicit projector operators plus spectral-projector helpers.
  std::map<std::string, Operator> projectors;
  std::vector<NamedState> states;
  std::vector<std::vector<std::string>> groups;
  ClosurePolicy closure = ClosurePolicy::Intersections;
  std::vector<std::string> builtins;
  std::string digest;
  std::vector<Context> maximal;

  const Operator* find_operator(const std::string& name) const {
    for (const auto& op : operators)
      if (op.name == name) return &op.op;
    return nullptr;
  }

  const Operator& projector(const std::string& name) const {
    if (const auto it = projectors.find(name); it != projectors.end()) return it->second;
    if (const Operator* op = find_operator(name)) {
      if (is_projector(*op, tolerance)) return *op;
      fail(ErrorKind::ValidationError, "operator '" + name + "' is not a projector");
    }
    fail(ErrorKind::ValidationError, "no projector named '" + name + "'");
  }

  const Vector& state(const std::string& name) const {
    for (const auto& s : states)
      if (s.name == name) return s.vector;
    fail(ErrorKind::ValidationError, "no state named '" + name + "'");
  }

  ContextPoset poset() const { return build_poset(maximal, closure, tolerance); }
};

/// Lowercase hex SHA-256 of the document bytes.
inline std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(), nullptr);
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    out += buf;
  }
  return out;
}

namespace detail {

using nlohmann::json;

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  fail(ErrorKind::SyntaxError, path + ": " + what);
}

inline const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) schema_error(path, "missing field '" + key + "'");
  return obj.at(key);
}

inline std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) schema_error(path, "expected a string");
  return j.get<std::string>();
}

inline double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) schema_error(path, "expected a finite number");
  return x;
}

inline Scalar as_complex(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) schema_error(path, "complex entry must be [re, im]");
  return {as_number(j[0], path + "[0]"), as_number(j[1], path + "[1]")};
}

inline Operator as_matrix(const json& j, std::size_t dim, const std::string& path) {
  if (!j.is_array() || j.size() != dim) schema_error(path, "expected " + std::to_string(dim) + " rows");
  Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < dim; ++r) {
    const std::string row_path = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != dim) schema_error(row_path, "expected " + std::to_string(dim) + " entries");
    for (std::size_t c = 0; c < dim; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          as_complex(j[r][c], row_path + "[" + std::to_string(c) + "]");
  }
  return Operator(std::move(m));
}

inline ColumnVector as_vector(const json& j, std::size_t dim, const std::string& path) {
  if (!j.is_array() || j.size() != dim) schema_error(path, "expected " + std::to_string(dim) + " entries");
  ColumnVector v(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i)
    v(static_cast<Eigen::Index>(i)) = as_complex(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

inline void only_fields(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  for (const auto& item : obj.items())
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return item.key() == a; }))
      schema_error(path, "unknown field '" + item.key() + "'");
}

inline const json& array_field(const json& obj, const char* key, const json& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& j = obj.at(key);
  if (!j.is_array()) schema_error(std::string("$.") + key, "expected an array");
  return j;
}

}  // namespace detail

/// Parses and validates a scenario document.
inline Scenario parse_scenario(const std::string& text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::SyntaxError, "malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  detail::only_fields(doc, {"dimension", "tolerance", "builtins", "operators", "projectors", "states", "contexts",
                            "closure"},
                      "$");
  Scenario s;
  s.digest = sha256_hex(text);

  const json& dim_j = detail::field(doc, "dimension", "$");
  if (!dim_j.is_number_integer() || dim_j.get<long long>() < 1 ||
      dim_j.get<long long>() > static_cast<long long>(kMaxDimension))
    detail::schema_error("$.dimension", "expected an integer in [1, " + std::to_string(kMaxDimension) + "]");
  s.dimension = dim_j.get<std::size_t>();
  if (doc.contains("tolerance")) {
    const double eps = detail::as_number(doc["tolerance"], "$.tolerance");
    try {
      s.tolerance = Tolerance(eps);
    } catch (const Error& e) {
      fail(ErrorKind::ValidationError, std::string("$.tolerance: ") + e.what());
    }
  }
  const Tolerance& tol = s.tolerance;
  const json empty = json::array();

  std::set<std::string> names;
  auto claim = [&](const std::string& name, const std::string& path) {
    if (name.empty()) fail(ErrorKind::ValidationError, path + ": empty name");
    if (!names.insert(name).second) fail(ErrorKind::ValidationError, path + ": duplicate name '" + name + "'");
  };

  for (std::size_t i = 0; const auto& b : detail::array_field(doc, "builtins", empty)) {
    const std::string path = "$.builtins[" + std::to_string(i++) + "]";
    const std::string name = detail::as_string(b, path);
    BuiltinScenario builtin;
    try {
      builtin = builtin_scenario(name, tol);
    } catch (const Error& e) {
      fail(ErrorKind::ValidationError, path + ": " + e.what());
    }
    if (builtin.dim != s.dimension)
      fail(ErrorKind::ValidationError, path + ": builtin '" + name + "' has dimension " +
                                           std::to_string(builtin.dim) + ", scenario declares " +
                                           std::to_string(s.dimension));
    s.builtins.push_back(name);
    for (auto& op : builtin.operators) {
      claim(op.name, path);
      s.operators.push_back(std::move(op));
    }
    for (auto& g : builtin.groups) s.groups.push_back(std::move(g));
  }

  for (std::size_t i = 0; const auto& o : detail::array_field(doc, "operators", empty)) {
    const std::string path = "$.operators[" + std::to_string(i++) + "]";
    detail::only_fields(o, {"name", "matrix"}, path);
    const std::string name = detail::as_string(detail::field(o, "name", path), path + ".name");
    Operator op = detail::as_matrix(detail::field(o, "matrix", path), s.dimension, path + ".matrix");
    claim(name, path);
    s.operators.push_back({name, std::move(op)});
  }

  for (std::size_t i = 0; const auto& p : detail::array_field(doc, "projectors", empty)) {
    const std::string path = "$.projectors[" + std::to_string(i++) + "]";
    detail::only_fields(p, {"name", "of", "eigenvalues"}, path);
    const std::string name = detail::as_string(detail::field(p, "name", path), path + ".name");
    const std::string of = detail::as_string(detail::field(p, "of", path), path + ".of");
    const json& values = detail::field(p, "eigenvalues", path);
    if (!values.is_array()) detail::schema_error(path + ".eigenvalues", "expected an array");
    const Operator* a = s.find_operator(of);
    if (!a) fail(ErrorKind::ValidationError, path + ": no operator named '" + of + "'");
    if (!is_hermitian(*a, tol)) fail(ErrorKind::ValidationError, path + ": operator '" + of + "' is not Hermitian");
    const auto spectrum = eigensystem(*a, tol);
    Operator proj = Operator::zero(s.dimension);
    std::vector<bool> used(spectrum.size(), false);
    const double gap = tol.eps() * std::max(1.0, a->norm()) * static_cast<double>(s.dimension);
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double value = detail::as_number(values[k], path + ".eigenvalues[" + std::to_string(k) + "]");
      bool matched = false;
      for (std::size_t e = 0; e < spectrum.size(); ++e)
        if (!used[e] && std::abs(spectrum[e].eigenvalue - value) <= gap) {
          used[e] = matched = true;
          proj = proj + spectrum[e].projector;
        }
      if (!matched)
        fail(ErrorKind::ValidationError, path + ": " + std::to_string(value) + " is not an eigenvalue of '" + of + "'");
    }
    claim(name, path);
    s.projectors.emplace(name, std::move(proj));
  }

  for (std::size_t i = 0; const auto& st : detail::array_field(doc, "states", empty)) {
    const std::string path = "$.states[" + std::to_string(i++) + "]";
    detail::only_fields(st, {"name", "vector"}, path);
    const std::string name = detail::as_string(detail::field(st, "name", path), path + ".name");
    ColumnVector v = detail::as_vector(detail::field(st, "vector", path), s.dimension, path + ".vector");
    const double norm = v.norm();
    if (std::abs(norm - 1.0) > tol.eps())
      fail(ErrorKind::ValidationError, path + ": state '" + name + "' has norm " + std::to_string(norm));
    claim(name, path);
    s.states.push_back({name, Vector::unit(std::move(v), tol)});
  }

  for (std::size_t i = 0; const auto& g : detail::array_field(doc, "contexts", empty)) {
    const std::string path = "$.contexts[" + std::to_string(i++) + "]";
    if (!g.is_array() || g.empty()) detail::schema_error(path, "expected a nonempty array of operator names");
    std::vector<std::string> group;
    for (std::size_t k = 0; k < g.size(); ++k) group.push_back(detail::as_string(g[k], path + "[" + std::to_string(k) + "]"));
    s.groups.push_back(std::move(group));
  }

  if (doc.contains("closure")) {
    const std::string c = detail::as_string(doc["closure"], "$.closure");
    if (c == "intersections") s.closure = ClosurePolicy::Intersections;
    else if (c == "coarsenings") s.closure = ClosurePolicy::Coarsenings;
    else detail::schema_error("$.closure", "expected \"intersections\" or \"coarsenings\"");
  }

  for (std::size_t i = 0; i < s.groups.size(); ++i) {
    const std::string path = "group " + std::to_string(i);
    std::vector<Operator> ops;
    std::string label;
    for (const auto& member : s.groups[i]) {
      const Operator* op = s.find_operator(member);
      if (!op) fail(ErrorKind::ValidationError, path + ": no operator named '" + member + "'");
      ops.push_back(*op);
      label += (label.empty() ? "" : ",") + member;
    }
    try {
      s.maximal.push_back(context_from_commuting_set(ops, tol, s.groups[i], label));
    } catch (const Error& e) {
      fail(ErrorKind::ValidationError, path + ": " + e.what());
    }
  }
  return s;
}

}  // namespace qtopos
