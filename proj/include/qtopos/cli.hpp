#pragma once

// Command dispatch and deterministic JSON reports for the qtopos tool.
//
// Exit codes: 0 for any completed analysis (NoSection included), 1 for
// syntax, usage and validation errors, 2 when a size limit is hit.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qtopos/contexts.hpp"
#include "qtopos/error.hpp"
#include "qtopos/kernel.hpp"
#include "qtopos/prop.hpp"
#include "qtopos/quantum.hpp"
#include "qtopos/scenario.hpp"

namespace qtopos::cli {

using Json = nlohmann::ordered_json;

struct CommandResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

/// Numbers are printed with 12 significant digits; magnitudes below 1e-12 print as 0.
inline Json number(double x) {
  if (std::abs(x) < 1e-12) return 0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return Json::parse(buf);
}

inline Json matrix_json(const Operator& op) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < op.dim(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < op.dim(); ++c) row.push_back(Json::array({number(op(r, c).real()), number(op(r, c).imag())}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json lower_set_json(const LowerSet& l) { return Json(l.member_ids()); }

inline Json parts_json(const Subobject& k, const FinPoset& base) {
  Json out = Json::array();
  for (std::size_t v = 0; v < base.size(); ++v) {
    Json blocks = Json::array();
    for (std::size_t x = 0; x < k.parts()[v].size(); ++x)
      if (k.contains(v, x)) blocks.push_back(x);
    out.push_back(Json{{"id", base.id(v)}, {"points", std::move(blocks)}});
  }
  return out;
}

inline Json per_context_json(const LowerSet& l) {
  Json out = Json::array();
  for (std::size_t v = 0; v < l.base().size(); ++v) out.push_back(Json{{"id", l.base().id(v)}, {"true", l.contains(v)}});
  return out;
}

namespace detail {

inline Json header(const std::string& command, const std::string& digest, const Tolerance& tol) {
  return Json{{"command", command}, {"scenario_digest", "sha256:" + digest}, {"tolerance", number(tol.eps())}};
}

inline Scenario load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::ValidationError, "cannot read scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

inline Json truth_json(const LowerSet& l) {
  return Json{{"truth_value", lower_set_json(l)},
              {"totally_true", l.is_full()},
              {"totally_false", l.is_empty()},
              {"contexts", per_context_json(l)}};
}

inline Json validate_report(const Scenario& s) {
  Json r = header("validate", s.digest, s.tolerance);
  r["valid"] = true;
  r["dimension"] = s.dimension;
  Json ops = Json::array();
  for (const auto& op : s.operators) ops.push_back(op.name);
  r["operators"] = std::move(ops);
  Json props = Json::array();
  for (const auto& [name, _] : s.projectors) props.push_back(name);
  r["projectors"] = std::move(props);
  Json states = Json::array();
  for (const auto& st : s.states) states.push_back(st.name);
  r["states"] = std::move(states);
  r["groups"] = s.groups;
  r["closure"] = s.closure == ClosurePolicy::Intersections ? "intersections" : "coarsenings";
  return r;
}

inline Json poset_report(const Scenario& s) {
  const ContextPoset poset = s.poset();
  Json r = header("poset", s.digest, s.tolerance);
  r["closure"] = s.closure == ClosurePolicy::Intersections ? "intersections" : "coarsenings";
  Json contexts = Json::array();
  for (const auto& c : poset.contexts()) {
    Json generators = Json::array();
    for (const auto& op : s.operators)
      if (in_context(op.op, c, s.tolerance)) generators.push_back(op.name);
    contexts.push_back(Json{{"id", c.id()}, {"label", c.label()}, {"blocks", c.size()}, {"ranks", c.ranks()},
                            {"operators", std::move(generators)}});
  }
  r["contexts"] = std::move(contexts);
  Json order = Json::array();
  for (auto [a, b] : poset.strict_pairs()) order.push_back(Json::array({poset.context(a).id(), poset.context(b).id()}));
  r["order"] = std::move(order);
  return r;
}

inline Json daseinise_report(const Scenario& s, const std::string& name, bool inner) {
  const Operator& p = s.projector(name);
  const ContextPoset poset = s.poset();
  Json r = header("daseinise", s.digest, s.tolerance);
  r["projector"] = name;
  r["mode"] = inner ? "inner" : "outer";
  Json contexts = Json::array();
  for (const auto& v : poset.contexts()) {
    const std::uint64_t mask = inner ? inner_mask(p, v, s.tolerance) : outer_mask(p, v, s.tolerance);
    const Operator approx = v.block_sum(mask);
    Json blocks = Json::array();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (mask >> i & 1U) blocks.push_back(i);
    contexts.push_back(Json{{"id", v.id()},
                            {"blocks", std::move(blocks)},
                            {"rank", projector_rank(approx)},
                            {"matrix", matrix_json(approx)}});
  }
  r["contexts"] = std::move(contexts);
  return r;
}

inline Json truth_report(const Scenario& s, const std::string& state, const std::string& projector,
                         const std::string& via) {
  const Operator& q = s.projector(projector);
  const Vector& psi = s.state(state);
  const ContextPoset poset = s.poset();
  Json r = header("truth", s.digest, s.tolerance);
  r["state"] = state;
  r["projector"] = projector;
  r["via"] = via;
  const LowerSet value = via == "pseudo-state"
                             ? truth_value_pseudo(q, psi, SpectralPresheaf(poset, s.tolerance))
                             : truth_value_truthobject(q, psi, poset, s.tolerance);
  r.update(truth_json(value));
  return r;
}

inline Json ks_report(const Scenario& s, std::size_t max_solutions) {
  const SpectralPresheaf sigma(s.poset(), s.tolerance);
  const KsResult result = ks_search(sigma, max_solutions);
  Json r = header("ks", s.digest, s.tolerance);
  r["contexts"] = sigma.size();
  r["status"] = result.status == KsStatus::NoSection ? "NoSection" : "SectionsExist";
  r["exhausted"] = result.exhausted;
  r["nodes_explored"] = result.nodes_explored;
  r["max_solutions"] = max_solutions;
  Json sections = Json::array();
  for (const auto& section : result.sections) {
    Json obj = Json::object();
    for (std::size_t v = 0; v < sigma.size(); ++v) obj[sigma.context(v).id()] = *section.blocks[v];
    sections.push_back(std::move(obj));
  }
  r["sections"] = std::move(sections);
  return r;
}

inline Json heyting_report(const Scenario& s, const std::string& expr_text, const std::string& state) {
  PropExpr expr = parse_prop(expr_text);
  std::vector<std::string> names;
  collect_names(expr, names);
  for (const auto& n : names) (void)s.projector(n);
  const Vector& psi = s.state(state);
  const SpectralPresheaf sigma(s.poset(), s.tolerance);

  const HeytingOps<Subobject> ops{
      [&](const std::string& n) { return delta_subobject(s.projector(n), sigma); },
      [](const Subobject& a, const Subobject& b) { return heyting_meet(a, b); },
      [](const Subobject& a, const Subobject& b) { return heyting_join(a, b); },
      [](const Subobject& a, const Subobject& b) { return heyting_implies(a, b); },
      [](const Subobject& a) { return heyting_not(a); },
  };
  const Subobject k = evaluate_prop(expr, ops);
  const PseudoState w = pseudo_state(psi, sigma);
  Json r = header("heyting", s.digest, s.tolerance);
  r["expr"] = to_string(expr);
  r["state"] = state;
  r["subobject"] = parts_json(k, sigma.base());
  r.update(truth_json(truth_value_inclusion(w.subobject, k)));
  return r;
}

inline Json kernel_demo_report(const std::string& which) {
  FinPoset base;
  if (which == "chain2") base = FinPoset::chain(2);
  else if (which == "antichain3") base = FinPoset::antichain(3);
  else fail(ErrorKind::ValidationError, "unknown demo poset '" + which + "' (expected chain2 or antichain3)");

  Json r = header("kernel-demo", sha256_hex("kernel-demo:" + which), Tolerance{});
  r["poset"] = which;
  r["elements"] = base.ids();
  Json order = Json::array();
  for (std::size_t a = 0; a < base.size(); ++a)
    for (std::size_t b = 0; b < base.size(); ++b)
      if (a != b && base.leq(a, b)) order.push_back(Json::array({base.id(a), base.id(b)}));
  r["order"] = std::move(order);

  const Omega om(base);
  Json omega_sizes = Json::object();
  for (std::size_t v = 0; v < base.size(); ++v) omega_sizes[base.id(v)] = om.presheaf().size(v);
  r["omega_sizes"] = std::move(omega_sizes);

  const PresheafPtr one = share(terminal(base));
  const PresheafPtr two = share(Presheaf::constant(base, 2));
  const auto subs_one = all_subobjects(one);
  Json counts = Json::object();
  counts["terminal"] = subs_one.size();
  counts["constant2"] = all_subobjects(two).size();
  counts["omega"] = all_subobjects(om.presheaf_ptr()).size();
  r["sub_counts"] = std::move(counts);
  r["global_truth_values"] = all_lower_sets(base).size();

  Json witness = nullptr;
  for (const auto& j : subs_one) {
    const Subobject not_j = heyting_not(j);
    const Subobject lem = heyting_join(j, not_j);
    if (lem == Subobject::whole(one)) continue;
    witness = Json{{"J", parts_json(j, base)},
                   {"not_J", parts_json(not_j, base)},
                   {"J_or_not_J", parts_json(lem, base)},
                   {"not_not_J", parts_json(heyting_not(not_j), base)},
                   {"J_or_not_J_is_whole", false}};
    break;
  }
  r["excluded_middle_witness"] = std::move(witness);
  return r;
}

}  // namespace detail

/// Runs one invocation; args excludes the program name.
inline CommandResult run_command(const std::vector<std::string>& args) {
  CLI::App app{"Topos-theoretic analysis of finite-dimensional quantum scenarios", "qtopos"};
  app.require_subcommand(1);
  std::string scenario_path, projector, state, via = "pseudo-state", expr, demo;
  bool inner = false;
  std::size_t max_solutions = 16;

  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario");
  auto* poset = app.add_subcommand("poset", "List contexts and their inclusion order");
  auto* daseinise = app.add_subcommand("daseinise", "Per-context approximation of a projector");
  auto* truth = app.add_subcommand("truth", "Truth value of a projector in a state");
  auto* ks = app.add_subcommand("ks", "Search for global sections of the spectral presheaf");
  auto* heyting = app.add_subcommand("heyting", "Evaluate a formula in Sub(Sigma)");
  auto* kernel_demo = app.add_subcommand("kernel-demo", "Subobject classifier and excluded-middle demo");

  for (auto* sub : {validate, poset, daseinise, truth, ks, heyting})
    sub->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  daseinise->add_option("--projector", projector, "Projector name")->required();
  daseinise->add_flag("--inner", inner, "Inner instead of outer daseinisation");
  truth->add_option("--state", state, "State name")->required();
  truth->add_option("--projector", projector, "Projector name")->required();
  truth->add_option("--via", via, "Truth-value route")->check(CLI::IsMember({"pseudo-state", "truth-object"}));
  ks->add_option("--max-solutions", max_solutions, "Maximum number of witness sections");
  heyting->add_option("--expr", expr, "Formula over projector names")->required();
  heyting->add_option("--state", state, "State name")->required();
  kernel_demo->add_option("--poset", demo, "chain2 or antichain3")->required()->check(CLI::IsMember({"chain2", "antichain3"}));

  CommandResult result;
  std::vector<std::string> argv_store{"qtopos"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::ostringstream out, err;
    result.exit_code = app.exit(e, out, err) == 0 ? 0 : 1;
    result.out = out.str();
    result.err = err.str();
    return result;
  }

  try {
    Json report;
    if (*kernel_demo) {
      report = detail::kernel_demo_report(demo);
    } else {
      const Scenario s = detail::load(scenario_path);
      if (*validate) report = detail::validate_report(s);
      else if (*poset) report = detail::poset_report(s);
      else if (*daseinise) report = detail::daseinise_report(s, projector, inner);
      else if (*truth) report = detail::truth_report(s, state, projector, via);
      else if (*ks) report = detail::ks_report(s, max_solutions);
      else report = detail::heyting_report(s, expr, state);
    }
    result.out = report.dump(2) + "\n";
  } catch (const Error& e) {
    result.exit_code = e.kind() == ErrorKind::SizeLimit ? 2 : 1;
    result.err = std::string("error: ") + e.what() + "\n";
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.err = std::string("error: ") + e.what() + "\n";
  }
  return result;
}

}  // namespace qtopos::cli
