#include "mvi/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

#include "mvi/errors.hpp"
#include "mvi/lp.hpp"
#include "mvi/policy_opt.hpp"
#include "mvi/rng.hpp"

namespace mvi::harness {

namespace {

// ---------------------------------------------------------------------------
// Validation

const std::set<std::string> kExperiments{"eval",       "sweep",      "coverage",      "policy-opt",
                                         "rmax-check", "avg-reward", "behavior-aware"};

const std::set<std::string> kBoxLikeClasses{"box", "canonical_q", "canonical_w", "truth_box",
                                            "shifted_box"};
const std::set<std::string> kTruthClasses{"truth_box", "shifted_box", "singleton_truth"};

class Checker {
 public:
  std::vector<Diagnostic> diagnostics;

  void fail(const std::string& path, const std::string& message) {
    diagnostics.push_back({path, message});
  }

  bool object(const Json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) {
      fail(path, "must be an object");
      return false;
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!allowed.count(it.key())) fail(path + "/" + it.key(), "unknown key");
    }
    return true;
  }

  const Json* required(const Json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) {
      fail(path + "/" + key, "missing required field");
      return nullptr;
    }
    return &j[key];
  }

  const Json* optional(const Json& j, const std::string& key) {
    return j.contains(key) ? &j[key] : nullptr;
  }

  bool integer(const Json* j, const std::string& path, long long min_value) {
    if (!j) return false;
    if (!j->is_number_integer() || j->get<long long>() < min_value) {
      fail(path, "must be an integer >= " + std::to_string(min_value));
      return false;
    }
    return true;
  }

  bool number(const Json* j, const std::string& path, double lo, double hi, bool lo_open = false,
              bool hi_open = false) {
    if (!j) return false;
    if (!j->is_number()) {
      fail(path, "must be a number");
      return false;
    }
    const double v = j->get<double>();
    const bool ok = (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
    if (!ok) {
      std::ostringstream os;
      os << "must lie in " << (lo_open ? "(" : "[") << lo << ", " << hi << (hi_open ? ")" : "]");
      fail(path, os.str());
      return false;
    }
    return true;
  }

  bool string_in(const Json* j, const std::string& path, const std::set<std::string>& values) {
    if (!j) return false;
    if (!j->is_string() || !values.count(j->get<std::string>())) {
      std::string list;
      for (const auto& v : values) list += (list.empty() ? "" : ", ") + v;
      fail(path, "must be one of: " + list);
      return false;
    }
    return true;
  }

  bool number_array(const Json* j, const std::string& path) {
    if (!j) return false;
    if (!j->is_array() || j->empty()) {
      fail(path, "must be a nonempty array of numbers");
      return false;
    }
    for (const Json& v : *j) {
      if (!v.is_number()) {
        fail(path, "must be a nonempty array of numbers");
        return false;
      }
    }
    return true;
  }

  bool int_array(const Json* j, const std::string& path) {
    if (!j) return false;
    if (!j->is_array() || j->empty()) {
      fail(path, "must be a nonempty array of integers");
      return false;
    }
    for (const Json& v : *j) {
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        fail(path, "must be a nonempty array of nonnegative integers");
        return false;
      }
    }
    return true;
  }

  bool number_or_array(const Json* j, const std::string& path) {
    if (!j) return false;
    if (j->is_number()) return true;
    return number_array(j, path);
  }

  std::string kind(const Json& j, const std::string& path, const std::set<std::string>& kinds) {
    if (!j.is_object()) {
      fail(path, "must be an object");
      return "";
    }
    const Json* k = required(j, "kind", path);
    if (!string_in(k, path + "/kind", kinds)) return "";
    return k->get<std::string>();
  }
};

void check_mdp(Checker& c, const Json& j, const std::string& p) {
  const std::string kind = c.kind(j, p, {"file", "random", "chain", "single_state"});
  if (kind == "file") {
    c.object(j, p, {"kind", "path"});
    const Json* path = c.required(j, "path", p);
    if (path && !path->is_string()) c.fail(p + "/path", "must be a string");
  } else if (kind == "random") {
    c.object(j, p, {"kind", "seed", "n_states", "n_actions", "gamma", "r_max"});
    c.integer(c.required(j, "seed", p), p + "/seed", 0);
    c.integer(c.required(j, "n_states", p), p + "/n_states", 1);
    c.integer(c.required(j, "n_actions", p), p + "/n_actions", 1);
    c.number(c.required(j, "gamma", p), p + "/gamma", 0.0, 1.0, false, true);
    c.number(c.optional(j, "r_max"), p + "/r_max", 0.0, 1e12, true);
  } else if (kind == "chain") {
    c.object(j, p, {"kind", "length", "slip", "gamma"});
    c.integer(c.required(j, "length", p), p + "/length", 1);
    c.number(c.required(j, "slip", p), p + "/slip", 0.0, 1.0);
    c.number(c.required(j, "gamma", p), p + "/gamma", 0.0, 1.0, false, true);
  } else if (kind == "single_state") {
    c.object(j, p, {"kind", "reward", "gamma", "n_actions"});
    c.number(c.required(j, "reward", p), p + "/reward", 0.0, 1e12);
    c.number(c.required(j, "gamma", p), p + "/gamma", 0.0, 1.0, false, true);
    c.integer(c.optional(j, "n_actions"), p + "/n_actions", 1);
  }
}

void check_policy(Checker& c, const Json& j, const std::string& p) {
  const std::string kind = c.kind(j, p, {"uniform", "deterministic", "random", "file", "probs"});
  if (kind == "uniform") {
    c.object(j, p, {"kind"});
  } else if (kind == "deterministic") {
    c.object(j, p, {"kind", "actions"});
    c.int_array(c.required(j, "actions", p), p + "/actions");
  } else if (kind == "random") {
    c.object(j, p, {"kind", "seed"});
    c.integer(c.required(j, "seed", p), p + "/seed", 0);
  } else if (kind == "file") {
    c.object(j, p, {"kind", "path"});
    const Json* path = c.required(j, "path", p);
    if (path && !path->is_string()) c.fail(p + "/path", "must be a string");
  } else if (kind == "probs") {
    c.object(j, p, {"kind", "action_probs"});
    const Json* probs = c.required(j, "action_probs", p);
    if (probs && (!probs->is_array() || probs->empty())) {
      c.fail(p + "/action_probs", "must be a nonempty array of rows");
    } else if (probs) {
      for (std::size_t i = 0; i < probs->size(); ++i) {
        c.number_array(&(*probs)[i], p + "/action_probs/" + std::to_string(i));
      }
    }
  }
}

void check_mu(Checker& c, const Json& j, const std::string& p) {
  const std::string kind = c.kind(j, p, {"uniform", "random", "states", "values"});
  if (kind == "uniform") {
    c.object(j, p, {"kind"});
  } else if (kind == "random") {
    c.object(j, p, {"kind", "seed", "floor"});
    c.integer(c.required(j, "seed", p), p + "/seed", 0);
    c.number(c.optional(j, "floor"), p + "/floor", 0.0, 1.0);
  } else if (kind == "states") {
    c.object(j, p, {"kind", "states"});
    c.int_array(c.required(j, "states", p), p + "/states");
  } else if (kind == "values") {
    c.object(j, p, {"kind", "values"});
    c.number_array(c.required(j, "values", p), p + "/values");
  }
}

std::string check_class(Checker& c, const Json& j, const std::string& p) {
  const std::string kind =
      c.kind(j, p, {"box", "canonical_q", "canonical_w", "truth_box", "shifted_box",
                    "singleton_truth", "normalized_w", "file"});
  if (kind == "box") {
    c.object(j, p, {"kind", "lower", "upper"});
    c.number_or_array(c.required(j, "lower", p), p + "/lower");
    c.number_or_array(c.required(j, "upper", p), p + "/upper");
  } else if (kind == "canonical_q") {
    c.object(j, p, {"kind"});
  } else if (kind == "canonical_w") {
    c.object(j, p, {"kind", "cap"});
    c.number(c.optional(j, "cap"), p + "/cap", 0.0, 1e12, true);
  } else if (kind == "truth_box") {
    c.object(j, p, {"kind", "half_width"});
    c.number(c.required(j, "half_width", p), p + "/half_width", 0.0, 1e12);
  } else if (kind == "shifted_box") {
    c.object(j, p, {"kind", "shift", "half_width"});
    c.number_or_array(c.required(j, "shift", p), p + "/shift");
    c.number(c.optional(j, "half_width"), p + "/half_width", 0.0, 1e12);
  } else if (kind == "singleton_truth") {
    c.object(j, p, {"kind"});
  } else if (kind == "normalized_w") {
    c.object(j, p, {"kind", "cap"});
    c.number(c.required(j, "cap", p), p + "/cap", 0.0, 1e12, true);
  } else if (kind == "file") {
    c.object(j, p, {"kind", "path"});
    const Json* path = c.required(j, "path", p);
    if (path && !path->is_string()) c.fail(p + "/path", "must be a string");
  }
  return kind;
}

void check_policy_class(Checker& c, const Json& j, const std::string& p) {
  const std::string kind = c.kind(j, p, {"all_deterministic", "list"});
  if (kind == "all_deterministic") {
    c.object(j, p, {"kind"});
  } else if (kind == "list") {
    c.object(j, p, {"kind", "policies"});
    const Json* list = c.required(j, "policies", p);
    if (list && (!list->is_array() || list->empty())) {
      c.fail(p + "/policies", "must be a nonempty array of policy specs");
    } else if (list) {
      for (std::size_t i = 0; i < list->size(); ++i) {
        check_policy(c, (*list)[i], p + "/policies/" + std::to_string(i));
      }
    }
  }
}

std::set<std::string> keys_for(const std::string& experiment) {
  std::set<std::string> keys{"experiment", "seed", "description", "mdp"};
  if (experiment == "eval") {
    keys.insert({"policy", "mu", "q_class", "w_class", "mode", "confidence", "regularizer", "naive"});
  } else if (experiment == "sweep") {
    keys.insert({"policy", "mu", "q_class", "w_class", "sweep"});
  } else if (experiment == "coverage") {
    keys.insert({"policy", "mu", "q_class", "w_class", "coverage"});
  } else if (experiment == "policy-opt") {
    keys.insert({"mu", "q_class", "w_class", "policy_class"});
  } else if (experiment == "rmax-check") {
    keys.insert({"known_states", "policy_class"});
  } else if (experiment == "avg-reward") {
    keys.insert({"policy", "mu", "q_class", "w_class"});
  } else if (experiment == "behavior-aware") {
    keys.insert({"policy", "behavior_policy", "mu", "v_class", "w_class"});
  }
  return keys;
}

}  // namespace

std::vector<Diagnostic> validate(const Json& config) {
  Checker c;
  if (!config.is_object()) {
    c.fail("", "configuration must be a JSON object");
    return c.diagnostics;
  }
  const Json* exp = c.required(config, "experiment", "");
  if (!c.string_in(exp, "/experiment", kExperiments)) {
    if (!config.contains("mdp")) c.fail("/mdp", "missing required field");
    return c.diagnostics;
  }
  const std::string experiment = exp->get<std::string>();
  c.object(config, "", keys_for(experiment));
  c.integer(c.optional(config, "seed"), "/seed", 0);
  if (const Json* d = c.optional(config, "description"); d && !d->is_string()) {
    c.fail("/description", "must be a string");
  }
  if (const Json* m = c.required(config, "mdp", "")) check_mdp(c, *m, "/mdp");

  auto need_policy = [&](const char* key) {
    if (const Json* p = c.required(config, key, "")) check_policy(c, *p, std::string("/") + key);
  };
  auto need_mu = [&] {
    if (const Json* m = c.required(config, "mu", "")) check_mu(c, *m, "/mu");
  };
  auto need_class = [&](const char* key) -> std::string {
    if (const Json* k = c.required(config, key, "")) return check_class(c, *k, std::string("/") + key);
    return "";
  };

  if (experiment == "eval" || experiment == "sweep" || experiment == "coverage" ||
      experiment == "avg-reward") {
    need_policy("policy");
    need_mu();
    const std::string q_kind = need_class("q_class");
    const std::string w_kind = need_class("w_class");

    if (experiment == "eval") {
      std::string mode = "exact";
      if (const Json* m = c.optional(config, "mode")) {
        mode = c.kind(*m, "/mode", {"exact", "empirical"});
        if (mode == "exact") {
          c.object(*m, "/mode", {"kind"});
        } else if (mode == "empirical") {
          c.object(*m, "/mode", {"kind", "n", "noise", "dataset"});
          const Json* ds = c.optional(*m, "dataset");
          if (ds && !ds->is_string()) c.fail("/mode/dataset", "must be a string");
          if (!ds) c.integer(c.required(*m, "n", "/mode"), "/mode/n", 1);
          c.number(c.optional(*m, "noise"), "/mode/noise", 0.0, 1e12);
        }
      }
      if (const Json* conf = c.optional(config, "confidence")) {
        const std::string kind = c.kind(*conf, "/confidence", {"none", "bootstrap", "rademacher"});
        if (kind == "none") {
          c.object(*conf, "/confidence", {"kind"});
        } else if (kind == "bootstrap") {
          c.object(*conf, "/confidence", {"kind", "B", "k"});
          const Json* B = c.optional(*conf, "B");
          const Json* k = c.optional(*conf, "k");
          const bool b_ok = !B || c.integer(B, "/confidence/B", 1);
          const bool k_ok = !k || c.integer(k, "/confidence/k", 1);
          const long long bv = B && b_ok ? B->get<long long>() : 20;
          const long long kv = k && k_ok ? k->get<long long>() : 1;
          if (b_ok && k_ok && kv > bv) {
            c.fail("/confidence/k", "k (" + std::to_string(kv) + ") must not exceed B (" +
                                        std::to_string(bv) + ") at /confidence/B");
          }
        } else if (kind == "rademacher") {
          c.object(*conf, "/confidence", {"kind", "delta", "n_sigma"});
          c.number(c.required(*conf, "delta", "/confidence"), "/confidence/delta", 0.0, 1.0, true, true);
          c.integer(c.optional(*conf, "n_sigma"), "/confidence/n_sigma", 1);
          if ((!q_kind.empty() && !kBoxLikeClasses.count(q_kind)) ||
              (!w_kind.empty() && !kBoxLikeClasses.count(w_kind))) {
            c.fail("/confidence/kind", "rademacher requires box classes for range caps (/q_class, /w_class)");
          }
        }
        if (kind == "bootstrap" || kind == "rademacher") {
          if (mode != "empirical") c.fail("/confidence/kind", "confidence handling requires /mode/kind = empirical");
        }
      }
      if (const Json* reg = c.optional(config, "regularizer")) {
        const std::string kind = c.kind(*reg, "/regularizer", {"quadratic", "shifted_quadratic"});
        if (!kind.empty()) {
          c.object(*reg, "/regularizer", {"kind", "lambda"});
          c.number(c.required(*reg, "lambda", "/regularizer"), "/regularizer/lambda", 0.0, 1e12);
        }
        if (w_kind == "normalized_w") c.fail("/regularizer", "regularized bounds need a box W class");
      }
      if (const Json* n = c.optional(config, "naive"); n && !n->is_boolean()) {
        c.fail("/naive", "must be a boolean");
      }
    } else if (experiment == "sweep") {
      if (!q_kind.empty() && q_kind != "shifted_box") {
        c.fail("/q_class/kind", "sweep requires a shifted_box Q class");
      }
      if (const Json* s = c.required(config, "sweep", "")) {
        if (c.object(*s, "/sweep", {"half_widths"})) {
          if (c.number_array(c.required(*s, "half_widths", "/sweep"), "/sweep/half_widths")) {
            for (const Json& v : (*s)["half_widths"]) {
              if (v.get<double>() < 0.0) {
                c.fail("/sweep/half_widths", "half-widths must be nonnegative");
                break;
              }
            }
          }
        }
      }
    } else if (experiment == "coverage") {
      if (const Json* cov = c.required(config, "coverage", "")) {
        if (c.object(*cov, "/coverage", {"trials", "n", "B", "k", "noise"})) {
          c.integer(c.required(*cov, "trials", "/coverage"), "/coverage/trials", 1);
          c.integer(c.required(*cov, "n", "/coverage"), "/coverage/n", 1);
          const Json* B = c.optional(*cov, "B");
          const Json* k = c.optional(*cov, "k");
          const bool b_ok = !B || c.integer(B, "/coverage/B", 1);
          const bool k_ok = !k || c.integer(k, "/coverage/k", 1);
          const long long bv = B && b_ok ? B->get<long long>() : 20;
          const long long kv = k && k_ok ? k->get<long long>() : 1;
          if (b_ok && k_ok && kv > bv) {
            c.fail("/coverage/k", "k (" + std::to_string(kv) + ") must not exceed B (" +
                                      std::to_string(bv) + ") at /coverage/B");
          }
          c.number(c.optional(*cov, "noise"), "/coverage/noise", 0.0, 1e12);
        }
      }
    }
  } else if (experiment == "policy-opt") {
    need_mu();
    for (const char* key : {"q_class", "w_class"}) {
      const std::string kind = need_class(key);
      if (kTruthClasses.count(kind)) {
        c.fail(std::string("/") + key + "/kind", "policy-opt classes cannot depend on a single policy's truth");
      }
    }
    if (const Json* pc = c.required(config, "policy_class", "")) check_policy_class(c, *pc, "/policy_class");
  } else if (experiment == "rmax-check") {
    c.int_array(c.required(config, "known_states", ""), "/known_states");
    if (const Json* pc = c.required(config, "policy_class", "")) check_policy_class(c, *pc, "/policy_class");
  } else if (experiment == "behavior-aware") {
    need_policy("policy");
    need_policy("behavior_policy");
    need_mu();
    for (const char* key : {"v_class", "w_class"}) {
      const std::string kind = need_class(key);
      if (kind == "canonical_q" || kind == "canonical_w") {
        c.fail(std::string("/") + key + "/kind", "canonical classes are state-action indexed");
      }
    }
  }
  return c.diagnostics;
}

namespace {

// ---------------------------------------------------------------------------
// Construction from validated specs

std::filesystem::path resolve(const RunOptions& options, const std::string& path) {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : options.base_dir / p;
}

TabularMdp build_mdp(const Json& j, const RunOptions& options) {
  const std::string kind = j["kind"];
  if (kind == "file") return io::read_mdp(resolve(options, j["path"]));
  if (kind == "random") {
    return generate_random_mdp(j["seed"].get<std::uint64_t>(), j["n_states"], j["n_actions"],
                               j["gamma"], j.value("r_max", 1.0));
  }
  if (kind == "chain") return generate_chain(j["length"], j["slip"], j["gamma"]);
  const int na = j.value("n_actions", 1);
  Mat p = Mat::Ones(na, 1);
  Vec r = Vec::Constant(na, j["reward"].get<double>());
  return TabularMdp(1, na, p, r, std::max(1.0, j["reward"].get<double>()), j["gamma"], 0);
}

Policy build_policy(const Json& j, int ns, int na, const RunOptions& options) {
  const std::string kind = j["kind"];
  Policy policy = Policy::uniform(ns, na);
  if (kind == "deterministic") {
    policy = Policy::deterministic(j["actions"].get<std::vector<int>>(), na);
  } else if (kind == "random") {
    policy = random_policy(j["seed"].get<std::uint64_t>(), ns, na);
  } else if (kind == "file") {
    policy = io::read_policy(resolve(options, j["path"]));
  } else if (kind == "probs") {
    const Json& rows = j["action_probs"];
    Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t s = 0; s < rows.size(); ++s) {
      if (rows[s].size() != rows[0].size()) throw ConfigError("/action_probs rows differ in length");
      for (std::size_t a = 0; a < rows[s].size(); ++a) m(s, a) = rows[s][a].get<double>();
    }
    policy = Policy(m);
  }
  if (policy.n_states() != ns || policy.n_actions() != na) {
    throw ConfigError("policy shape " + std::to_string(policy.n_states()) + "x" +
                      std::to_string(policy.n_actions()) + " does not match the MDP");
  }
  return policy;
}

/// Distribution over `dim` points; "states" means uniform over the pairs of
/// the listed states (state-action) or over the listed states (state index).
Vec build_mu(const Json& j, const TabularMdp& mdp, bool state_indexed) {
  const int dim = state_indexed ? mdp.n_states() : mdp.n_pairs();
  const std::string kind = j["kind"];
  if (kind == "uniform") return Vec::Constant(dim, 1.0 / dim);
  if (kind == "random") return random_distribution(j["seed"].get<std::uint64_t>(), dim, j.value("floor", 0.5));
  if (kind == "states") {
    const auto states = j["states"].get<std::vector<int>>();
    const std::set<int> set(states.begin(), states.end());
    if (!state_indexed) return uniform_on_states(mdp, set);
    Vec mu = Vec::Zero(dim);
    for (int s : set) {
      if (s >= dim) throw ConfigError("/mu/states: state out of range");
      mu(s) = 1.0;
    }
    return mu / mu.sum();
  }
  Vec mu = io::vector_from_json(j["values"], "/mu/values");
  if (mu.size() != dim) throw ConfigError("/mu/values must have " + std::to_string(dim) + " entries");
  if ((mu.array() < 0.0).any() || std::abs(mu.sum() - 1.0) > 1e-9) {
    throw ConfigError("/mu/values must be a probability distribution");
  }
  return mu;
}

struct ClassContext {
  int dim = 0;
  IndexSpace space = IndexSpace::StateAction;
  double q_cap = 0.0;
  /// Total w mass E_mu[w] of the true weights.
  double w_mass = 1.0;
  Vec mu;
  std::function<Vec()> truth;
  const RunOptions* options = nullptr;
};

Vec scalar_or_vector(const Json& j, int dim, const std::string& what) {
  if (j.is_number()) return Vec::Constant(dim, j.get<double>());
  Vec v = io::vector_from_json(j, what);
  if (v.size() != dim) throw ConfigError(what + " must have " + std::to_string(dim) + " entries");
  return v;
}

FunctionClass build_class(const Json& j, const ClassContext& ctx, const std::string& path) {
  const std::string kind = j["kind"];
  const int n = ctx.dim;
  if (kind == "box") {
    return FunctionClass::box(scalar_or_vector(j["lower"], n, path + "/lower"),
                              scalar_or_vector(j["upper"], n, path + "/upper"), ctx.space);
  }
  if (kind == "canonical_q") return FunctionClass::box(Vec::Zero(n), Vec::Constant(n, ctx.q_cap), ctx.space);
  if (kind == "canonical_w") {
    int support = 0;
    for (int i = 0; i < ctx.mu.size(); ++i) support += ctx.mu(i) > 0.0 ? 1 : 0;
    const double cap = j.contains("cap") ? j["cap"].get<double>() : support * ctx.w_mass;
    return FunctionClass::box(Vec::Zero(n), Vec::Constant(n, cap), ctx.space);
  }
  if (kind == "truth_box") {
    const Vec t = ctx.truth();
    const double h = j["half_width"];
    return FunctionClass::box(t.array() - h, t.array() + h, ctx.space);
  }
  if (kind == "shifted_box") {
    const Vec c = ctx.truth() + scalar_or_vector(j["shift"], n, path + "/shift");
    const double h = j.value("half_width", 0.0);
    return FunctionClass::box(c.array() - h, c.array() + h, ctx.space);
  }
  if (kind == "singleton_truth") return FunctionClass::singleton(ctx.truth(), ctx.space);
  if (kind == "normalized_w") {
    const double cap = j["cap"];
    Mat A(2 * n, n);
    A << -Mat::Identity(n, n), Mat::Identity(n, n);
    Vec b(2 * n);
    b << Vec::Zero(n), Vec::Constant(n, cap);
    Mat E = ctx.mu.transpose();
    return FunctionClass::polytope(A, b, E, Vec::Constant(1, ctx.w_mass), ctx.space);
  }
  FunctionClass fc = io::read_class(resolve(*ctx.options, j["path"]));
  if (fc.dimension() != n || fc.index_space() != ctx.space) {
    throw ConfigError(path + ": class file has dimension " + std::to_string(fc.dimension()) +
                      ", expected " + std::to_string(n));
  }
  return fc;
}

std::vector<Policy> build_policy_class(const Json& j, const TabularMdp& mdp, const RunOptions& options) {
  if (j["kind"] == "all_deterministic") {
    if (std::pow(double(mdp.n_actions()), double(mdp.n_states())) > 1e6) {
      throw ConfigError("/policy_class: too many deterministic policies to enumerate");
    }
    return Policy::all_deterministic(mdp.n_states(), mdp.n_actions());
  }
  std::vector<Policy> out;
  for (const Json& p : j["policies"]) out.push_back(build_policy(p, mdp.n_states(), mdp.n_actions(), options));
  return out;
}

// ---------------------------------------------------------------------------
// Serialization helpers

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Json bound_json(const BoundResult& b, bool certificates) {
  Json j;
  j["kind"] = to_string(b.kind);
  j["value"] = b.value;
  j["mode"] = to_string(b.mode);
  j["method"] = to_string(b.detail.method);
  j["lp_status"] = lp::to_string(b.detail.lp_status);
  j["lp_iterations"] = b.detail.lp_iterations;
  if (certificates) {
    j["w"] = io::vector_to_json(b.w);
    j["q"] = io::vector_to_json(b.q);
  }
  return j;
}

Json interval_json(const ValueInterval& iv, bool certificates) {
  Json j;
  j["low"] = iv.low;
  j["high"] = iv.high;
  j["reversed"] = iv.reversed;
  j["diagnosis"] = to_string(iv.diagnosis);
  const PointEstimate pe = point_estimate(iv);
  j["point_estimate"] = pe.value;
  j["half_width"] = pe.half_width;
  j["bounds"] = Json::array({bound_json(iv.upper_w, certificates), bound_json(iv.lower_w, certificates),
                             bound_json(iv.upper_q, certificates), bound_json(iv.lower_q, certificates)});
  return j;
}

Json naive_json(const NaiveInterval& ni, bool certificates) {
  Json j;
  j["style"] = to_string(ni.style);
  j["center"] = ni.center;
  j["half_width"] = ni.half_width;
  j["low"] = ni.low;
  j["high"] = ni.high;
  if (certificates) j["arg"] = io::vector_to_json(ni.arg);
  return j;
}

Json confidence_json(const ConfidenceReport& r) {
  Json j;
  j["method"] = r.method;
  j["adjusted_low"] = r.adjusted_low;
  j["adjusted_high"] = r.adjusted_high;
  if (r.method == "bootstrap") {
    j["B"] = r.B;
    j["k"] = r.k;
    j["resample_lows"] = r.resample_lows;
    j["resample_highs"] = r.resample_highs;
  } else {
    j["delta"] = r.delta;
    j["n_sigma"] = r.n_sigma;
    j["rademacher_complexity"] = r.rademacher;
    j["l_max"] = r.l_max;
    j["addend"] = r.addend;
    j["heuristic"] = r.heuristic;
  }
  return j;
}

template <typename F>
void parallel_for(int count, int jobs, F&& body) {
  const int workers = std::max(1, std::min(jobs, count));
  std::vector<std::exception_ptr> errors(count);
  auto guarded = [&](int i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (workers == 1) {
    for (int i = 0; i < count; ++i) guarded(i);
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < workers; ++t) {
      threads.emplace_back([&, t] {
        for (int i = t; i < count; i += workers) guarded(i);
      });
    }
    for (auto& th : threads) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// Experiments

struct Setup {
  TabularMdp mdp;
  Policy policy;
  Vec mu;
};

ClassContext discounted_context(const Setup& s, const RunOptions& options, bool q_role) {
  ClassContext ctx;
  ctx.dim = s.mdp.n_pairs();
  ctx.q_cap = s.mdp.r_max() / (1.0 - s.mdp.gamma());
  ctx.w_mass = 1.0 / (1.0 - s.mdp.gamma());
  ctx.mu = s.mu;
  ctx.options = &options;
  const TabularMdp* mdp = &s.mdp;
  const Policy* policy = &s.policy;
  const Vec* mu = &s.mu;
  if (q_role) {
    ctx.truth = [mdp, policy] { return solve_q_pi(*mdp, *policy); };
  } else {
    ctx.truth = [mdp, policy, mu] {
      return importance_weights(solve_d_pi(*mdp, *policy), *mu, mdp->n_actions());
    };
  }
  return ctx;
}

Json run_eval(const Json& config, const Setup& s, const RunOptions& options, std::uint64_t seed,
              std::map<std::string, std::string>& tables) {
  (void)tables;
  const FunctionClass q_class = build_class(config["q_class"], discounted_context(s, options, true), "/q_class");
  const FunctionClass w_class = build_class(config["w_class"], discounted_context(s, options, false), "/w_class");
  const bool empirical = config.contains("mode") && config["mode"]["kind"] == "empirical";
  Json out;
  out["j_pi"] = j_pi(s.mdp, s.policy);

  BiAffineLoss loss;
  std::optional<Dataset> data;
  if (empirical) {
    const Json& mode = config["mode"];
    if (mode.contains("dataset")) {
      data = io::read_dataset(resolve(options, mode["dataset"]));
    } else {
      data = sample_dataset(s.mdp, s.mu, mode["n"], derive_seed(seed, 0), mode.value("noise", 0.0));
    }
    loss = build_empirical_loss(*data, s.policy, s.mdp.initial(), s.mdp.gamma());
    out["mode"] = "empirical";
    out["n"] = data->size();
  } else {
    loss = build_exact_loss(s.mdp, s.policy, s.mu);
    out["mode"] = "exact";
  }
  const LossMode mode = empirical ? LossMode::Empirical : LossMode::Exact;
  out["interval"] = interval_json(unified_interval(loss, q_class, w_class, mode), options.emit_certificates);

  if (config.value("naive", true)) {
    out["naive"] = Json::array({naive_json(naive_interval(NaiveStyle::MWL, loss, q_class, w_class), options.emit_certificates),
                                naive_json(naive_interval(NaiveStyle::MQL, loss, q_class, w_class), options.emit_certificates)});
  }
  if (config.contains("regularizer")) {
    const Json& r = config["regularizer"];
    Regularizer reg;
    reg.kind = r["kind"] == "quadratic" ? RegularizerKind::Quadratic : RegularizerKind::ShiftedQuadratic;
    reg.lambda = r["lambda"];
    Vec weights = s.mu;
    if (data) {
      weights = Vec::Zero(s.mdp.n_pairs());
      for (int i = 0; i < data->size(); ++i) {
        weights(data->tuples[i].s * s.mdp.n_actions() + data->tuples[i].a) += data->weights[i];
      }
    }
    const RegularizedInterval ri = regularized_interval(loss, q_class, w_class, weights, reg);
    out["regularized"] = {{"kind", to_string(reg.kind)}, {"lambda", reg.lambda}, {"low", ri.low},
                          {"high", ri.high}, {"converged", ri.converged}};
  }
  if (empirical && config.contains("confidence") && config["confidence"]["kind"] != "none") {
    const Json& conf = config["confidence"];
    ConfidenceReport report;
    if (conf["kind"] == "bootstrap") {
      report = bootstrap_interval(*data, s.policy, s.mdp.initial(), s.mdp.gamma(), q_class, w_class,
                                  conf.value("B", 20), conf.value("k", 1), derive_seed(seed, 1), options.jobs);
    } else {
      report = rademacher_bound(*data, s.policy, s.mdp.initial(), s.mdp.gamma(), q_class, w_class,
                                conf["delta"], conf.value("n_sigma", 100), derive_seed(seed, 2));
    }
    out["confidence"] = confidence_json(report);
  }
  return out;
}

Json run_sweep(const Json& config, const Setup& s, const RunOptions& options,
               std::map<std::string, std::string>& tables) {
  const FunctionClass w_class = build_class(config["w_class"], discounted_context(s, options, false), "/w_class");
  const Vec q_pi = solve_q_pi(s.mdp, s.policy);
  const Vec shift = scalar_or_vector(config["q_class"]["shift"], s.mdp.n_pairs(), "/q_class/shift");
  const auto half_widths = config["sweep"]["half_widths"].get<std::vector<double>>();
  const BiAffineLoss loss = build_exact_loss(s.mdp, s.policy, s.mu);
  const std::vector<SweepRow> rows = reversal_sweep(loss, q_pi + shift, w_class, half_widths, options.jobs);
  const double j = j_pi(s.mdp, s.policy);
  tables["sweep.csv"] = sweep_csv(rows, j);
  std::vector<double> gaps;
  for (const auto& r : rows) gaps.push_back(r.upper_q - r.lower_q);
  Json out;
  out["j_pi"] = j;
  out["realizability_threshold"] = shift.cwiseAbs().maxCoeff();
  out["points"] = rows.size();
  out["q_gap_sign_changes"] = count_sign_changes(gaps, 10.0 * lp::Options{}.tolerance);
  out["table"] = "sweep.csv";
  return out;
}

Json run_coverage(const Json& config, const Setup& s, const RunOptions& options, std::uint64_t seed,
                  std::map<std::string, std::string>& tables) {
  const FunctionClass q_class = build_class(config["q_class"], discounted_context(s, options, true), "/q_class");
  const FunctionClass w_class = build_class(config["w_class"], discounted_context(s, options, false), "/w_class");
  const Json& cov = config["coverage"];
  const CoverageSummary summary =
      coverage_study(s.mdp, s.policy, s.mu, q_class, w_class, cov["trials"], cov["n"], cov.value("B", 20),
                     cov.value("k", 1), seed, cov.value("noise", 0.0), options.jobs);
  tables["coverage.csv"] = coverage_csv(summary);
  Json out;
  out["j_pi"] = summary.truth;
  out["exact_low"] = summary.exact_low;
  out["exact_high"] = summary.exact_high;
  out["trials"] = summary.trials.size();
  out["raw_coverage"] = summary.raw_coverage;
  out["bootstrap_coverage"] = summary.boot_coverage;
  out["raw_mean_length"] = summary.raw_mean_length;
  out["bootstrap_mean_length"] = summary.boot_mean_length;
  out["table"] = "coverage.csv";
  return out;
}

Json run_policy_opt(const Json& config, const TabularMdp& mdp, const Vec& mu, const RunOptions& options,
                    std::map<std::string, std::string>& tables) {
  Setup dummy{mdp, Policy::uniform(mdp.n_states(), mdp.n_actions()), mu};
  const FunctionClass q_class = build_class(config["q_class"], discounted_context(dummy, options, true), "/q_class");
  const FunctionClass w_class = build_class(config["w_class"], discounted_context(dummy, options, false), "/w_class");
  const std::vector<Policy> policies = build_policy_class(config["policy_class"], mdp, options);
  std::vector<double> lbw(policies.size()), ubw(policies.size()), lbq(policies.size()), js(policies.size());
  parallel_for(static_cast<int>(policies.size()), options.jobs, [&](int i) {
    const BiAffineLoss loss = build_exact_loss(mdp, policies[i], mu);
    lbw[i] = compute_bound(BoundKind::LowerW, loss, q_class, w_class).value;
    ubw[i] = compute_bound(BoundKind::UpperW, loss, q_class, w_class).value;
    lbq[i] = compute_bound(BoundKind::LowerQ, loss, q_class, w_class).value;
    js[i] = j_pi(mdp, policies[i]);
  });
  auto argmax = [](const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i) {
      if (v[i] > v[best]) best = i;
    }
    return best;
  };
  std::string csv = "policy,lb_w,ub_w,lb_q,j_pi\n";
  for (std::size_t i = 0; i < policies.size(); ++i) {
    csv += std::to_string(i) + "," + fmt(lbw[i]) + "," + fmt(ubw[i]) + "," + fmt(lbq[i]) + "," + fmt(js[i]) + "\n";
  }
  tables["policies.csv"] = csv;
  Json out;
  const int mlb = argmax(lbw);
  const int mub = argmax(ubw);
  const int mlbq = argmax(lbq);
  out["policies"] = policies.size();
  out["MLB-PO"] = {{"chosen", mlb}, {"objective", lbw[mlb]}, {"j_pi", js[mlb]}};
  out["MUB-PO"] = {{"chosen", mub}, {"objective", ubw[mub]}, {"j_pi", js[mub]}};
  out["MLB-PO-qside"] = {{"chosen", mlbq}, {"objective", lbq[mlbq]}, {"j_pi", js[mlbq]}};
  out["best_j_pi"] = js[argmax(js)];
  const IpmReport ipm = ipm_diagnostic(mdp, compute_bound(BoundKind::UpperW, build_exact_loss(mdp, policies[mub], mu),
                                                          q_class, w_class).w,
                                       mu, policies[mub], q_class, policies);
  out["MUB-PO"]["ipm"] = ipm.ipm;
  out["MUB-PO"]["l1"] = ipm.l1;
  out["table"] = "policies.csv";
  return out;
}

Json run_rmax_check(const Json& config, const TabularMdp& mdp, const RunOptions& options,
                    std::map<std::string, std::string>& tables) {
  const auto states = config["known_states"].get<std::vector<int>>();
  const std::set<int> known(states.begin(), states.end());
  for (int s : known) {
    if (s >= mdp.n_states()) throw ConfigError("/known_states: state " + std::to_string(s) + " out of range");
  }
  const std::vector<Policy> policies = build_policy_class(config["policy_class"], mdp, options);
  const RmaxCheckReport report = rmax_equivalence_check(mdp, known, policies);
  std::string csv = "policy,lb_w,j_rmin,ub_w,j_rmax\n";
  for (std::size_t i = 0; i < policies.size(); ++i) {
    csv += std::to_string(i) + "," + fmt(report.lower_w[i]) + "," + fmt(report.j_min[i]) + "," +
           fmt(report.upper_w[i]) + "," + fmt(report.j_max[i]) + "\n";
  }
  tables["rmax.csv"] = csv;
  Json out;
  out["policies"] = policies.size();
  out["max_lower_deviation"] = report.max_lower_deviation;
  out["max_upper_deviation"] = report.max_upper_deviation;
  out["mlb_choice"] = report.mlb_choice;
  out["mub_choice"] = report.mub_choice;
  out["mlb_attains_max"] = report.mlb_attains_max;
  out["mub_attains_max"] = report.mub_attains_max;
  out["violations"] = report.violations;
  out["passed"] = report.passed;
  out["table"] = "rmax.csv";
  return out;
}

Json run_avg_reward(const Json& config, const Setup& s, const RunOptions& options) {
  ClassContext q_ctx;
  q_ctx.dim = s.mdp.n_pairs();
  q_ctx.q_cap = s.mdp.r_max();
  q_ctx.w_mass = 1.0;
  q_ctx.mu = s.mu;
  q_ctx.options = &options;
  ClassContext w_ctx = q_ctx;
  const TabularMdp* mdp = &s.mdp;
  const Policy* policy = &s.policy;
  const Vec* mu = &s.mu;
  q_ctx.truth = [mdp, policy] { return differential_q(*mdp, *policy); };
  w_ctx.truth = [mdp, policy, mu] {
    return importance_weights(stationary_distribution(*mdp, *policy), *mu, mdp->n_actions());
  };
  const FunctionClass q_class = build_class(config["q_class"], q_ctx, "/q_class");
  const FunctionClass w_class = build_class(config["w_class"], w_ctx, "/w_class");
  Json out;
  out["j_avg"] = average_reward(s.mdp, s.policy);
  out["interval"] = interval_json(average_reward_bounds(s.mdp, s.policy, s.mu, q_class, w_class),
                                  options.emit_certificates);
  return out;
}

Json run_behavior_aware(const Json& config, const TabularMdp& mdp, const Policy& policy,
                        const RunOptions& options) {
  const Policy behavior = build_policy(config["behavior_policy"], mdp.n_states(), mdp.n_actions(), options);
  const Vec mu_state = build_mu(config["mu"], mdp, true);
  ClassContext v_ctx;
  v_ctx.dim = mdp.n_states();
  v_ctx.space = IndexSpace::State;
  v_ctx.q_cap = mdp.r_max() / (1.0 - mdp.gamma());
  v_ctx.w_mass = 1.0 / (1.0 - mdp.gamma());
  v_ctx.mu = mu_state;
  v_ctx.options = &options;
  ClassContext w_ctx = v_ctx;
  v_ctx.truth = [&] { return solve_v_pi(mdp, policy); };
  w_ctx.truth = [&] {
    const Vec d = state_occupancy(mdp, policy);
    Vec w = Vec::Zero(d.size());
    for (int s = 0; s < d.size(); ++s) {
      if (mu_state(s) > 0.0) {
        w(s) = d(s) / mu_state(s);
      } else if (d(s) > 0.0) {
        throw UnsupportedOccupancy("state occupancy is not covered by the state distribution", {{s, -1}});
      }
    }
    return w;
  };
  const FunctionClass v_class = build_class(config["v_class"], v_ctx, "/v_class");
  const FunctionClass w_class = build_class(config["w_class"], w_ctx, "/w_class");
  Json out;
  out["j_pi"] = j_pi(mdp, policy);
  out["interval"] = interval_json(behavior_aware_bounds(mdp, policy, behavior, mu_state, v_class, w_class),
                                  options.emit_certificates);
  return out;
}

}  // namespace

std::uint64_t config_hash(const Json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunOutput run(const Json& config, const RunOptions& options) {
  const std::vector<Diagnostic> diagnostics = validate(config);
  if (!diagnostics.empty()) {
    std::string message = "invalid configuration:";
    for (const auto& d : diagnostics) message += "\n  " + (d.path.empty() ? "/" : d.path) + ": " + d.message;
    throw ConfigError(message);
  }
  const auto start = std::chrono::steady_clock::now();
  const std::string experiment = config["experiment"];
  const std::uint64_t seed = options.seed ? *options.seed : config.value("seed", std::uint64_t{0});

  RunOutput output;
  Json payload;
  const TabularMdp mdp = build_mdp(config["mdp"], options);
  if (experiment == "rmax-check") {
    payload = run_rmax_check(config, mdp, options, output.tables);
  } else if (experiment == "policy-opt") {
    payload = run_policy_opt(config, mdp, build_mu(config["mu"], mdp, false), options, output.tables);
  } else {
    const Policy policy = build_policy(config["policy"], mdp.n_states(), mdp.n_actions(), options);
    if (experiment == "behavior-aware") {
      payload = run_behavior_aware(config, mdp, policy, options);
    } else {
      const Setup setup{mdp, policy, build_mu(config["mu"], mdp, false)};
      if (experiment == "eval") {
        payload = run_eval(config, setup, options, seed, output.tables);
      } else if (experiment == "sweep") {
        payload = run_sweep(config, setup, options, output.tables);
      } else if (experiment == "coverage") {
        payload = run_coverage(config, setup, options, seed, output.tables);
      } else {
        payload = run_avg_reward(config, setup, options);
      }
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(config_hash(config)));
  Json& r = output.result;
  r["experiment"] = experiment;
  r["config_hash"] = hash;
  r["library_version"] = kLibraryVersion;
  r["seed"] = seed;
  r["tolerances"] = {{"lp", lp::Options{}.tolerance},
                     {"lp_pivot", lp::Options{}.pivot_tolerance},
                     {"minimax", kMinimaxTolerance},
                     {"reversal", kReversalThreshold},
                     {"contains", kContainsTolerance}};
  r["result"] = std::move(payload);
  r["timing"] = {{"seconds", seconds}, {"jobs", options.jobs}};
  return output;
}

void write_outputs(const RunOutput& output, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_text(dir / "result.json", output.result.dump(2) + "\n");
  for (const auto& [name, text] : output.tables) io::write_text(dir / name, text);
}

std::vector<SweepRow> reversal_sweep(const BiAffineLoss& loss, const Vec& q_center,
                                     const FunctionClass& w_class,
                                     const std::vector<double>& half_widths, int jobs) {
  std::vector<SweepRow> rows(half_widths.size());
  parallel_for(static_cast<int>(half_widths.size()), jobs, [&](int i) {
    const double h = half_widths[i];
    const FunctionClass q_class = FunctionClass::box(q_center.array() - h, q_center.array() + h);
    const ValueInterval iv = unified_interval(loss, q_class, w_class);
    rows[i] = {h, iv.upper_w.value, iv.lower_w.value, iv.upper_q.value, iv.lower_q.value, iv.reversed};
  });
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, double truth) {
  std::string csv = "half_width,ub_w,lb_w,ub_q,lb_q,q_gap,reversed,j_pi\n";
  for (const auto& r : rows) {
    csv += fmt(r.half_width) + "," + fmt(r.upper_w) + "," + fmt(r.lower_w) + "," + fmt(r.upper_q) + "," +
           fmt(r.lower_q) + "," + fmt(r.upper_q - r.lower_q) + "," + (r.reversed ? "1" : "0") + "," +
           fmt(truth) + "\n";
  }
  return csv;
}

int count_sign_changes(const std::vector<double>& values, double tol) {
  int changes = 0;
  int last = 0;
  for (double v : values) {
    if (std::abs(v) <= tol) continue;
    const int sign = v > 0.0 ? 1 : -1;
    if (last != 0 && sign != last) ++changes;
    last = sign;
  }
  return changes;
}

CoverageSummary coverage_study(const TabularMdp& mdp, const Policy& policy, const Vec& mu,
                               const FunctionClass& q_class, const FunctionClass& w_class,
                               int trials, int n, int B, int k, std::uint64_t seed,
                               double noise_half_width, int jobs) {
  CoverageSummary summary;
  summary.truth = j_pi(mdp, policy);
  const ValueInterval exact = unified_interval(mdp, policy, mu, q_class, w_class);
  summary.exact_low = exact.low;
  summary.exact_high = exact.high;
  summary.trials.resize(trials);
  constexpr double kCoverTol = 1e-9;
  parallel_for(trials, jobs, [&](int t) {
    const Dataset data = sample_dataset(mdp, mu, n, derive_seed(seed, static_cast<std::uint64_t>(t)),
                                        noise_half_width);
    const ConfidenceReport report =
        bootstrap_interval(data, policy, mdp.initial(), mdp.gamma(), q_class, w_class, B, k,
                           derive_seed(seed, static_cast<std::uint64_t>(trials + t)), 1);
    CoverageTrial& row = summary.trials[t];
    row.raw_low = report.raw.low;
    row.raw_high = report.raw.high;
    row.boot_low = report.adjusted_low;
    row.boot_high = report.adjusted_high;
    row.raw_covers = report.raw.contains(summary.truth, kCoverTol);
    row.boot_covers = summary.truth >= row.boot_low - kCoverTol && summary.truth <= row.boot_high + kCoverTol;
  });
  for (const auto& row : summary.trials) {
    summary.raw_coverage += row.raw_covers ? 1.0 : 0.0;
    summary.boot_coverage += row.boot_covers ? 1.0 : 0.0;
    summary.raw_mean_length += row.raw_high - row.raw_low;
    summary.boot_mean_length += row.boot_high - row.boot_low;
  }
  if (trials > 0) {
    summary.raw_coverage /= trials;
    summary.boot_coverage /= trials;
    summary.raw_mean_length /= trials;
    summary.boot_mean_length /= trials;
  }
  return summary;
}

std::string coverage_csv(const CoverageSummary& summary) {
  std::string csv = "trial,raw_low,raw_high,boot_low,boot_high,raw_covers,boot_covers\n";
  for (std::size_t t = 0; t < summary.trials.size(); ++t) {
    const auto& r = summary.trials[t];
    csv += std::to_string(t) + "," + fmt(r.raw_low) + "," + fmt(r.raw_high) + "," + fmt(r.boot_low) + "," +
           fmt(r.boot_high) + "," + (r.raw_covers ? "1" : "0") + "," + (r.boot_covers ? "1" : "0") + "\n";
  }
  return csv;
}

}  // namespace mvi::harness
