#include "mvi/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mvi/errors.hpp"

namespace mvi::io {

namespace {

void expect_format(const Json& doc, const char* format) {
  if (!doc.is_object()) throw FormatError(std::string("expected a JSON object for ") + format);
  if (!doc.contains("format") || doc["format"] != format) {
    throw FormatError(std::string("missing or wrong \"format\" tag, expected \"") + format + "\"");
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer() ||
      doc["version"].get<int>() != kFormatVersion) {
    throw FormatError(std::string(format) + ": unsupported version");
  }
}

void reject_unknown(const Json& doc, const std::set<std::string>& allowed, const char* what) {
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw FormatError(std::string(what) + ": unknown key \"" + it.key() + "\"");
    }
  }
}

const Json& field(const Json& doc, const char* key, const char* what) {
  if (!doc.contains(key)) throw FormatError(std::string(what) + ": missing \"" + key + "\"");
  return doc[key];
}

int int_field(const Json& doc, const char* key, const char* what) {
  const Json& j = field(doc, key, what);
  if (!j.is_number_integer()) throw FormatError(std::string(what) + ": \"" + key + "\" must be an integer");
  return j.get<int>();
}

double number_field(const Json& doc, const char* key, const char* what) {
  const Json& j = field(doc, key, what);
  if (!j.is_number()) throw FormatError(std::string(what) + ": \"" + key + "\" must be a number");
  return j.get<double>();
}

Mat matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw FormatError(what + ": expected " + std::to_string(rows) + " rows");
  }
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vec row = vector_from_json(j[r], what);
    if (row.size() != cols) throw FormatError(what + ": row " + std::to_string(r) + " has wrong length");
    m.row(r) = row.transpose();
  }
  return m;
}

Json matrix_to_json(const Mat& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_to_json(m.row(r).transpose()));
  return out;
}

}  // namespace

Json vector_to_json(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vec vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw FormatError(what + ": expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError(what + ": expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Json mdp_to_json(const TabularMdp& mdp) {
  Json doc;
  doc["format"] = "mvi-mdp";
  doc["version"] = kFormatVersion;
  doc["n_states"] = mdp.n_states();
  doc["n_actions"] = mdp.n_actions();
  doc["gamma"] = mdp.gamma();
  doc["r_max"] = mdp.r_max();
  doc["initial"] = vector_to_json(mdp.initial());
  Json transition = Json::array();
  Json reward = Json::array();
  for (int s = 0; s < mdp.n_states(); ++s) {
    Json ts = Json::array();
    Json rs = Json::array();
    for (int a = 0; a < mdp.n_actions(); ++a) {
      ts.push_back(vector_to_json(mdp.transition().row(mdp.index(s, a)).transpose()));
      rs.push_back(mdp.reward(s, a));
    }
    transition.push_back(std::move(ts));
    reward.push_back(std::move(rs));
  }
  doc["transition"] = std::move(transition);
  doc["mean_reward"] = std::move(reward);
  return doc;
}

TabularMdp mdp_from_json(const Json& doc) {
  constexpr const char* what = "mdp";
  expect_format(doc, "mvi-mdp");
  reject_unknown(doc, {"format", "version", "n_states", "n_actions", "gamma", "r_max", "initial",
                       "transition", "mean_reward"},
                 what);
  const int ns = int_field(doc, "n_states", what);
  const int na = int_field(doc, "n_actions", what);
  if (ns < 1 || na < 1) throw FormatError("mdp: sizes must be positive");
  const double gamma = number_field(doc, "gamma", what);
  const double r_max = number_field(doc, "r_max", what);
  const Json& tr = field(doc, "transition", what);
  const Json& rw = field(doc, "mean_reward", what);
  if (!tr.is_array() || static_cast<int>(tr.size()) != ns || !rw.is_array() ||
      static_cast<int>(rw.size()) != ns) {
    throw FormatError("mdp: transition and mean_reward need one entry per state");
  }
  Mat p(ns * na, ns);
  Vec r(ns * na);
  for (int s = 0; s < ns; ++s) {
    const Mat ps = matrix_from_json(tr[s], na, ns, "mdp transition");
    p.middleRows(s * na, na) = ps;
    const Vec rs = vector_from_json(rw[s], "mdp mean_reward");
    if (rs.size() != na) throw FormatError("mdp: mean_reward row has wrong length");
    r.segment(s * na, na) = rs;
  }
  const Json& init = field(doc, "initial", what);
  try {
    if (init.is_number_integer()) {
      return TabularMdp(ns, na, std::move(p), std::move(r), r_max, gamma, init.get<int>());
    }
    return TabularMdp(ns, na, std::move(p), std::move(r), r_max, gamma,
                      vector_from_json(init, "mdp initial"));
  } catch (const InvalidModel& e) {
    throw FormatError(std::string("mdp: ") + e.what());
  }
}

Json policy_to_json(const Policy& policy) {
  Json doc;
  doc["format"] = "mvi-policy";
  doc["version"] = kFormatVersion;
  doc["n_states"] = policy.n_states();
  doc["n_actions"] = policy.n_actions();
  doc["action_probs"] = matrix_to_json(policy.probs());
  return doc;
}

Policy policy_from_json(const Json& doc) {
  constexpr const char* what = "policy";
  expect_format(doc, "mvi-policy");
  reject_unknown(doc, {"format", "version", "n_states", "n_actions", "action_probs"}, what);
  const int ns = int_field(doc, "n_states", what);
  const int na = int_field(doc, "n_actions", what);
  if (ns < 1 || na < 1) throw FormatError("policy: sizes must be positive");
  try {
    return Policy(matrix_from_json(field(doc, "action_probs", what), ns, na, "policy action_probs"));
  } catch (const InvalidModel& e) {
    throw FormatError(std::string("policy: ") + e.what());
  }
}

Json class_to_json(const FunctionClass& fc) {
  Json doc;
  doc["format"] = "mvi-class";
  doc["version"] = kFormatVersion;
  doc["index_space"] = to_string(fc.index_space());
  doc["dimension"] = fc.dimension();
  switch (fc.variant()) {
    case FunctionClass::Variant::Box:
      doc["variant"] = "box";
      doc["lower"] = vector_to_json(fc.lower());
      doc["upper"] = vector_to_json(fc.upper());
      break;
    case FunctionClass::Variant::Polytope:
      doc["variant"] = "polytope";
      doc["ineq_lhs"] = matrix_to_json(fc.ineq_lhs());
      doc["ineq_rhs"] = vector_to_json(fc.ineq_rhs());
      doc["eq_lhs"] = matrix_to_json(fc.eq_lhs());
      doc["eq_rhs"] = vector_to_json(fc.eq_rhs());
      break;
    case FunctionClass::Variant::FiniteSet: {
      doc["variant"] = "finite_set";
      Json members = Json::array();
      for (const Vec& m : fc.members()) members.push_back(vector_to_json(m));
      doc["members"] = std::move(members);
      break;
    }
    case FunctionClass::Variant::Singleton:
      doc["variant"] = "singleton";
      doc["value"] = vector_to_json(fc.members().front());
      break;
  }
  return doc;
}

FunctionClass class_from_json(const Json& doc) {
  constexpr const char* what = "class";
  expect_format(doc, "mvi-class");
  const std::string space_name = field(doc, "index_space", what).get<std::string>();
  IndexSpace space;
  if (space_name == "state_action") {
    space = IndexSpace::StateAction;
  } else if (space_name == "state") {
    space = IndexSpace::State;
  } else {
    throw FormatError("class: index_space must be \"state_action\" or \"state\"");
  }
  const int dim = int_field(doc, "dimension", what);
  if (dim < 1) throw FormatError("class: dimension must be positive");
  const std::string variant = field(doc, "variant", what).get<std::string>();
  const std::set<std::string> common{"format", "version", "index_space", "dimension", "variant"};
  auto with = [&](std::initializer_list<std::string> extra) {
    std::set<std::string> keys = common;
    keys.insert(extra);
    reject_unknown(doc, keys, what);
  };
  auto checked = [&](Vec v, const char* name) {
    if (v.size() != dim) throw FormatError(std::string("class: \"") + name + "\" has wrong length");
    return v;
  };
  try {
    if (variant == "box") {
      with({"lower", "upper"});
      return FunctionClass::box(checked(vector_from_json(field(doc, "lower", what), "class lower"), "lower"),
                                checked(vector_from_json(field(doc, "upper", what), "class upper"), "upper"),
                                space);
    }
    if (variant == "polytope") {
      with({"ineq_lhs", "ineq_rhs", "eq_lhs", "eq_rhs"});
      Vec b = doc.contains("ineq_rhs") ? vector_from_json(doc["ineq_rhs"], "class ineq_rhs") : Vec(0);
      Vec e = doc.contains("eq_rhs") ? vector_from_json(doc["eq_rhs"], "class eq_rhs") : Vec(0);
      Mat A = doc.contains("ineq_lhs") ? matrix_from_json(doc["ineq_lhs"], b.size(), dim, "class ineq_lhs")
                                       : Mat(0, dim);
      Mat E = doc.contains("eq_lhs") ? matrix_from_json(doc["eq_lhs"], e.size(), dim, "class eq_lhs")
                                     : Mat(0, dim);
      return FunctionClass::polytope(std::move(A), std::move(b), std::move(E), std::move(e), space);
    }
    if (variant == "finite_set") {
      with({"members"});
      const Json& members = field(doc, "members", what);
      if (!members.is_array()) throw FormatError("class: \"members\" must be an array");
      std::vector<Vec> list;
      for (const Json& m : members) list.push_back(checked(vector_from_json(m, "class member"), "members"));
      return FunctionClass::finite_set(std::move(list), space);
    }
    if (variant == "singleton") {
      with({"value"});
      return FunctionClass::singleton(
          checked(vector_from_json(field(doc, "value", what), "class value"), "value"), space);
    }
  } catch (const DimensionMismatch& e) {
    throw FormatError(std::string("class: ") + e.what());
  }
  throw FormatError("class: unknown variant \"" + variant + "\"");
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("failed writing " + path.string());
}

TabularMdp read_mdp(const std::filesystem::path& path) { return mdp_from_json(read_json(path)); }
void write_mdp(const std::filesystem::path& path, const TabularMdp& mdp) {
  write_text(path, mdp_to_json(mdp).dump(2) + "\n");
}
Policy read_policy(const std::filesystem::path& path) { return policy_from_json(read_json(path)); }
void write_policy(const std::filesystem::path& path, const Policy& policy) {
  write_text(path, policy_to_json(policy).dump(2) + "\n");
}
FunctionClass read_class(const std::filesystem::path& path) { return class_from_json(read_json(path)); }
void write_class(const std::filesystem::path& path, const FunctionClass& fc) {
  write_text(path, class_to_json(fc).dump(2) + "\n");
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out = "# n_states=" + std::to_string(data.n_states) +
                    " n_actions=" + std::to_string(data.n_actions) +
                    " seed=" + std::to_string(data.seed) + "\n";
  out += "s,a,r,s_next,weight\n";
  char buf[128];
  for (std::size_t j = 0; j < data.tuples.size(); ++j) {
    const Transition& t = data.tuples[j];
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%d,%.17g\n", t.s, t.a, t.r, t.s_next, data.weights[j]);
    out += buf;
  }
  return out;
}

Dataset dataset_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Dataset data;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "# n_states=%d n_actions=%d seed=%" SCNu64, &data.n_states,
                  &data.n_actions, &data.seed) != 3) {
    throw FormatError("dataset: first line must be \"# n_states=N n_actions=A seed=S\"");
  }
  if (!std::getline(in, line) || line != "s,a,r,s_next,weight") {
    throw FormatError("dataset: second line must be the column header s,a,r,s_next,weight");
  }
  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Transition t;
    double w = 0.0;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%d,%lf%c", &t.s, &t.a, &t.r, &t.s_next, &w, &tail) != 5) {
      throw FormatError("dataset: malformed row at line " + std::to_string(line_no));
    }
    data.tuples.push_back(t);
    data.weights.push_back(w);
  }
  try {
    data.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
  return data;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return dataset_from_csv(buffer.str());
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  write_text(path, dataset_to_csv(data));
}

}  // namespace mvi::io
