#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mvi/empirical.hpp"
#include "mvi/function_class.hpp"
#include "mvi/mdp.hpp"

namespace mvi::io {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// {"format": "mvi-mdp", "version": 1, "n_states", "n_actions", "gamma",
///  "r_max", "initial": index or array, "transition": [s][a][s'],
///  "mean_reward": [s][a]}
Json mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const Json& doc);

/// {"format": "mvi-policy", "version": 1, "n_states", "n_actions",
///  "action_probs": [s][a]}
Json policy_to_json(const Policy& policy);
Policy policy_from_json(const Json& doc);

/// {"format": "mvi-class", "version": 1, "index_space", "dimension",
///  "variant": "box" | "polytope" | "finite_set" | "singleton", ...}
/// box: "lower", "upper"; polytope: "ineq_lhs", "ineq_rhs", "eq_lhs",
/// "eq_rhs"; finite_set: "members"; singleton: "value".
Json class_to_json(const FunctionClass& fc);
FunctionClass class_from_json(const Json& doc);

Json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

TabularMdp read_mdp(const std::filesystem::path& path);
void write_mdp(const std::filesystem::path& path, const TabularMdp& mdp);
Policy read_policy(const std::filesystem::path& path);
void write_policy(const std::filesystem::path& path, const Policy& policy);
FunctionClass read_class(const std::filesystem::path& path);
void write_class(const std::filesystem::path& path, const FunctionClass& fc);

/// Header "# n_states=N n_actions=A seed=S" followed by "s,a,r,s_next,weight"
/// rows, with doubles written to 17 significant digits.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text);
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const Dataset& data);

Json vector_to_json(const Vec& v);
Vec vector_from_json(const Json& j, const std::string& what);

}  // namespace mvi::io
