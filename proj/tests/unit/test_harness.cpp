#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "mvi/errors.hpp"
#include "mvi/harness.hpp"

using namespace mvi;
using harness::Json;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(MVI_SOURCE_DIR) / "configs";

Json config(const std::string& name) { return io::read_json(kConfigs / name); }

bool mentions(const std::vector<harness::Diagnostic>& diags, const std::string& path) {
  return std::any_of(diags.begin(), diags.end(), [&](const auto& d) { return d.path == path; });
}

}  // namespace

TEST_CASE("shipped configs validate") {
  for (const auto& entry : std::filesystem::directory_iterator(kConfigs)) {
    CAPTURE(entry.path().string());
    const auto diags = harness::validate(io::read_json(entry.path()));
    for (const auto& d : diags) MESSAGE(d.path << ": " << d.message);
    CHECK(diags.empty());
  }
}

TEST_CASE("validation diagnostics") {
  SUBCASE("empty config") {
    const auto diags = harness::validate(Json::object());
    CHECK(mentions(diags, "/experiment"));
  }
  SUBCASE("missing fields for an experiment") {
    const auto diags = harness::validate(Json{{"experiment", "eval"}});
    CHECK(mentions(diags, "/mdp"));
    CHECK(mentions(diags, "/q_class"));
    CHECK(mentions(diags, "/w_class"));
  }
  SUBCASE("bootstrap order index larger than the resample count") {
    Json c = config("eval_empirical_bootstrap.json");
    c["confidence"]["B"] = 5;
    c["confidence"]["k"] = 6;
    const auto diags = harness::validate(c);
    REQUIRE(mentions(diags, "/confidence/k"));
    const auto it = std::find_if(diags.begin(), diags.end(), [](const auto& d) { return d.path == "/confidence/k"; });
    CHECK(it->message.find("/confidence/B") != std::string::npos);
  }
  SUBCASE("unknown keys") {
    Json c = config("eval_random.json");
    c["mdp"]["colour"] = "red";
    CHECK(mentions(harness::validate(c), "/mdp/colour"));
  }
  SUBCASE("bad enum") {
    Json c = config("eval_random.json");
    c["q_class"]["kind"] = "ellipsoid";
    CHECK(mentions(harness::validate(c), "/q_class/kind"));
  }
  SUBCASE("running an invalid config raises a config error") {
    CHECK_THROWS_AS(harness::run(Json::object()), ConfigError);
  }
}

TEST_CASE("single-state evaluation") {
  const harness::RunOutput out = harness::run(config("eval_single_state.json"));
  const Json& r = out.result["result"];
  CHECK(r["interval"]["low"].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r["interval"]["high"].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(out.result["experiment"] == "eval");
  CHECK(out.result.contains("config_hash"));
  CHECK(out.result.contains("tolerances"));
}

TEST_CASE("runs are deterministic and independent of the worker count") {
  harness::RunOptions one;
  one.jobs = 1;
  harness::RunOptions four;
  four.jobs = 4;
  for (const char* name : {"sweep_reversal.json", "policy_opt.json", "eval_empirical_bootstrap.json"}) {
    CAPTURE(name);
    const auto a = harness::run(config(name), one);
    const auto b = harness::run(config(name), four);
    CHECK(a.tables == b.tables);
    CHECK(a.result["result"] == b.result["result"]);
  }
}

TEST_CASE("seed override changes sampled results") {
  harness::RunOptions opts;
  const auto base = harness::run(config("eval_empirical_bootstrap.json"), opts);
  opts.seed = 12345;
  const auto other = harness::run(config("eval_empirical_bootstrap.json"), opts);
  CHECK(other.result["seed"] == 12345);
  CHECK_FALSE(base.result["result"] == other.result["result"]);
}

TEST_CASE("outputs are written") {
  const auto dir = std::filesystem::temp_directory_path() / "mvi_harness_out";
  std::filesystem::remove_all(dir);
  const auto out = harness::run(config("sweep_reversal.json"));
  harness::write_outputs(out, dir);
  CHECK(std::filesystem::exists(dir / "result.json"));
  CHECK(std::filesystem::exists(dir / "sweep.csv"));
  CHECK(io::read_json(dir / "result.json")["experiment"] == "sweep");
}

TEST_CASE("sign changes") {
  CHECK(harness::count_sign_changes({1.0, 0.5, -0.5, -1.0}, 1e-9) == 1);
  CHECK(harness::count_sign_changes({1.0, 0.0, -1.0}, 1e-9) == 1);
  CHECK(harness::count_sign_changes({1.0, -1.0, 1.0}, 1e-9) == 2);
  CHECK(harness::count_sign_changes({-1.0, 1e-12, -2.0}, 1e-9) == 0);
  CHECK(harness::count_sign_changes({}, 1e-9) == 0);
}

TEST_CASE("config hash") {
  const Json c = config("eval_random.json");
  CHECK(harness::config_hash(c) == harness::config_hash(Json::parse(c.dump())));
  Json d = c;
  d["seed"] = 99;
  CHECK(harness::config_hash(c) != harness::config_hash(d));
}
