#include <catch2/catch_amalgamated.hpp>

#include "skytrust/config.hpp"

using namespace skytrust;

namespace {

std::string key_path_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const ConfigError &e) {
    return e.key_path();
  }
  return "<no error>";
}

} // namespace

TEST_CASE("defaults validate and round-trip through JSON", "[config]") {
  const ScenarioConfig c;
  CHECK_NOTHROW(validate(c));
  const auto j = to_json(c);
  CHECK(to_json(config_from_json(j)) == j);
  CHECK(j["world"]["uav_count"] == 20);
  CHECK(j["method"] == "dtsam");
  CHECK(c.rogue_count() == 4);
}

TEST_CASE("presets", "[config]") {
  const auto all = presets();
  REQUIRE(all.size() == 4);
  for (const auto &p : all) {
    INFO(p.name);
    CHECK_NOTHROW(validate(p.config));
    CHECK(to_json(preset(p.name)) == to_json(p.config));
  }
  CHECK(preset("paper-scale").uav_count == 50);
  CHECK(preset("paper-scale").user_count == 100);
  CHECK(preset("paper-scale").area_km == 5.0);
  CHECK(preset("star-sparse").topology == TopologyKind::Star);
  CHECK_THROWS_AS(preset("nope"), ConfigError);
}

TEST_CASE("a preset key selects the base and other keys override it", "[config]") {
  const auto c = config_from_json(nlohmann::json::parse(R"({"preset": "paper-scale", "seed": 9, "world": {"rounds": 40}})"));
  CHECK(c.uav_count == 50);
  CHECK(c.seed == 9);
  CHECK(c.rounds == 40);
  CHECK(c.mesh_radius_km == 1.0);
}

TEST_CASE("unknown keys are rejected with their path", "[config]") {
  CHECK(key_path_of([] { config_from_json(nlohmann::json::parse(R"({"colour": 1})")); }) == "colour");
  CHECK(key_path_of([] { config_from_json(nlohmann::json::parse(R"({"world": {"uavs": 3}})")); }) == "world.uavs");
  CHECK(key_path_of([] {
          config_from_json(nlohmann::json::parse(R"({"behavior": {"rogue": {"pdr": [0.1, 0.2], "x": 1}}})"));
        }) == "behavior.rogue.x");
}

TEST_CASE("type and range errors name the offending key", "[config]") {
  auto path = [](const char *text) { return key_path_of([&] { config_from_json(nlohmann::json::parse(text)); }); };
  CHECK(path(R"({"world": {"uav_count": -3}})") == "world.uav_count");
  CHECK(path(R"({"world": {"uav_count": 0}})") == "world.uav_count");
  CHECK(path(R"({"world": {"rogue_fraction": 1.5}})") == "world.rogue_fraction");
  CHECK(path(R"({"method": "pbft"})") == "method");
  CHECK(path(R"({"world": {"topology": {"kind": "ring"}}})") == "world.topology.kind");
  CHECK(path(R"({"world": {"uav_count": 5, "topology": {"kind": "star", "hub": 5}}})") == "world.topology.hub");
  CHECK(path(R"({"trust": {"alpha": 0.9}})") == "trust");
  CHECK(path(R"({"behavior": {"honest": {"pdr": [0.9, 0.5]}}})") == "behavior.honest.pdr");
  CHECK(path(R"({"behavior": {"compromise_window": [1]}})") == "behavior.compromise_window");
  CHECK(path(R"({"fl": {"learning_rate": 0}})") == "fl.learning_rate");
  CHECK(path(R"({"energy": {"base_drain": -1}})") == "energy.base_drain");
  CHECK(path(R"({"preset": 3})") == "preset");
  CHECK(path(R"([1, 2])") == "<root>");
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("command-line overrides", "[config]") {
  const ScenarioConfig base;
  auto c = apply_override(base, "world.uav_count=30");
  CHECK(c.uav_count == 30);
  c = apply_override(c, "method=sbst");
  CHECK(c.method == Method::Sbst);
  c = apply_override(c, "behavior.rogue.pdr=[0.1,0.3]");
  CHECK(c.rogue.pdr == std::array<double, 2>{0.1, 0.3});
  c = apply_override(c, "fl.aggregation=fedavg");
  CHECK(c.aggregation == AggregationMode::FedAvg);
  CHECK_THROWS_AS(apply_override(base, "world.nope=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(base, "no_equals_sign"), ConfigError);
  CHECK_THROWS_AS(apply_override(base, "world.uav_count=many"), ConfigError);

  // coupled keys: each alone breaks the sum-to-one rule, together they are valid
  const std::vector<std::string> weights{"trust.beta=0.3", "trust.gamma=0.2"};
  CHECK_THROWS_AS(apply_override(base, weights[0]), ConfigError);
  c = apply_overrides(base, weights);
  CHECK(c.trust_weights.beta == 0.3);
  CHECK(c.trust_weights.gamma == 0.2);
}

TEST_CASE("run ids depend on the whole config", "[config]") {
  ScenarioConfig a;
  ScenarioConfig b = a;
  CHECK(run_id(a) == run_id(b));
  CHECK(run_id(a).rfind("dtsam-s1-", 0) == 0);
  CHECK(run_id(a).size() == std::string("dtsam-s1-").size() + 12);
  b.energy.base_drain = 0.6;
  CHECK(run_id(a) != run_id(b));
}
