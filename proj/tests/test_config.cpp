#include <gtest/gtest.h>

#include <filesystem>

#include "waa/config.hpp"

using namespace waa;

namespace {

const char* minimal = R"(
[experiment]
name = "t"
horizon = 20
[structure]
m_max = 1
[pool]
grid_size = 2
[[scenario]]
name = "flat"
[[scenario.rule]]
kind = "constant"
value = 0.25
[[rule]]
name = "half"
level = 1
values = [0.5, 0.5]
)";

std::vector<Diagnostic> diagnostics_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const config_errors& e) {
    return e.diagnostics();
  }
  return {};
}

bool has_field(const std::vector<Diagnostic>& d, const std::string& prefix) {
  for (const auto& x : d)
    if (x.field.rfind(prefix, 0) == 0) return true;
  return false;
}

}  // namespace

TEST(Config, ParsesMinimal) {
  auto c = parse_config(minimal);
  EXPECT_EQ(c.name, "t");
  EXPECT_EQ(c.horizon, 20u);
  ASSERT_EQ(c.scenarios.size(), 1u);
  EXPECT_EQ(c.scenarios[0].rules[0].value, 0.25);
  EXPECT_EQ(c.rules[0].values, (std::vector<double>{0.5, 0.5}));
  EXPECT_FALSE(c.randomized());
}

TEST(Config, RoundTripShippedConfigs) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(WAA_SOURCE_DIR "/configs"))
    if (entry.path().extension() == ".toml") files.push_back(entry.path());
  files.push_back(WAA_SOURCE_DIR "/tests/data/small.toml");
  ASSERT_GE(files.size(), 2u);
  for (const auto& f : files) {
    SCOPED_TRACE(f.string());
    auto a = load_config(f);
    auto text = serialize_config(a);
    auto b = parse_config(text);
    EXPECT_EQ(a, b);
    EXPECT_EQ(serialize_config(b), text);
    EXPECT_EQ(config_hash(a), config_hash(b));
  }
}

TEST(Config, HashIsStableAndSensitive) {
  auto a = parse_config(minimal);
  const auto h = config_hash(a);
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(h, config_hash(parse_config(minimal)));
  a.horizon = 21;
  EXPECT_NE(h, config_hash(a));
}

TEST(Config, EmptyScenarioListRejected) {
  auto d = diagnostics_of(R"(
[[rule]]
name = "half"
level = 1
values = [0.5, 0.5]
)");
  EXPECT_TRUE(has_field(d, "scenario"));
}

TEST(Config, NonPositivePriorRejected) {
  std::string text = minimal;
  text += "[[pool.prior_override]]\nexpert = 1\nq = -0.5\n";
  auto d = diagnostics_of(text);
  EXPECT_TRUE(has_field(d, "pool.prior_override"));
}

TEST(Config, UnknownKeysReported) {
  std::string text = minimal;
  text += "[verify]\nplnt = \"lemma5\"\n";
  auto d = diagnostics_of(text);
  ASSERT_TRUE(has_field(d, "verify.plnt"));
}

TEST(Config, TypeErrorsAndBadValuesReported) {
  auto d = diagnostics_of(R"(
[experiment]
horizon = "long"
mode = "sometimes"
[structure]
m_max = 1
[loss]
kind = "zero_one"
[[scenario]]
name = "s"
kind = "adversarial_switch"
[[scenario.rule]]
kind = "constant"
[[rule]]
name = "r"
values = [0.5, 0.5]
)");
  EXPECT_TRUE(has_field(d, "experiment.horizon"));
  auto d2 = diagnostics_of(R"(
[experiment]
mode = "deterministic"
[structure]
m_max = 1
[loss]
kind = "zero_one"
[[scenario]]
name = "s"
kind = "adversarial_switch"
[[scenario.rule]]
kind = "constant"
[[rule]]
name = "r"
values = [0.5, 0.5]
)");
  EXPECT_TRUE(has_field(d2, "loss.kind"));
  EXPECT_TRUE(has_field(d2, "scenario.s.rule"));
  EXPECT_TRUE(has_field(d2, "rule.r.level"));
}

TEST(Config, TomlSyntaxError) {
  auto d = diagnostics_of("[experiment\nname = 1");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].field, "toml");
}

TEST(Config, SeedCountAndOverride) {
  std::string text = minimal;
  text.replace(text.find("horizon = 20"), 12, "horizon = 20\nmode = \"randomized\"\nseed_count = 3\nseed_base = 10");
  auto c = parse_config(text);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{10, 11, 12}));
  apply_seed_override(c, 7);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{7, 8, 9}));
  EXPECT_EQ(c.scenarios[0].seed, 7u);
}

TEST(Config, BuildersFollowConfig) {
  auto c = parse_config(minimal);
  EXPECT_EQ(make_grid(c).values(), (std::vector<double>{0.0, 1.0}));
  c.pool.grid = {0.2, 0.4};
  EXPECT_EQ(make_grid(c).values(), (std::vector<double>{0.2, 0.4}));
  RuleConfig r;
  r.function = ObservationRule{};
  r.function->kind = ObservationRule::Kind::step;
  r.function->low = 0.1;
  r.function->high = 0.7;
  c.m_max = 1;
  ApproximationStructure s(SignalSpace::unit_interval(), 1);
  EXPECT_EQ(rule_points(c, r, s), (std::vector<double>{0.1, 0.7}));
}

TEST(Config, DiagnosticMessageNamesFieldOnce) {
  try {
    parse_config("[[rule]]\nname = \"r\"\nlevel = 1\nvalues = [0.5, 0.5]\n");
    FAIL();
  } catch (const config_errors& e) {
    EXPECT_EQ(e.field(), "scenario");
    EXPECT_EQ(std::string(e.what()), "scenario: at least one scenario is required");
  }
}
