#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "hetspde/scenario.hpp"
#include "hetspde/shapes.hpp"

using namespace hetspde;

namespace {

const std::string kMinimal =
    "coefficients.kind = constant\n"
    "grid.x_min = -4\n"
    "grid.x_max = 4\n"
    "grid.n = 81\n"
    "time.T = 1\n"
    "time.steps = 20\n";

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text, "test.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Shapes, RegistryValues) {
  EXPECT_DOUBLE_EQ(parse_shape("gaussian(1, 2)")(1.0), 1.0);
  EXPECT_DOUBLE_EQ(parse_shape("gaussian(0, 1, 2)")(1.0), 2.0 * std::exp(-0.5));
  EXPECT_DOUBLE_EQ(parse_shape("indicator(-1, 1)")(0.0), 1.0);
  EXPECT_DOUBLE_EQ(parse_shape("indicator(-1, 1, 3)")(2.0), 0.0);
  EXPECT_DOUBLE_EQ(parse_shape("sine(2, 0.5)")(1.0), 2.0 * std::sin(0.5));
  EXPECT_DOUBLE_EQ(parse_shape("constant(0.3)")(-7.0), 0.3);
  EXPECT_DOUBLE_EQ(parse_shape("tanh()")(0.4), std::tanh(0.4));
  EXPECT_DOUBLE_EQ(parse_shape("linear(2, 1)")(3.0), 7.0);
  EXPECT_DOUBLE_EQ(parse_shape("zero")(3.0), 0.0);
  EXPECT_DOUBLE_EQ(parse_shape("  gaussian( -1.5 , 0.7 , 1 ) ")(-1.5), 1.0);
}

TEST(Shapes, CanonicalFormRoundTrips) {
  for (const char* text : {"gaussian(-1.5, 0.7, 1)", "indicator(0, 2)", "sine(1, 2, 0.5, 1)", "tanh(2, 3)", "zero"}) {
    const Shape a = parse_shape(text);
    const Shape b = parse_shape(a.str());
    EXPECT_EQ(a.name, b.name);
    EXPECT_EQ(a.params, b.params);
    for (double x : {-2.0, 0.1, 1.3}) EXPECT_EQ(a(x), b(x));
  }
}

TEST(Shapes, RejectsBadInput) {
  EXPECT_THROW(parse_shape("lorentzian(1)"), std::invalid_argument);
  EXPECT_THROW(parse_shape("gaussian(1)"), std::invalid_argument);
  EXPECT_THROW(parse_shape("gaussian(1, 0)"), std::invalid_argument);
  EXPECT_THROW(parse_shape("gaussian(1, x)"), std::invalid_argument);
  EXPECT_THROW(parse_shape("gaussian(1, 2"), std::invalid_argument);
  EXPECT_FALSE(shape_signatures().empty());
}

TEST(Scenario, MinimalScenarioUsesDefaults) {
  const Scenario s = parse_scenario(kMinimal);
  EXPECT_EQ(s.grid.n, 81);
  EXPECT_EQ(s.ensemble.seed, 42u);
  EXPECT_EQ(s.ensemble.paths, 1000);
  EXPECT_FALSE(s.bspde.has_value());
  EXPECT_FALSE(s.game.has_value());
  EXPECT_DOUBLE_EQ(s.coefficients.field.a(1.0), 1.0);
}

TEST(Scenario, MissingRequiredBlockIsNamed) {
  const std::string text = "coefficients.kind = constant\ntime.T = 1\ntime.steps = 10\n";
  EXPECT_NE(error_of(text).find("missing required block 'grid'"), std::string::npos) << error_of(text);
}

TEST(Scenario, UnknownKeysAndBlocksCarryLineNumbers) {
  EXPECT_NE(error_of(kMinimal + "grid.spacing = 0.1\n").find("test.cfg:7: unknown key 'grid.spacing'"),
            std::string::npos);
  EXPECT_NE(error_of("# comment\n\nsolver.kind = x\n" + kMinimal).find("test.cfg:3: unknown block 'solver'"),
            std::string::npos);
  EXPECT_NE(error_of(kMinimal + "just words\n").find("test.cfg:7:"), std::string::npos);
}

TEST(Scenario, DuplicateKeyNamesTheFirstLine) {
  const std::string msg = error_of(kMinimal + "grid.n = 101\n");
  EXPECT_NE(msg.find("test.cfg:7: duplicate key 'grid.n' (first set on line 4)"), std::string::npos) << msg;
}

TEST(Scenario, MalformedValuesAreRejected) {
  EXPECT_NE(error_of("coefficients.kind = constant\ngrid.x_min = -4\ngrid.x_max = abc\ngrid.n = 81\n"
                     "time.T = 1\ntime.steps = 20\n")
                .find("test.cfg:3: grid.x_max: 'abc' is not a finite number"),
            std::string::npos);
  EXPECT_NE(error_of(kMinimal + "game.alpha1 = lorentzian(1)\n").find("test.cfg:7: game.alpha1"), std::string::npos);
  EXPECT_NE(error_of(kMinimal + "coefficients.rho_minus = 1\n").find("not used by kind = constant"),
            std::string::npos);
  EXPECT_NE(error_of(kMinimal + "game.alpha1 = zero\ngame.alpha2 = zero\ngame.xi = zero\ngame.box1 = 1, -1\n")
                .find("lower <= upper"),
            std::string::npos);
  EXPECT_NE(error_of(kMinimal + "game.alpha1 = zero\n").find("missing required key 'game.alpha2'"),
            std::string::npos);
  EXPECT_NE(error_of(kMinimal + "verify.checks = 12\n").find("1..11"), std::string::npos);
  EXPECT_NE(error_of(kMinimal + "ensemble.seed = -3\n").find("nonnegative integer"), std::string::npos);
}

TEST(Scenario, EllipticityViolationIsReported) {
  const std::string text = "coefficients.kind = piecewise\ncoefficients.a_plus = 3\ncoefficients.lambda = 0.5\n"
                           "coefficients.Lambda = 2\ngrid.x_min = -4\ngrid.x_max = 4\ngrid.n = 81\n"
                           "time.T = 1\ntime.steps = 20\n";
  EXPECT_NE(error_of(text).find("ellipticity"), std::string::npos);
  EXPECT_NE(error_of("coefficients.kind = piecewise\ngrid.x_min = -4\ngrid.x_max = 4\ngrid.n = 80\n"
                     "time.T = 1\ntime.steps = 20\n")
                .find("interface"),
            std::string::npos);
}

TEST(Scenario, FingerprintDependsOnTextAndSeed) {
  const Scenario a = parse_scenario(kMinimal);
  const Scenario b = parse_scenario(kMinimal + "# trailing comment\n");
  EXPECT_EQ(fingerprint(a, 42), fingerprint(a, 42));
  EXPECT_NE(fingerprint(a, 42), fingerprint(a, 7));
  EXPECT_NE(fingerprint(a, 42), fingerprint(b, 42));
  EXPECT_EQ(fingerprint_hex(a, 42).size(), 16u);
}

TEST(Scenario, GameBlockBuildsTheSpec) {
  const Scenario s = parse_scenario(kMinimal +
                                    "game.gamma2 = 2\ngame.sigma0 = 0.2\ngame.noise_profile = sqrt_a\n"
                                    "game.alpha1 = gaussian(-1, 0.5, 1)\ngame.alpha2 = zero\ngame.xi = zero\n"
                                    "game.box2 = -0.5, 0.5\n");
  const WeightedGrid grid = make_grid(s);
  const GameSpec spec = make_game_spec(s, grid);
  EXPECT_DOUBLE_EQ(spec.gamma2, 2.0);
  EXPECT_DOUBLE_EQ(spec.alpha1(30), 1.0);  // x = -1
  ASSERT_TRUE(spec.box2.has_value());
  EXPECT_DOUBLE_EQ(spec.box2->lower, -0.5);
  EXPECT_DOUBLE_EQ(spec.noise(grid)(40), 0.2);
}

TEST(Scenario, ShippedScenariosParse) {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(HETSPDE_SCENARIO_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    SCOPED_TRACE(entry.path().string());
    const Scenario s = load_scenario(entry.path().string());
    EXPECT_NO_THROW(make_grid(s));
    ++count;
  }
  EXPECT_GE(count, 6);
}
