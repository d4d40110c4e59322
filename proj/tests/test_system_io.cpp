#include <gtest/gtest.h>

#include <limits>
#include <sstream>

#include "support.hpp"

using namespace sprify;
using namespace testutil;

TEST(SystemFiles, FixturesMatchInMemoryDefinitions) {
  const struct {
    const char* file;
    DescriptorSystem sys;
  } cases[] = {{"integrator.json", sys_integrator()},
               {"descriptor_2x2.json", sys_descriptor_2x2()},
               {"rhp_zero_pair.json", sys_rhp_zero_pair()},
               {"singular_a_d.json", sys_singular_a_d()},
               {"scalar_unstable.json", sys_scalar_unstable()}};
  for (const auto& c : cases) {
    const DescriptorSystem loaded = load_system(data_file(c.file));
    EXPECT_EQ(loaded.E, c.sys.E) << c.file;
    EXPECT_EQ(loaded.A, c.sys.A) << c.file;
    EXPECT_EQ(loaded.B, c.sys.B) << c.file;
    EXPECT_EQ(loaded.C, c.sys.C) << c.file;
    EXPECT_EQ(loaded.D, c.sys.D) << c.file;
  }
}

TEST(SystemFiles, RoundTripIsLossless) {
  DescriptorSystem sys = sys_descriptor_2x2();
  sys.A(0, 0) = 0.1;
  sys.A(0, 1) = 1.0 / 3.0;
  sys.B(0, 0) = 1e-17;
  sys.C(0, 1) = 12345.678901234567;
  sys.D(0, 0) = -2.5e300;
  sys.E(1, 1) = std::numeric_limits<double>::min();

  const std::string text = system_to_json(sys).dump();
  const DescriptorSystem back = parse_system(json::parse(text));
  EXPECT_EQ(back.E, sys.E);
  EXPECT_EQ(back.A, sys.A);
  EXPECT_EQ(back.B, sys.B);
  EXPECT_EQ(back.C, sys.C);
  EXPECT_EQ(back.D, sys.D);
}

TEST(SystemFiles, ParseRejectsMalformedInput) {
  json good = system_to_json(sys_descriptor_2x2());

  json j = good;
  j.erase("D");
  EXPECT_THROW(parse_system(j), Error);

  j = good;
  j["A"] = json::array({json::array({1.0, 2.0})});  // one row for n = 2
  EXPECT_THROW(parse_system(j), Error);

  j = good;
  j["B"][0][0] = "x";
  EXPECT_THROW(parse_system(j), Error);

  j = good;
  j["n"] = 0;
  EXPECT_THROW(parse_system(j), Error);

  j = good;
  j["n"] = 1.5;
  EXPECT_THROW(parse_system(j), Error);

  j = good;
  j["C"][0][0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(parse_system(j), Error);

  EXPECT_THROW(parse_system(json::array()), Error);
  EXPECT_THROW(load_system("/nonexistent/path.json"), Error);
}

TEST(ControllerFiles, SynthesisOutputRoundTrips) {
  SynthesisOptions opts;
  opts.q_scale = 6.0;
  const SynthesisResult res = synthesize(sys_scalar_unstable(), opts);
  ASSERT_TRUE(res.feasible);

  const json j = controller_to_json(*res.gains, *res.decomposition);
  const ControllerData c = parse_controller(json::parse(j.dump()));
  EXPECT_EQ(c.K, res.gains->K);
  EXPECT_EQ(c.L, res.gains->L);
  ASSERT_TRUE(c.H1 && c.D2 && c.N && c.kappa);
  EXPECT_EQ(*c.N, res.gains->N);
  EXPECT_EQ(*c.kappa, res.gains->kappa);
  ASSERT_TRUE(c.A2 && c.B2 && c.C2);  // strictly proper part present for this plant
  EXPECT_EQ(*c.A2, res.decomposition->A2);
  ASSERT_TRUE(c.P && c.Q);
  EXPECT_EQ(*c.P, *res.gains->P);
}

TEST(ControllerFiles, GainFixtureLoads) {
  const ControllerData c = load_controller(data_file("scalar_unstable_gains.json"));
  EXPECT_EQ(c.K, Matrix{{-3.0}});
  EXPECT_EQ(c.L, Matrix{{1.0}});
  EXPECT_FALSE(c.H1.has_value());
  EXPECT_FALSE(c.kappa.has_value());
}

TEST(ControllerFiles, ParseRejectsMalformedInput) {
  json good = json{{"K", json::array({json::array({-3.0})})}, {"L", json::array({json::array({1.0})})}};
  EXPECT_NO_THROW(parse_controller(good));

  json j = good;
  j.erase("L");
  EXPECT_THROW(parse_controller(j), Error);

  j = good;
  j["K"] = 5;
  EXPECT_THROW(parse_controller(j), Error);

  j = good;
  j["K"] = json::array();
  EXPECT_THROW(parse_controller(j), Error);

  j = good;
  j["L"] = json::array({json::array({1.0, 2.0})});  // not square against K
  EXPECT_THROW(parse_controller(j), Error);

  j = good;
  j["intermediates"] = json::array();
  EXPECT_THROW(parse_controller(j), Error);

  j = good;
  j["intermediates"] = json{{"H1", json::array()}};
  EXPECT_THROW(parse_controller(j), Error);

  j = good;
  j["intermediates"] = json{{"kappa", "four"}};
  EXPECT_THROW(parse_controller(j), Error);
}

TEST(ComplexText, ParseAcceptsUsualForms) {
  EXPECT_EQ(parse_complex("1"), Complex(1.0, 0.0));
  EXPECT_EQ(parse_complex("-5"), Complex(-5.0, 0.0));
  EXPECT_EQ(parse_complex("2i"), Complex(0.0, 2.0));
  EXPECT_EQ(parse_complex("i"), Complex(0.0, 1.0));
  EXPECT_EQ(parse_complex("-i"), Complex(0.0, -1.0));
  EXPECT_EQ(parse_complex("1+2i"), Complex(1.0, 2.0));
  EXPECT_EQ(parse_complex("1-2i"), Complex(1.0, -2.0));
  EXPECT_EQ(parse_complex("-0.5-0.25i"), Complex(-0.5, -0.25));
  EXPECT_EQ(parse_complex("1e-3+2e+1i"), Complex(0.001, 20.0));
  EXPECT_EQ(parse_complex(" 1 + 2i "), Complex(1.0, 2.0));
  EXPECT_EQ(parse_complex("3-i"), Complex(3.0, -1.0));
  EXPECT_EQ(parse_complex("0+0i"), Complex(0.0, 0.0));
}

TEST(ComplexText, ParseRejectsJunk) {
  for (const char* bad : {"", "   ", "abc", "1+2", "1++2i", "2i+3", "1+ i2", "1e", "--1"}) {
    EXPECT_THROW(parse_complex(bad), Error) << "input: \"" << bad << "\"";
  }
}

TEST(ComplexText, FormatMatchesConventions) {
  EXPECT_EQ(format_complex(Complex(1.0, 0.0)), "1");
  EXPECT_EQ(format_complex(Complex(-0.25, 0.0)), "-0.25");
  EXPECT_EQ(format_complex(Complex(1.0, 2.0)), "1+2i");
  EXPECT_EQ(format_complex(Complex(1.0, -2.0)), "1-2i");
  EXPECT_EQ(format_complex(Complex(0.0, 1.0)), "0+1i");
  EXPECT_EQ(format_complex(Complex(0.0, -1.0)), "0-1i");
}

TEST(ComplexText, FormatParseRoundTrip) {
  std::mt19937_64 rng(61);
  for (int t = 0; t < 50; ++t) {
    const Complex z(uniform(rng, -10.0, 10.0), uniform(rng, -10.0, 10.0));
    const Complex back = parse_complex(format_complex(z, 17));
    EXPECT_LE(std::abs(back - z), 1e-15 * std::abs(z));
  }
}
