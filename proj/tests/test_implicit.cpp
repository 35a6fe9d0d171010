#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "stormfit/implicit.hpp"

using namespace stormfit;

namespace {

const std::vector<std::string> kXY = {"x", "y"};

DesignMatrix circle_matrix(double radius, std::size_t n_points) {
  std::vector<TermDescriptor> terms = {TermDescriptor::square("x"), TermDescriptor::square("y")};
  std::vector<Observation> recs;
  for (std::size_t i = 0; i < n_points; ++i) {
    const double angle = 2.0 * std::numbers::pi * double(i) / double(n_points);
    recs.push_back({{"x", radius * std::cos(angle)}, {"y", radius * std::sin(angle)}});
  }
  return evaluate(terms, recs);
}

}  // namespace

TEST_CASE("fit_unity: exact cases") {
  SUBCASE("single constant column") {
    std::vector<TermDescriptor> terms = {TermDescriptor::linear("x")};
    std::vector<Observation> recs = {{{"x", 2.0}}, {{"x", 2.0}}, {{"x", 2.0}}};
    const auto model = fit_unity(evaluate(terms, recs));
    CHECK(model.alpha[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(model.r_squared == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(model.n_records == 3);
  }
  SUBCASE("points on the circle x^2 + y^2 = 4 recover alpha = (1/4, 1/4) exactly") {
    const auto m = circle_matrix(2.0, 12);  // angles 0, 30, ..., 330 degrees
    const auto model = fit_unity(m);
    CHECK(model.alpha[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(model.alpha[1] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(model.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("zero-mean noise column fits nothing") {
    std::mt19937 rng(3);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<TermDescriptor> terms = {TermDescriptor::linear("x")};
    std::vector<Observation> recs;
    for (int i = 0; i < 20000; ++i) recs.push_back({{"x", dist(rng)}});
    const auto model = fit_unity(evaluate(terms, recs));
    CHECK(std::abs(model.r_squared) < 0.01);  // sampling noise scale
  }
  SUBCASE("rank deficiency names the dependent terms") {
    std::vector<TermDescriptor> terms = {TermDescriptor::linear("x"),
                                         TermDescriptor::linear("y")};
    std::vector<Observation> recs;
    for (int i = 1; i <= 6; ++i)
      recs.push_back({{"x", double(i)}, {"y", 2.0 * double(i)}});
    CHECK_THROWS_AS(fit_unity(evaluate(terms, recs)), RankDeficientError);
  }
}

TEST_CASE("fit-then-invert consistency on an exact quadratic locus") {
  // Six variables, ten terms, known alpha; v6 appears linearly and absorbs
  // the slack so every record satisfies the relation exactly.
  const std::vector<std::string> vars = {"v1", "v2", "v3", "v4", "v5", "v6"};
  const std::vector<std::string> term_names = {"v1", "v1^2", "v2",   "v2^2", "v1v2",
                                               "v3", "v3^2", "v4",   "v5",   "v6"};
  std::vector<TermDescriptor> terms;
  for (const auto& name : term_names) terms.push_back(parse_term_name(name, vars));
  const std::vector<double> truth = {0.02, 0.004, -0.01, 0.002, 0.003,
                                     0.05, -0.006, 0.07, -0.03, 0.11};

  std::vector<Observation> recs;
  for (int i = 0; i < 500; ++i) {
    Observation r;
    r["v1"] = 3.0 + 2.0 * std::sin(0.37 * i);
    r["v2"] = -1.0 + 1.5 * std::cos(0.53 * i + 0.4);
    r["v3"] = 2.0 + std::sin(0.11 * i + 1.0);
    r["v4"] = 1.0 + 0.5 * std::cos(0.23 * i);
    r["v5"] = 0.5 + 0.25 * std::sin(0.61 * i + 2.0);
    double partial = 0.0;
    for (std::size_t j = 0; j + 1 < terms.size(); ++j) partial += truth[j] * terms[j].evaluate(r);
    r["v6"] = (1.0 - partial) / truth.back();
    recs.push_back(std::move(r));
  }

  const auto m = evaluate(terms, recs);
  const auto model = fit_unity(m);
  REQUIRE(model.alpha.size() == truth.size());
  for (std::size_t j = 0; j < truth.size(); ++j)
    CHECK(model.alpha[j] == doctest::Approx(truth[j]).epsilon(1e-6));
  CHECK(model.r_squared >= 1.0 - 1e-10);

  // invert for v1: one of the two roots must reproduce the true value
  for (const auto& rec : recs) {
    Observation others = rec;
    const double expected = others.at("v1");
    others.erase("v1");
    const auto bounds = quadratic_in(model, "v1", others);
    REQUIRE(bounds.status == RootStatus::two_roots);
    const double lo_err = std::abs(*bounds.lower - expected);
    const double hi_err = std::abs(*bounds.upper - expected);
    CHECK(std::min(lo_err, hi_err) <= 1e-6 * std::max(std::abs(expected), 1.0));

    // root verification: both roots satisfy A r^2 + B r + C = 0
    for (double root : {*bounds.lower, *bounds.upper}) {
      const double value = bounds.a * root * root + bounds.b * root + bounds.c;
      const double scale = std::max({std::abs(bounds.a * root * root),
                                     std::abs(bounds.b * root), std::abs(bounds.c), 1.0});
      CHECK(std::abs(value) <= 1e-6 * scale);
    }
  }
}

TEST_CASE("quadratic_in: A/B/C construction and statuses") {
  SUBCASE("pure quadratic with two roots") {
    // model: 0.25 x^2 + 0.25 y^2 = 1, solve in x at y = 0 -> x = +-2
    const auto model = fit_unity(circle_matrix(2.0, 12));
    const auto bounds = quadratic_in(model, "x", Observation{{"y", 0.0}});
    CHECK(bounds.a == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(bounds.b == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    CHECK(bounds.c == doctest::Approx(-1.0).epsilon(1e-10));
    REQUIRE(bounds.status == RootStatus::two_roots);
    CHECK(*bounds.lower == doctest::Approx(-2.0).epsilon(1e-10));
    CHECK(*bounds.upper == doctest::Approx(2.0).epsilon(1e-10));
  }
  SUBCASE("negligible A falls back to the linear root") {
    ImplicitModel model;
    model.variables = kXY;
    model.terms = {parse_term_name("x", kXY), parse_term_name("x^2", kXY)};
    model.alpha = {2.0, 0.0};
    const auto bounds = quadratic_in(model, "x", Observation{});
    CHECK(bounds.status == RootStatus::linear);
    CHECK(*bounds.lower == doctest::Approx(0.5));
    CHECK(*bounds.upper == doctest::Approx(0.5));
  }
  SUBCASE("negative discriminant reports complex roots") {
    ImplicitModel model;
    model.variables = kXY;
    model.terms = {parse_term_name("x^2", kXY)};
    model.alpha = {-1.0};  // -x^2 = 1 has no real solution
    const auto bounds = quadratic_in(model, "x", Observation{});
    CHECK(bounds.status == RootStatus::complex_roots);
    CHECK(!bounds.lower.has_value());
  }
  SUBCASE("double root when the discriminant vanishes") {
    // terms {x, x^2, y} at y=1 with alpha {-2, 1, 2}: x^2 - 2x + (2 - 1) = 0
    ImplicitModel model;
    model.variables = kXY;
    model.terms = {parse_term_name("x", kXY), parse_term_name("x^2", kXY),
                   parse_term_name("y", kXY)};
    model.alpha = {-2.0, 1.0, 2.0};
    const auto bounds = quadratic_in(model, "x", Observation{{"y", 1.0}});
    CHECK(bounds.a == 1.0);
    CHECK(bounds.b == -2.0);
    CHECK(bounds.c == 1.0);
    REQUIRE(bounds.status == RootStatus::double_root);
    CHECK(*bounds.lower == 1.0);
    CHECK(*bounds.upper == 1.0);
  }
  SUBCASE("cofactors multiply into B and C") {
    // terms {x, xy, y, y^2}, solve in x at y=3:
    // A = 0, B = a_x + a_xy*3, C = a_y*3 + a_y2*9 - 1
    ImplicitModel model;
    model.variables = kXY;
    model.terms = {parse_term_name("x", kXY), parse_term_name("xy", kXY),
                   parse_term_name("y", kXY), parse_term_name("y^2", kXY)};
    model.alpha = {1.0, 2.0, 0.5, 0.1};
    const auto bounds = quadratic_in(model, "x", Observation{{"y", 3.0}});
    CHECK(bounds.status == RootStatus::linear);
    CHECK(bounds.b == doctest::Approx(7.0));
    CHECK(bounds.c == doctest::Approx(0.5 * 3.0 + 0.1 * 9.0 - 1.0));
  }
  SUBCASE("target absent from model errors") {
    ImplicitModel model;
    model.variables = kXY;
    model.terms = {parse_term_name("y", kXY)};
    model.alpha = {1.0};
    CHECK_THROWS_AS(quadratic_in(model, "x", Observation{{"y", 1.0}}), Error);
  }
  SUBCASE("missing non-target variable errors") {
    ImplicitModel model;
    model.variables = kXY;
    model.terms = {parse_term_name("xy", kXY)};
    model.alpha = {1.0};
    CHECK_THROWS_AS(quadratic_in(model, "x", Observation{}), Error);
  }
}

TEST_CASE("select_root follows the nearest-root rule with ties to upper") {
  QuadraticBounds bounds;
  bounds.status = RootStatus::two_roots;
  bounds.lower = 40.0;
  bounds.upper = 120.0;
  CHECK(select_root(bounds, 50.0) == 40.0);
  CHECK(select_root(bounds, 110.0) == 120.0);
  CHECK(select_root(bounds, 80.0) == 120.0);  // exact tie -> "otherwise" branch

  QuadraticBounds linear;
  linear.status = RootStatus::linear;
  linear.lower = 60.0;
  linear.upper = 60.0;
  CHECK(select_root(linear, -1000.0) == 60.0);

  QuadraticBounds complex_pair;
  complex_pair.status = RootStatus::complex_roots;
  CHECK_THROWS_AS(select_root(complex_pair, 0.0), NumericsError);
}

TEST_CASE("evaluate_model") {
  ImplicitModel model;
  model.variables = kXY;
  model.terms = {parse_term_name("x^2", kXY), parse_term_name("y^2", kXY)};
  model.alpha = {0.25, 0.25};

  CHECK(evaluate_model(model, Observation{{"x", 0.0}, {"y", 0.0}}) == 0.0);  // no intercept
  CHECK(evaluate_model(model, Observation{{"x", 2.0}, {"y", 0.0}}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(evaluate_model(model, Observation{{"x", 2.0}}), Error);

  SUBCASE("linear in alpha") {
    ImplicitModel doubled = model;
    for (auto& a : doubled.alpha) a *= 2.0;
    const Observation rec = {{"x", 1.3}, {"y", -0.7}};
    CHECK(evaluate_model(doubled, rec) == doctest::Approx(2.0 * evaluate_model(model, rec)));
  }
}

TEST_CASE("printed 6-term buoy model evaluates to the hand-computed value") {
  const std::vector<std::string> vars = {"p", "a", "t"};
  ImplicitModel model;
  model.variables = vars;
  for (const auto& name : {"p", "a", "t", "p^2", "a^2", "t^2"})
    model.terms.push_back(parse_term_name(name, vars));
  model.alpha = {0.001993, -0.00007051, 0.0003194, -0.000000988, 0.0000004513, 0.000007737};

  // independent spreadsheet-style evaluation at (p=1013, a=25, t=28):
  //   0.001993*1013 - 0.00007051*25 + 0.0003194*28
  // - 0.000000988*1013^2 + 0.0000004513*25^2 + 0.000007737*28^2
  const double expected = 1.0185823485;
  const double got = evaluate_model(model, Observation{{"p", 1013.0}, {"a", 25.0}, {"t", 28.0}});
  CHECK(got == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("model json round trip is exact") {
  const auto m = circle_matrix(2.0, 24);
  const auto model = fit_unity(m);

  const nlohmann::json j = to_json(model);
  const auto restored = model_from_json(nlohmann::json::parse(j.dump()));
  REQUIRE(restored.terms.size() == model.terms.size());
  for (std::size_t i = 0; i < model.terms.size(); ++i) {
    CHECK(restored.terms[i].name() == model.terms[i].name());
    CHECK(restored.alpha[i] == model.alpha[i]);  // bit exact
  }
  CHECK(restored.r_squared == model.r_squared);
  CHECK(restored.n_records == model.n_records);

  CHECK_THROWS_AS(model_from_json(nlohmann::json::parse(R"({"variables":[]})")), FormatError);
}
