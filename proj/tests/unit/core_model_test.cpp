#include "doctest.h"

#include <cmath>

#include "equistop/builtins.hpp"
#include "equistop/core_model.hpp"
#include "equistop/errors.hpp"

using namespace equistop;

TEST_SUITE("core_model") {

TEST_CASE("grid nodes are uniform and end exactly at hi") {
  const Grid g(-4.0, 4.0, 8001);
  CHECK(g.h() == doctest::Approx(1e-3).epsilon(1e-14));
  CHECK(g[0] == -4.0);
  CHECK(g[8000] == 4.0);
  CHECK(g[4000] == 0.0);
  CHECK(g.Nearest(0.95751) == 4958);
  CHECK_THROWS_AS(Grid(0.0, 1.0, 2), ConfigError);
  CHECK_THROWS_AS(Grid(1.0, 1.0, 5), ConfigError);
}

TEST_CASE("symmetric walk on three nodes") {
  const ChainModel chain =
      MakeChainFromDiffusion(builtins::Wiener(0.0, 1.0), Grid(0.0, 1.0, 3));
  CHECK(chain.down(1) == 0.5);
  CHECK(chain.up(1) == 0.5);
  CHECK(chain.dt(1) == doctest::Approx(0.25));
  CHECK(chain.reflecting(0));
  CHECK(chain.reflecting(2));
  CHECK_FALSE(chain.reflecting(1));
  CHECK(chain.birth_death());
  CHECK(chain.mesh().has_value());
}

TEST_CASE("absorbing ends become identity rows") {
  const ChainModel chain = builtins::AbsorbedWalk(11);
  CHECK(chain.absorbing(0));
  CHECK(chain.absorbing(10));
  CHECK(chain.absorbing_count() == 2);
  REQUIRE(chain.row(0).size() == 1);
  CHECK(chain.row(0)[0].to == 0);
  CHECK(chain.row(0)[0].p == 1.0);
  CHECK_FALSE(chain.reflecting(0));
}

TEST_CASE("geometric chain has fair steps and local time scaling") {
  const Grid g(0.1, 10.0, 100);
  const double sigma = 0.4;
  const ChainModel chain = MakeChainFromDiffusion(builtins::Gbm(sigma, 0.1, 10.0), g);
  for (std::size_t i = 1; i + 1 < g.size(); ++i) {
    double sum = 0.0;
    for (const Transition& t : chain.row(i)) sum += t.p;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    CHECK(chain.up(i) == doctest::Approx(0.5));
    CHECK(chain.down(i) == doctest::Approx(0.5));
    const double x = g[i];
    CHECK(chain.dt(i) == doctest::Approx(g.h() * g.h() / (sigma * sigma * x * x)));
  }
}

TEST_CASE("one-step moments match the diffusion") {
  const double mu = 0.3, sigma = 0.7;
  for (double h : {0.1, 0.01, 0.001}) {
    const std::size_t n = static_cast<std::size_t>(std::lround(2.0 / h)) + 1;
    const ChainModel chain = MakeChainFromDiffusion(
        DiffusionModel::Arithmetic(mu, sigma, -1.0, 1.0), Grid(-1.0, 1.0, n));
    const std::size_t i = n / 2;
    const double dt = chain.dt(i);
    const double mean = (chain.up(i) - chain.down(i)) * h;
    const double second = (chain.up(i) + chain.down(i)) * h * h;
    CHECK(std::abs(mean - mu * dt) <= 1e-15);
    CHECK(std::abs(second - sigma * sigma * dt) <= 1.01 * h * mu * dt);
  }
}

TEST_CASE("upwinding keeps probabilities in [0, 1] for strong drift") {
  const ChainModel chain = MakeChainFromDiffusion(
      DiffusionModel::Arithmetic(-50.0, 0.1, 0.0, 1.0), Grid(0.0, 1.0, 21));
  for (std::size_t i = 1; i + 1 < chain.size(); ++i) {
    CHECK(chain.up(i) >= 0.0);
    CHECK(chain.down(i) <= 1.0);
    CHECK(chain.down(i) > chain.up(i));
  }
}

TEST_CASE("zero volatility is rejected") {
  DiffusionModel m = builtins::Wiener(0.0, 1.0);
  m.sigma = [](double x) { return x < 0.5 ? 1.0 : 0.0; };
  CHECK_THROWS_AS(MakeChainFromDiffusion(m, Grid(0.0, 1.0, 11)),
                  NonPositiveVolatility);
}

TEST_CASE("grid outside the domain is rejected") {
  CHECK_THROWS_AS(
      MakeChainFromDiffusion(builtins::Wiener(0.0, 1.0), Grid(-0.5, 1.0, 11)),
      ConfigError);
}

TEST_CASE("chain rows must be stochastic") {
  CHECK_THROWS_AS(ChainModel::FromDense({0.0, 1.0}, {{0.5, 0.4}, {0.0, 1.0}}),
                  ConfigError);
  CHECK_THROWS_AS(ChainModel::FromDense({0.0, 1.0}, {{1.1, -0.1}, {0.0, 1.0}}),
                  ConfigError);
  const ChainModel ok = ChainModel::FromDense({0.0, 1.0}, {{0.5, 0.5}, {0.0, 1.0}});
  CHECK(ok.absorbing(1));
  CHECK_FALSE(ok.absorbing(0));
  CHECK(ok.Index(1.0) == 1);
  CHECK_THROWS_AS(ok.Index(2.0), ConfigError);
}

TEST_CASE("values must be finite") {
  const ChainModel loop = ChainModel::FromDense({0.0, 1.0}, {{0.0, 1.0}, {1.0, 0.0}});
  CHECK_THROWS_AS(loop.RequireFiniteValues(0.0), ConfigError);
  CHECK_NOTHROW(loop.RequireFiniteValues(0.1));
}

TEST_CASE("discount factors follow the local time step") {
  const ChainModel chain = MakeChainFromDiffusion(builtins::Gbm(1.0, 1.0, 2.0),
                                                  Grid(1.0, 2.0, 11));
  for (std::size_t i = 0; i < chain.size(); ++i) {
    CHECK(chain.Discount(i, 0.3) == doctest::Approx(std::exp(-0.3 * chain.dt(i))));
    CHECK(chain.Discount(i, 0.0) == 1.0);
  }
  const ChainModel other = builtins::AbsorbedWalk(5);
  CHECK(other.Discount(2, 0.3) == doctest::Approx(std::exp(-0.3 * other.dt(2))));
  CHECK(chain.Discount(5, 0.3) == doctest::Approx(std::exp(-0.3 * chain.dt(5))));
}

TEST_CASE("reward validation") {
  RewardSpec bad = builtins::DistancePenalty();
  bad.r = -0.1;
  const std::vector<double> xs{0.0, 0.5, 1.0};
  CHECK_THROWS_AS(bad.Validate(xs, xs), ConfigError);
  RewardSpec inf = builtins::DistancePenalty();
  inf.F = [](double x, double) { return x > 0.7 ? -INFINITY : 0.0; };
  CHECK_THROWS_AS(inf.Validate(xs, xs), ConfigError);
  CHECK_NOTHROW(builtins::DistancePenalty().Validate(xs, xs));
}

TEST_CASE("stopping set algebra") {
  const StoppingSet a = StoppingSet::FromIndices(8, {0, 1, 2, 5, 7});
  const StoppingSet b = StoppingSet::FromIndices(8, {2, 5});
  CHECK(a.count() == 5);
  CHECK(b.IsSubsetOf(a));
  CHECK_FALSE(a.IsSubsetOf(b));
  CHECK(a.Union(b) == a);
  CHECK(a.Complement().Indices() == std::vector<std::size_t>{3, 4, 6});
  const auto runs = a.Runs();
  REQUIRE(runs.size() == 3);
  CHECK(runs[0] == std::pair<std::size_t, std::size_t>{0, 2});
  CHECK(runs[2] == std::pair<std::size_t, std::size_t>{7, 7});
  CHECK(StoppingSet(4).empty());
  CHECK_THROWS_AS(StoppingSet::FromIndices(3, {3}), ConfigError);
}

TEST_CASE("two-argument grid functions are agent-major") {
  GridFunction2D f(3, 2);
  f(1, 0) = 4.0;
  f(2, 1) = 7.0;
  CHECK(f.Column(0)[1] == 4.0);
  CHECK(f.Column(1)[2] == 7.0);
  GridFunction2D sq(3, 3);
  for (std::size_t i = 0; i < 3; ++i) sq(i, i) = static_cast<double>(i) + 0.5;
  CHECK(sq.Diagonal() == GridFunction{0.5, 1.5, 2.5});
}

}  // TEST_SUITE
