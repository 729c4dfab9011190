#include "helpers.hpp"

#include "ppil/envs.hpp"
#include "ppil/features.hpp"

#include <cmath>

using namespace ppil;
using testing_util::derived;
using testing_util::max_abs_diff;
using testing_util::vec;

TEST_SUITE("features") {
  TEST_CASE("tabular features factor the transition exactly") {
    for (const auto& name : env_names()) {
      Env e = make_env(name);
      CHECK(validate_linear_mdp(e.mdp, e.features) <= 1e-14);
    }
  }

  TEST_CASE("features of another MDP leave a residual") {
    Env det = make_env("TwoStateDet");
    Env sto = make_env("TwoStateStochastic");
    const double r = validate_linear_mdp(det.mdp, sto.features);
    CHECK(r > 0.0);
    CHECK(r == doctest::Approx(derived()["two_state_det"]["mismatched_feature_residual"].get<double>()).epsilon(1e-12));
  }

  TEST_CASE("FEV of the expert with identity features") {
    Env e = make_env("TwoStateDet");
    const Vector mu = vec({0.0, 0.1, 0.9, 0.0});
    const Vector lam = fev(e.features, mu);
    CHECK(max_abs_diff(lam, mu) == 0.0);
    CHECK(min_feature_excitation(e.features, mu) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(min_feature_excitation(e.features, Vector::Constant(4, 0.25)) == doctest::Approx(0.25));
  }

  TEST_CASE("rows outside the simplex are rejected") {
    Matrix phi(2, 2);
    phi << 0.5, 0.6, 1.0, 0.0;
    CHECK_THROWS_AS(FeatureMap{phi}, ConfigError);
    phi << 0.5, 0.5, -0.1, 1.1;
    CHECK_THROWS_AS(FeatureMap{phi}, ConfigError);
    CHECK_THROWS_AS(FeatureMap(Matrix::Identity(2, 2)).factor_m(), ConfigError);
  }

  TEST_CASE("theta radius formula and floor") {
    CHECK(theta_radius(std::exp(-1.0), 0.9) == doctest::Approx(20.0));
    CHECK(theta_radius(0.0, 0.9) == doctest::Approx((1.0 - std::log(1e-3)) / 0.1));
  }

  TEST_CASE("random linear MDPs are exactly rank m") {
    for (int i = 0; i < 5; ++i) {
      Env e = random_linear_mdp(6, 3, 2, 0.9, 40 + i);
      CHECK(e.features.m() == 2);
      CHECK(validate_linear_mdp(e.mdp, e.features) <= 1e-14);
    }
  }

  TEST_CASE("merged goal features on the grid") {
    Env e = make_env("WindyGrid");
    CHECK(e.features.m() == e.mdp.n_pairs() - e.mdp.n_actions() + 1);
    CHECK(validate_linear_mdp(e.mdp, e.features) <= 1e-14);
  }
}
