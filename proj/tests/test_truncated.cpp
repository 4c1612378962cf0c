#include <cmath>
#include <doctest.h>

#include "helpers.hpp"
#include "tvem/oracle.hpp"

using namespace tvem;
using namespace tvem::testutil;

namespace {

GmmModel two_unit_gaussians() {
  GmmParams p;
  p.pi = Eigen::Vector2d(0.5, 0.5);
  p.mu = Eigen::MatrixXd(2, 1);
  p.mu << 0.0, 1.0;
  p.sigma2 = Eigen::MatrixXd::Ones(2, 1);
  return GmmModel(std::move(p));
}

// q-table over the enumerated space for the truncated posterior of set i
std::vector<double> truncated_table(const VariationalStateSet& set,
                                    Eigen::Ref<const Eigen::VectorXd> y,
                                    const GenerativeModel& model) {
  const auto omega = enumerate_states(model.space(), enumeration_cap());
  std::vector<double> table(omega.size(), 0.0);
  const TruncatedWeights w = truncated_weights(set, y, model);
  for (size_t k = 0; k < w.states.size(); ++k)
    table[size_t(w.states[k].code)] = w.weights[k];
  return table;
}

}  // namespace

TEST_CASE("log_sum_exp matches direct evaluation and honors -inf") {
  const std::vector<double> v{-1.0, -2.0, -3.0};
  const double direct =
      std::log(std::exp(-1.0) + std::exp(-2.0) + std::exp(-3.0));
  CHECK(log_sum_exp(v) == doctest::Approx(direct).epsilon(1e-14));

  const std::vector<double> with_inf{kNegInf, -1.0};
  CHECK(log_sum_exp(with_inf) == doctest::Approx(-1.0).epsilon(1e-14));

  const std::vector<double> all_inf{kNegInf, kNegInf};
  CHECK(log_sum_exp(all_inf) == kNegInf);
}

TEST_CASE("GMM log-joint frozen value: c=1, y=0 under two unit Gaussians") {
  const GmmModel model = two_unit_gaussians();
  Eigen::VectorXd y(1);
  y << 0.0;
  // log 0.5 - log sqrt(2 pi)
  const double expect = std::log(0.5) - 0.5 * std::log(2.0 * M_PI);
  CHECK(model.log_joint(LatentState{0}, y) ==
        doctest::Approx(expect).epsilon(1e-12));
  CHECK(model.log_joint(LatentState{0}, y) ==
        doctest::Approx(-1.6121).epsilon(1e-4));
}

TEST_CASE("entropy frozen value and the 0 log 0 convention") {
  const std::vector<double> w{0.75, 0.25};
  CHECK(entropy(w) == doctest::Approx(0.5623).epsilon(1e-4));
  const std::vector<double> point{1.0, 0.0};
  CHECK(entropy(point) == 0.0);
}

TEST_CASE("variational sets validate membership, distinctness, capacity") {
  const StateSpace space{SpaceKind::Categorical, 3};
  CHECK_THROWS_AS(VariationalStateSet({}, 2, space), Error);
  CHECK_THROWS_AS(
      VariationalStateSet({LatentState{0}, LatentState{0}}, 2, space), Error);
  CHECK_THROWS_AS(VariationalStateSet({LatentState{3}}, 2, space), Error);
  CHECK_THROWS_AS(VariationalStateSet(
                      {LatentState{0}, LatentState{1}, LatentState{2}}, 2,
                      space),
                  Error);
  VariationalStateSet ok({LatentState{2}, LatentState{0}}, 2, space);
  CHECK(ok.states().front().code == 0);  // canonical order restored
  CHECK(ok.contains(LatentState{2}));
}

TEST_CASE("truncated weights are normalized and order-aligned") {
  const GmmModel model = two_unit_gaussians();
  Eigen::VectorXd y(1);
  y << 0.3;
  const VariationalStateSet set({LatentState{0}, LatentState{1}}, 2,
                                model.space());
  const TruncatedWeights w = truncated_weights(set, y, model);
  CHECK(w.weights[0] + w.weights[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(w.weights[0] > w.weights[1]);  // y = 0.3 is nearer cluster 1
}

TEST_CASE("degenerate set: every member at -inf joint raises") {
  BscParams p;
  p.W = Eigen::MatrixXd::Ones(2, 2);
  p.pi = 0.0;  // all mass on the zero state
  p.sigma2 = 1.0;
  const BscModel model(std::move(p));
  Eigen::VectorXd y(2);
  y << 0.5, -0.5;
  const VariationalStateSet set({LatentState{1}, LatentState{2}}, 2,
                                model.space());
  CHECK_THROWS_AS(truncated_weights(set, y, model), Error);
}

TEST_CASE("general free energy at Theta_hat = Theta is the simplified F") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const auto model = random_model(trial, rng);
    const DataSet data = sample_dataset(*model, 4 + int(rng.below(8)), rng);
    const int S =
        1 + int(rng.below(std::min<std::uint64_t>(
                4, model->space().cardinality())));
    const VariationalCollection K =
        random_collection(*model, data.n(), S, rng);
    const double simple = simplified_free_energy(K, data, *model);
    const double general = general_free_energy(K, *model, *model, data);
    CHECK(general ==
          doctest::Approx(simple).epsilon(1e-10));
  }
}

TEST_CASE("bound chain with the KL gap identities") {
  Rng rng(202);
  for (int trial = 0; trial < 100; ++trial) {
    const auto model = random_model(trial, rng);
    const DataSet data = sample_dataset(*model, 3 + int(rng.below(6)), rng);
    const int S =
        1 + int(rng.below(std::min<std::uint64_t>(
                4, model->space().cardinality())));
    const VariationalCollection K =
        random_collection(*model, data.n(), S, rng);
    const auto hat = perturb_model(*model, 0.2, rng);

    const double L = oracle::log_likelihood(data, *model);
    const double f_simple = simplified_free_energy(K, data, *model);
    const double f_general = general_free_energy(K, *hat, *model, data);

    const double tol = 1e-9 * (1.0 + std::abs(L));
    CHECK(L >= f_simple - tol);
    CHECK(f_simple >= f_general - tol);

    // gap identities against enumeration KL
    double kl_theta = 0.0, kl_hat = 0.0;
    for (int i = 0; i < data.n(); ++i) {
      const auto post = oracle::exact_posterior(data.point(i), *model);
      kl_theta += oracle::kl_divergence(
          truncated_table(K.set(i), data.point(i), *model), post.weights);
      kl_hat += oracle::kl_divergence(
          truncated_table(K.set(i), data.point(i), *hat), post.weights);
    }
    CHECK(L - f_simple == doctest::Approx(kl_theta).epsilon(1e-9));
    CHECK(L - f_general == doctest::Approx(kl_hat).epsilon(1e-9));
  }
}

TEST_CASE("Theta_hat = Theta maximizes the general free energy") {
  Rng rng(303);
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = random_model(trial, rng);
    const DataSet data = sample_dataset(*model, 5, rng);
    const VariationalCollection K = random_collection(*model, data.n(), 2, rng);
    const double at_theta = general_free_energy(K, *model, *model, data);
    for (int p = 0; p < 20; ++p) {
      const auto hat = perturb_model(*model, 0.1, rng);
      const double at_hat = general_free_energy(K, *hat, *model, data);
      CHECK(at_theta >= at_hat - 1e-9 * (1.0 + std::abs(at_theta)));
    }
  }
}

TEST_CASE("generalized free energy agrees with simplified on truncated q") {
  Rng rng(404);
  for (int trial = 0; trial < 30; ++trial) {
    const auto model = random_model(trial, rng);
    const DataSet data = sample_dataset(*model, 4, rng);
    const VariationalCollection K = random_collection(*model, data.n(), 2, rng);
    std::vector<std::vector<double>> q;
    for (int i = 0; i < data.n(); ++i)
      q.push_back(truncated_table(K.set(i), data.point(i), *model));
    const double f_q = generalized_free_energy(q, data, *model);
    const double f_simple = simplified_free_energy(K, data, *model);
    CHECK(f_q == doctest::Approx(f_simple).epsilon(1e-10));
  }
}

TEST_CASE("generalized free energy rejects unnormalized q") {
  Rng rng(405);
  const auto model = random_gmm(3, 1, rng);
  const DataSet data = sample_dataset(*model, 2, rng);
  std::vector<std::vector<double>> q(2, std::vector<double>{0.5, 0.2, 0.2});
  CHECK_THROWS_AS(generalized_free_energy(q, data, *model), Error);
}

TEST_CASE("set growth never lowers the simplified free energy") {
  Rng rng(505);
  for (int trial = 0; trial < 30; ++trial) {
    const auto model = random_model(trial, rng);
    const std::uint64_t card = model->space().cardinality();
    if (card < 3) continue;
    const DataSet data = sample_dataset(*model, 4, rng);
    VariationalCollection small, grown;
    for (int i = 0; i < data.n(); ++i) {
      VariationalStateSet s = random_set(model->space(), 2, rng);
      std::vector<LatentState> more = s.states();
      for (std::uint64_t c = 0; c < card && more.size() < 3; ++c)
        if (!s.contains(LatentState{c})) more.push_back(LatentState{c});
      small.push_back(s);
      grown.push_back(VariationalStateSet(more, 3, model->space()));
    }
    const double f_small = simplified_free_energy(small, data, *model);
    const double f_grown = simplified_free_energy(grown, data, *model);
    CHECK(f_grown >= f_small - 1e-12 * (1.0 + std::abs(f_small)));
  }
}
