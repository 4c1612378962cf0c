#include <cmath>
#include <doctest.h>

#include "helpers.hpp"
#include "tvem/estep.hpp"
#include "tvem/oracle.hpp"

using namespace tvem;
using namespace tvem::testutil;

namespace {

VariationalCollection full_collection(const GenerativeModel& model, int N) {
  const auto omega = enumerate_states(model.space(), enumeration_cap());
  VariationalCollection K;
  for (int i = 0; i < N; ++i)
    K.push_back(VariationalStateSet(omega, int(omega.size()), model.space()));
  return K;
}

}  // namespace

TEST_CASE("parameter validation rejects malformed inputs") {
  GmmParams g;
  g.pi = Eigen::Vector2d(0.6, 0.6);  // does not sum to 1
  g.mu = Eigen::MatrixXd::Zero(2, 1);
  g.sigma2 = Eigen::MatrixXd::Ones(2, 1);
  CHECK_THROWS_AS(GmmModel{g}, Error);
  g.pi = Eigen::Vector2d(0.5, 0.5);
  g.sigma2(0, 0) = 1e-9;  // below the variance floor
  CHECK_THROWS_AS(GmmModel{g}, Error);
  g.sigma2(0, 0) = 1.0;
  g.mu(0, 0) = std::nan("");
  CHECK_THROWS_AS(GmmModel{g}, Error);

  PoissonMixParams pm;
  pm.pi = Eigen::Vector2d(0.5, 0.5);
  pm.lambda = Eigen::MatrixXd::Constant(2, 1, -1.0);
  CHECK_THROWS_AS(PoissonMixModel{pm}, Error);

  BscParams b;
  b.W = Eigen::MatrixXd::Ones(2, 2);
  b.pi = 1.5;
  CHECK_THROWS_AS(BscModel{b}, Error);
  b.pi = 0.5;
  b.sigma2 = 0.0;
  CHECK_THROWS_AS(BscModel{b}, Error);
}

TEST_CASE("Poisson log-joint uses exact counts") {
  PoissonMixParams p;
  p.pi = Eigen::Vector2d(0.4, 0.6);
  p.lambda = Eigen::MatrixXd(2, 1);
  p.lambda << 2.0, 5.0;
  const PoissonMixModel model(p);
  Eigen::VectorXd y(1);
  y << 3.0;
  // log pi_1 + y log lambda - lambda - log y!
  const double expect =
      std::log(0.4) + 3.0 * std::log(2.0) - 2.0 - std::log(6.0);
  CHECK(model.log_joint(LatentState{0}, y) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("BSC log-joint matches the Gaussian around the active-column sum") {
  Rng rng(11);
  const auto model = random_bsc(3, 2, rng);
  Eigen::VectorXd y(2);
  y << 0.7, -0.2;
  const LatentState s = binary_state({1, 0, 1});
  const Eigen::VectorXd mean =
      model->params().W.col(0) + model->params().W.col(2);
  const double pi = model->params().pi;
  const double s2 = model->params().sigma2;
  const double expect = 2.0 * std::log(pi) + 1.0 * std::log(1.0 - pi) -
                        std::log(2.0 * M_PI * s2) -
                        (y - mean).squaredNorm() / (2.0 * s2);
  CHECK(model->log_joint(s, y) == doctest::Approx(expect).epsilon(1e-12));
  CHECK((model->mean_for(s) - mean).norm() == 0.0);
  CHECK((model->latent_scores(y) - model->params().W.transpose() * y).norm() ==
        0.0);
}

TEST_CASE("zero mixing weight makes a cluster structurally impossible") {
  GmmParams g;
  g.pi = Eigen::Vector2d(1.0, 0.0);
  g.mu = Eigen::MatrixXd::Zero(2, 1);
  g.sigma2 = Eigen::MatrixXd::Ones(2, 1);
  const GmmModel model(g);
  Eigen::VectorXd y(1);
  y << 0.0;
  CHECK(model.log_joint(LatentState{1}, y) == kNegInf);
  CHECK(std::isfinite(model.log_joint(LatentState{0}, y)));
}

TEST_CASE("M-step with K = Omega equals the exact EM step") {
  Rng rng(22);
  for (int trial = 0; trial < 9; ++trial) {
    auto model = random_model(trial, rng);
    const DataSet data = sample_dataset(*model, 12, rng);
    const auto exact = oracle::exact_em_step(data, *model);
    model->m_step(data, full_collection(*model, data.n()));

    if (auto* g = dynamic_cast<GmmModel*>(model.get())) {
      auto* ge = dynamic_cast<GmmModel*>(exact.get());
      CHECK((g->params().pi - ge->params().pi).lpNorm<Eigen::Infinity>() <
            1e-12);
      CHECK((g->params().mu - ge->params().mu).lpNorm<Eigen::Infinity>() <
            1e-10);
      CHECK((g->params().sigma2 - ge->params().sigma2)
                .lpNorm<Eigen::Infinity>() < 1e-10);
    } else if (auto* p = dynamic_cast<PoissonMixModel*>(model.get())) {
      auto* pe = dynamic_cast<PoissonMixModel*>(exact.get());
      CHECK((p->params().pi - pe->params().pi).lpNorm<Eigen::Infinity>() <
            1e-12);
      CHECK((p->params().lambda - pe->params().lambda)
                .lpNorm<Eigen::Infinity>() < 1e-10);
    } else {
      auto* b = dynamic_cast<BscModel*>(model.get());
      auto* be = dynamic_cast<const BscModel*>(exact.get());
      CHECK((b->params().W - be->params().W).lpNorm<Eigen::Infinity>() <
            1e-10);
      CHECK(b->params().pi == doctest::Approx(be->params().pi).epsilon(1e-12));
      CHECK(b->params().sigma2 ==
            doctest::Approx(be->params().sigma2).epsilon(1e-10));
    }
  }
}

TEST_CASE("M-step raises the Q function for random truncated collections") {
  Rng rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    auto model = random_model(trial, rng);
    const DataSet data = sample_dataset(*model, 8, rng);
    const int S = 1 + int(rng.below(std::min<std::uint64_t>(
                          3, model->space().cardinality())));
    const VariationalCollection K =
        random_collection(*model, data.n(), S, rng);
    const auto old_model = model->clone();
    const double q_old = general_free_energy(K, *old_model, *old_model, data);
    model->m_step(data, K);
    const double q_new = general_free_energy(K, *old_model, *model, data);
    CHECK(q_new >= q_old - 1e-9 * (1.0 + std::abs(q_old)));
  }
}

TEST_CASE("GMM variance floor engages on duplicated datapoints") {
  GmmParams g;
  g.pi = Eigen::Vector2d(0.5, 0.5);
  g.mu = Eigen::MatrixXd(2, 1);
  g.mu << 0.0, 50.0;
  g.sigma2 = Eigen::MatrixXd::Ones(2, 1);
  GmmModel model(g);
  Eigen::MatrixXd y(4, 1);
  y << 0.0, 0.0, 50.0, 50.0;  // zero within-cluster spread
  const DataSet data{y};
  model.m_step(data, full_collection(model, data.n()));
  CHECK(model.params().sigma2.minCoeff() == GmmModel::kVarFloor);
}

TEST_CASE("starved cluster reseeds at the worst-covered datapoint") {
  GmmParams g;
  g.pi = Eigen::Vector3d(1.0 / 3, 1.0 / 3, 1.0 / 3);
  g.mu = Eigen::MatrixXd(3, 1);
  g.mu << 0.0, 10.0, 100.0;
  g.sigma2 = Eigen::MatrixXd::Ones(3, 1);
  GmmModel model(g);
  Eigen::MatrixXd y(3, 1);
  y << 0.1, 9.9, 55.0;
  const DataSet data{y};
  // cluster 3 appears in no variational set
  VariationalCollection K;
  for (int i = 0; i < 3; ++i)
    K.push_back(VariationalStateSet({LatentState{0}, LatentState{1}}, 2,
                                    model.space()));
  model.m_step(data, K);
  CHECK(model.params().pi[2] == GmmModel::kMixFloor);
  // y = 55 is the point the remaining clusters explain worst
  CHECK(model.params().mu(2, 0) == 55.0);
  CHECK(model.params().pi.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Poisson rate floor engages on all-zero counts") {
  PoissonMixParams p;
  p.pi = Eigen::Vector2d(0.5, 0.5);
  p.lambda = Eigen::MatrixXd::Constant(2, 1, 3.0);
  PoissonMixModel model(p);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(5, 1);
  const DataSet data{y};
  model.m_step(data, full_collection(model, data.n()));
  CHECK(model.params().lambda.minCoeff() == PoissonMixModel::kRateFloor);
}

TEST_CASE("BSC all-zero collections hit the pi floor and skip the solve") {
  Rng rng(44);
  auto model = random_bsc(3, 2, rng);
  const Eigen::MatrixXd w_before = model->params().W;
  const DataSet data = sample_dataset(*model, 6, rng);
  VariationalCollection K;
  for (int i = 0; i < data.n(); ++i)
    K.push_back(VariationalStateSet({LatentState{0}}, 1, model->space()));
  model->m_step(data, K);
  CHECK(model->params().pi == BscModel::kPiFloor);
  CHECK((model->params().W - w_before).norm() == 0.0);  // kept, not solved
  CHECK(model->params().sigma2 ==
        doctest::Approx(data.y.squaredNorm() / (data.n() * 2)).epsilon(1e-12));
}

TEST_CASE("ancestral sampling is deterministic under a fixed stream") {
  Rng a = Rng::stream(5, 1, 2), b = Rng::stream(5, 1, 2);
  Rng other = Rng::stream(5, 1, 3);
  Rng model_rng(17);
  const auto model = random_bsc(4, 3, model_rng);
  const LatentState sa = model->sample_state(a);
  const LatentState sb = model->sample_state(b);
  CHECK(sa == sb);
  CHECK((model->sample_observation(sa, a) - model->sample_observation(sb, b))
            .norm() == 0.0);
  (void)other;
}

TEST_CASE("Poisson samples are nonnegative integers with sane means") {
  Rng rng(55);
  PoissonMixParams p;
  p.pi = Eigen::Vector2d(1.0, 0.0);
  p.lambda = Eigen::MatrixXd::Constant(2, 1, 40.0);  // exercises rate splitting
  const PoissonMixModel model(p);
  double total = 0.0;
  for (int i = 0; i < 400; ++i) {
    const Eigen::VectorXd y = model.sample_observation(LatentState{0}, rng);
    CHECK(y[0] >= 0.0);
    CHECK(y[0] == std::floor(y[0]));
    total += y[0];
  }
  CHECK(total / 400.0 == doctest::Approx(40.0).epsilon(0.05));
}
