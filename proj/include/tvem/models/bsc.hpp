#ifndef TVEM_MODELS_BSC_HPP
#define TVEM_MODELS_BSC_HPP

#include <Eigen/Dense>

#include "tvem/model.hpp"

namespace tvem {

// Binary Sparse Coding: s ~ Bernoulli(pi)^H, y ~ N(W s, sigma2 I).
struct BscParams {
  Eigen::MatrixXd W;  // D x H
  double pi = 0.5;
  double sigma2 = 1.0;
};

class BscModel : public GenerativeModel {
public:
  static constexpr double kVarFloor = 1e-6;
  static constexpr double kPiFloor = 1e-4;

  explicit BscModel(BscParams params);

  StateSpace space() const override {
    return {SpaceKind::Binary, int(params_.W.cols())};
  }
  int data_dim() const override { return int(params_.W.rows()); }

  double log_joint(LatentState s,
                   Eigen::Ref<const Eigen::VectorXd> y) const override;
  LatentState sample_state(Rng& rng) const override;
  Eigen::VectorXd sample_observation(LatentState s, Rng& rng) const override;
  void m_step(const DataSet& data, const VariationalCollection& K) override;
  Eigen::VectorXd latent_scores(
      Eigen::Ref<const Eigen::VectorXd> y) const override {
    return params_.W.transpose() * y;
  }
  std::unique_ptr<GenerativeModel> clone() const override {
    return std::make_unique<BscModel>(*this);
  }

  const BscParams& params() const { return params_; }
  void set_params(BscParams p);

  Eigen::VectorXd mean_for(LatentState s) const;

private:
  BscParams params_;
};

void validate_bsc_params(const BscParams& p);

}  // namespace tvem

#endif
