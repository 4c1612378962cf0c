#ifndef TVEM_MODELS_GMM_HPP
#define TVEM_MODELS_GMM_HPP

#include <Eigen/Dense>

#include "tvem/model.hpp"

namespace tvem {

// Diagonal-covariance Gaussian mixture.
struct GmmParams {
  Eigen::VectorXd pi;      // C
  Eigen::MatrixXd mu;      // C x D
  Eigen::MatrixXd sigma2;  // C x D
};

class GmmModel : public GenerativeModel {
public:
  static constexpr double kVarFloor = 1e-6;
  static constexpr double kMixFloor = 1e-8;

  explicit GmmModel(GmmParams params);

  StateSpace space() const override {
    return {SpaceKind::Categorical, int(params_.pi.size())};
  }
  int data_dim() const override { return int(params_.mu.cols()); }

  double log_joint(LatentState s,
                   Eigen::Ref<const Eigen::VectorXd> y) const override;
  LatentState sample_state(Rng& rng) const override;
  Eigen::VectorXd sample_observation(LatentState s, Rng& rng) const override;
  void m_step(const DataSet& data, const VariationalCollection& K) override;
  std::unique_ptr<GenerativeModel> clone() const override {
    return std::make_unique<GmmModel>(*this);
  }

  const GmmParams& params() const { return params_; }
  void set_params(GmmParams p);

private:
  GmmParams params_;
};

void validate_gmm_params(const GmmParams& p);

}  // namespace tvem

#endif
