#ifndef TVEM_MODELS_POISSON_MIX_HPP
#define TVEM_MODELS_POISSON_MIX_HPP

#include <Eigen/Dense>

#include "tvem/model.hpp"

namespace tvem {

struct PoissonMixParams {
  Eigen::VectorXd pi;      // C
  Eigen::MatrixXd lambda;  // C x D
};

class PoissonMixModel : public GenerativeModel {
public:
  static constexpr double kRateFloor = 1e-8;
  static constexpr double kMixFloor = 1e-8;

  explicit PoissonMixModel(PoissonMixParams params);

  StateSpace space() const override {
    return {SpaceKind::Categorical, int(params_.pi.size())};
  }
  int data_dim() const override { return int(params_.lambda.cols()); }

  double log_joint(LatentState s,
                   Eigen::Ref<const Eigen::VectorXd> y) const override;
  LatentState sample_state(Rng& rng) const override;
  Eigen::VectorXd sample_observation(LatentState s, Rng& rng) const override;
  void m_step(const DataSet& data, const VariationalCollection& K) override;
  std::unique_ptr<GenerativeModel> clone() const override {
    return std::make_unique<PoissonMixModel>(*this);
  }

  const PoissonMixParams& params() const { return params_; }
  void set_params(PoissonMixParams p);

private:
  PoissonMixParams params_;
};

void validate_poisson_params(const PoissonMixParams& p);

}  // namespace tvem

#endif
