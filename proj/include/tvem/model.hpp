#ifndef TVEM_MODEL_HPP
#define TVEM_MODEL_HPP

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "tvem/data.hpp"
#include "tvem/rng.hpp"
#include "tvem/state.hpp"

namespace tvem {

class VariationalCollection;

// Generative-model contract: a discrete latent space plus a log-joint
// log p(s, y | Theta). Evaluation is pure and reentrant; the M-step is the
// only mutating entry point.
class GenerativeModel {
public:
  virtual ~GenerativeModel() = default;

  virtual StateSpace space() const = 0;
  virtual int data_dim() const = 0;

  // log p(s, y | Theta); finite or -inf, -inf only for structurally
  // impossible states.
  virtual double log_joint(LatentState s,
                           Eigen::Ref<const Eigen::VectorXd> y) const = 0;

  virtual LatentState sample_state(Rng& rng) const = 0;
  virtual Eigen::VectorXd sample_observation(LatentState s, Rng& rng) const = 0;

  // Closed-form M-step driven by truncated expectations over K.
  virtual void m_step(const DataSet& data, const VariationalCollection& K) = 0;

  // Per-latent relevance scores for the deterministic E-step construction;
  // only binary models implement this.
  virtual Eigen::VectorXd latent_scores(Eigen::Ref<const Eigen::VectorXd>) const {
    fail(ErrorCode::UnsupportedSpace, "model has no per-latent scoring");
  }

  virtual std::unique_ptr<GenerativeModel> clone() const = 0;

  void check_point_dim(Eigen::Ref<const Eigen::VectorXd> y) const {
    if (int(y.size()) != data_dim())
      fail(ErrorCode::InvalidInput, "datapoint dimension mismatch");
  }
};

}  // namespace tvem

#endif
