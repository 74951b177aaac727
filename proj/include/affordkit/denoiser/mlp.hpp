#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "affordkit/afford/extract.hpp"
#include "affordkit/denoiser/denoiser.hpp"
#include "affordkit/diffusion/schedule.hpp"
#include "affordkit/tsdf/volume.hpp"

namespace affordkit::denoiser {

struct MlpConfig {
  int horizon = 16;
  int feature_dims = 1;              // spatial feature channels per waypoint
  int pe_dims = 32;                  // step-encoding width
  int cond_dims = 192;               // conditioning vector width
  std::vector<int> hidden = {256, 256};

  int input_dims() const { return horizon * 3 + horizon * feature_dims + pe_dims + cond_dims; }
  int output_dims() const { return horizon * 3; }
};

/// Fully connected clean-sample predictor over the flattened
/// (trajectory, features, step encoding, conditioning) vector. Hidden layers
/// use tanh; the output is linear. Gradients are exact and hand-derived.
class MlpDenoiser : public Denoiser {
 public:
  explicit MlpDenoiser(const MlpConfig& config);

  /// Seeded uniform initialization scaled by fan-in/fan-out.
  void initialize(std::uint64_t seed);

  const MlpConfig& config() const { return config_; }
  int horizon() const override { return config_.horizon; }
  int feature_dims() const override { return config_.feature_dims; }

  Trajectory predict_x0(const DenoiserInput& input) const override;
  bool has_input_jacobian() const override { return true; }
  void input_jacobian(const DenoiserInput& input, Eigen::MatrixXd* d_tau,
                      Eigen::MatrixXd* d_features) const override;

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;

  /// Squared-error loss (mean over output coordinates) and exact parameter
  /// gradients for one example.
  double loss_and_gradients(const Eigen::VectorXd& input, const Eigen::VectorXd& target,
                            std::vector<Eigen::MatrixXd>* weight_grads,
                            std::vector<Eigen::VectorXd>* bias_grads) const;

  Eigen::VectorXd assemble_input(const DenoiserInput& input) const;

  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

 private:
  MlpConfig config_;
  std::vector<Eigen::MatrixXd> weights_;  // layer l maps z_l -> z_{l+1}, rows = out
  std::vector<Eigen::VectorXd> biases_;
};

struct TrainingSample {
  afford::AffordanceSample sample;
  Eigen::VectorXd conditioning;
};

struct TrainOptions {
  double momentum = 0.9;
  const tsdf::TsdfVolume* feature_volume = nullptr;  // per-waypoint features; zeros when null
};

struct TrainReport {
  std::vector<double> loss_curve;  // one entry per SGD step
};

/// Trains the clean-sample objective: draw a step index uniformly, corrupt
/// the target trajectory with the closed-form forward process, predict, and
/// descend the squared error with momentum SGD.
TrainReport mlp_train(MlpDenoiser& den, const std::vector<TrainingSample>& dataset,
                      const diffusion::DiffusionSchedule& schedule, int epochs, double lr,
                      std::uint64_t seed, const TrainOptions& options = {});

void save_mlp(const MlpDenoiser& den, const std::filesystem::path& path);
MlpDenoiser load_mlp(const std::filesystem::path& path);

}  // namespace affordkit::denoiser

namespace affordkit::denoiser {

/// Conditioning for trajectory generation: positional encodings of the top
/// goal and contact points, optionally followed by an opaque context block.
Eigen::VectorXd make_conditioning(const Vec3& goal, const Vec3& contact,
                                  const Eigen::VectorXd& context = Eigen::VectorXd(),
                                  int pe_dims = 32);

}  // namespace affordkit::denoiser
