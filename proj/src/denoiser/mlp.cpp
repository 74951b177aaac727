#include "affordkit/denoiser/mlp.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "affordkit/core/encoding.hpp"
#include "affordkit/core/error.hpp"
#include "affordkit/core/io.hpp"
#include "affordkit/core/rng.hpp"
#include "affordkit/diffusion/sampler.hpp"

namespace affordkit::denoiser {

using nlohmann::json;

MlpDenoiser::MlpDenoiser(const MlpConfig& config) : config_(config) {
  if (config_.horizon < 2 || config_.feature_dims < 0 || config_.pe_dims <= 0 ||
      config_.cond_dims < 0 || config_.hidden.empty())
    throw Error(ErrorCode::InvalidArgument, "bad network configuration");
  std::vector<int> layout;
  layout.push_back(config_.input_dims());
  for (int w : config_.hidden) layout.push_back(w);
  layout.push_back(config_.output_dims());
  for (std::size_t l = 0; l + 1 < layout.size(); ++l) {
    weights_.emplace_back(Eigen::MatrixXd::Zero(layout[l + 1], layout[l]));
    biases_.emplace_back(Eigen::VectorXd::Zero(layout[l + 1]));
  }
}

void MlpDenoiser::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& w : weights_) {
    const double bound = std::sqrt(6.0 / (w.rows() + w.cols()));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
  }
  for (auto& b : biases_) b.setZero();
}

Eigen::VectorXd MlpDenoiser::assemble_input(const DenoiserInput& input) const {
  const int horizon = config_.horizon;
  if (input.tau_k.rows() != horizon)
    throw Error(ErrorCode::DimensionMismatch, "trajectory horizon mismatch");
  if (input.features.rows() != horizon || input.features.cols() != config_.feature_dims)
    throw Error(ErrorCode::DimensionMismatch, "feature shape mismatch");
  if (input.step_encoding.size() != config_.pe_dims)
    throw Error(ErrorCode::DimensionMismatch, "step encoding width mismatch");
  if (input.conditioning.size() != config_.cond_dims)
    throw Error(ErrorCode::DimensionMismatch, "conditioning width mismatch");

  Eigen::VectorXd x(config_.input_dims());
  Eigen::Index at = 0;
  for (int h = 0; h < horizon; ++h, at += 3) x.segment<3>(at) = input.tau_k.row(h).transpose();
  for (int h = 0; h < horizon; ++h)
    for (int c = 0; c < config_.feature_dims; ++c) x[at++] = input.features(h, c);
  x.segment(at, config_.pe_dims) = input.step_encoding;
  at += config_.pe_dims;
  x.segment(at, config_.cond_dims) = input.conditioning;
  return x;
}

Eigen::VectorXd MlpDenoiser::forward(const Eigen::VectorXd& input) const {
  if (input.size() != config_.input_dims())
    throw Error(ErrorCode::DimensionMismatch, "input width mismatch");
  Eigen::VectorXd z = input;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    z = weights_[l] * z + biases_[l];
    if (l + 1 < weights_.size()) z = z.array().tanh();
  }
  return z;
}

Trajectory MlpDenoiser::predict_x0(const DenoiserInput& input) const {
  const Eigen::VectorXd out = forward(assemble_input(input));
  Trajectory x0(config_.horizon, 3);
  for (int h = 0; h < config_.horizon; ++h) x0.row(h) = out.segment<3>(h * 3).transpose();
  return x0;
}

void MlpDenoiser::input_jacobian(const DenoiserInput& input, Eigen::MatrixXd* d_tau,
                                 Eigen::MatrixXd* d_features) const {
  const Eigen::VectorXd x = assemble_input(input);
  // forward pass keeping the hidden activations
  std::vector<Eigen::VectorXd> acts;
  Eigen::VectorXd z = x;
  for (std::size_t l = 0; l + 1 < weights_.size(); ++l) {
    z = (weights_[l] * z + biases_[l]).array().tanh();
    acts.push_back(z);
  }
  Eigen::MatrixXd jac = weights_.front();
  for (std::size_t l = 1; l < weights_.size(); ++l) {
    const Eigen::ArrayXd gate = 1.0 - acts[l - 1].array().square();
    jac = weights_[l] * (gate.matrix().asDiagonal() * jac);
  }
  const int tau_cols = config_.horizon * 3;
  const int feat_cols = config_.horizon * config_.feature_dims;
  if (d_tau) *d_tau = jac.leftCols(tau_cols);
  if (d_features) *d_features = jac.middleCols(tau_cols, feat_cols);
}

double MlpDenoiser::loss_and_gradients(const Eigen::VectorXd& input,
                                       const Eigen::VectorXd& target,
                                       std::vector<Eigen::MatrixXd>* weight_grads,
                                       std::vector<Eigen::VectorXd>* bias_grads) const {
  if (target.size() != config_.output_dims())
    throw Error(ErrorCode::DimensionMismatch, "target width mismatch");

  std::vector<Eigen::VectorXd> layer_inputs;  // z_l entering layer l
  layer_inputs.push_back(input);
  Eigen::VectorXd z = input;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    z = weights_[l] * z + biases_[l];
    if (l + 1 < weights_.size()) {
      z = z.array().tanh();
      layer_inputs.push_back(z);
    }
  }

  const Eigen::VectorXd diff = z - target;
  const double inv_dim = 1.0 / static_cast<double>(target.size());
  const double loss = diff.squaredNorm() * inv_dim;

  if (weight_grads && bias_grads) {
    weight_grads->resize(weights_.size());
    bias_grads->resize(weights_.size());
    Eigen::VectorXd delta = 2.0 * inv_dim * diff;
    for (std::size_t l = weights_.size(); l-- > 0;) {
      (*weight_grads)[l] = delta * layer_inputs[l].transpose();
      (*bias_grads)[l] = delta;
      if (l > 0) {
        const Eigen::ArrayXd gate = 1.0 - layer_inputs[l].array().square();
        delta = (weights_[l].transpose() * delta).array() * gate;
      }
    }
  }
  return loss;
}

TrainReport mlp_train(MlpDenoiser& den, const std::vector<TrainingSample>& dataset,
                      const diffusion::DiffusionSchedule& schedule, int epochs, double lr,
                      std::uint64_t seed, const TrainOptions& options) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "no training samples");
  const auto& cfg = den.config();
  for (const auto& item : dataset) {
    if (item.sample.trajectory.rows() != cfg.horizon)
      throw Error(ErrorCode::DimensionMismatch, "dataset trajectory horizon mismatch");
    if (item.conditioning.size() != cfg.cond_dims)
      throw Error(ErrorCode::DimensionMismatch, "dataset conditioning width mismatch");
  }

  Rng rng(seed);
  std::vector<Eigen::MatrixXd> vel_w;
  std::vector<Eigen::VectorXd> vel_b;
  for (const auto& w : den.weights()) vel_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : den.biases()) vel_b.push_back(Eigen::VectorXd::Zero(b.size()));

  std::vector<int> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  TrainReport report;
  std::vector<Eigen::MatrixXd> grad_w;
  std::vector<Eigen::VectorXd> grad_b;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    // Fisher-Yates with the run rng keeps the whole schedule deterministic
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(0, i)]);

    for (int idx : order) {
      const auto& item = dataset[idx];
      const int k = rng.uniform_int(1, schedule.steps);
      auto [tau_k, eps] = diffusion::forward_noise(item.sample.trajectory, k, schedule, rng);

      DenoiserInput input;
      input.tau_k = tau_k;
      input.features = Eigen::MatrixXd::Zero(cfg.horizon, cfg.feature_dims);
      if (options.feature_volume && cfg.feature_dims > 0)
        for (int h = 0; h < cfg.horizon; ++h)
          input.features(h, 0) = tsdf::query(*options.feature_volume, tau_k.row(h).transpose());
      input.step_encoding = positional_encoding(static_cast<double>(k), cfg.pe_dims);
      input.conditioning = item.conditioning;
      input.k = k;

      Eigen::VectorXd target(cfg.output_dims());
      for (int h = 0; h < cfg.horizon; ++h)
        target.segment<3>(h * 3) = item.sample.trajectory.row(h).transpose();

      const double loss =
          den.loss_and_gradients(den.assemble_input(input), target, &grad_w, &grad_b);
      if (!std::isfinite(loss)) throw Error(ErrorCode::DivergedTraining, "loss is not finite");
      report.loss_curve.push_back(loss);

      for (std::size_t l = 0; l < grad_w.size(); ++l) {
        vel_w[l] = options.momentum * vel_w[l] - lr * grad_w[l];
        vel_b[l] = options.momentum * vel_b[l] - lr * grad_b[l];
        den.weights()[l] += vel_w[l];
        den.biases()[l] += vel_b[l];
      }
    }
  }
  return report;
}

void save_mlp(const MlpDenoiser& den, const std::filesystem::path& path) {
  const auto& cfg = den.config();
  atomic_write(path, [&](std::ofstream& out) {
    json header{{"hidden", cfg.hidden},
                {"horizon", cfg.horizon},
                {"feature_dims", cfg.feature_dims},
                {"pe_dims", cfg.pe_dims},
                {"cond_dims", cfg.cond_dims}};
    out << header.dump() << "\n";
    for (std::size_t l = 0; l < den.weights().size(); ++l) {
      const auto& w = den.weights()[l];
      std::vector<float> raw;
      raw.reserve(w.size() + den.biases()[l].size());
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) raw.push_back(static_cast<float>(w(r, c)));
      for (Eigen::Index i = 0; i < den.biases()[l].size(); ++i)
        raw.push_back(static_cast<float>(den.biases()[l][i]));
      write_f32(out, raw.data(), raw.size());
    }
  });
}

MlpDenoiser load_mlp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "missing model header");
  MlpConfig cfg;
  try {
    const json header = json::parse(line);
    cfg.hidden = header.at("hidden").get<std::vector<int>>();
    cfg.horizon = header.at("horizon").get<int>();
    cfg.feature_dims = header.at("feature_dims").get<int>();
    cfg.pe_dims = header.at("pe_dims").get<int>();
    cfg.cond_dims = header.at("cond_dims").get<int>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ManifestParse, std::string("model header: ") + e.what());
  }
  MlpDenoiser den(cfg);
  for (std::size_t l = 0; l < den.weights().size(); ++l) {
    auto& w = den.weights()[l];
    auto& b = den.biases()[l];
    const auto raw = read_f32(in, static_cast<std::size_t>(w.size() + b.size()));
    std::size_t at = 0;
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = raw[at++];
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = raw[at++];
  }
  return den;
}

Eigen::VectorXd make_conditioning(const Vec3& goal, const Vec3& contact,
                                  const Eigen::VectorXd& context, int pe_dims) {
  const Eigen::VectorXd pe_goal = positional_encoding(Eigen::VectorXd(goal), pe_dims);
  const Eigen::VectorXd pe_contact = positional_encoding(Eigen::VectorXd(contact), pe_dims);
  Eigen::VectorXd out(pe_goal.size() + pe_contact.size() + context.size());
  out << pe_goal, pe_contact, context;
  return out;
}

}  // namespace affordkit::denoiser
