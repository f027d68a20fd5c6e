#include "dlda/networks.hpp"

#include "dlda/error.hpp"

#include <cmath>

namespace dlda {

void MlpSpec::validate() const {
  if (input_dim < 1 || hidden_dim < 1 || hidden_layers < 0 || output_dim < 1) {
    throw ConfigError("MlpSpec: dimensions must be >= 1");
  }
}

double gelu(double x) { return 0.5 * x * std::erfc(-x * 0.70710678118654752440); }

Eigen::MatrixXd dropout_forward(const Eigen::MatrixXd& h, DropoutState& state) {
  if (!state.training || state.rate <= 0.0) return h;
  std::bernoulli_distribution keep(1.0 - state.rate);
  const double s = 1.0 / (1.0 - state.rate);
  Eigen::MatrixXd out(h.rows(), h.cols());
  for (Eigen::Index j = 0; j < h.cols(); ++j)
    for (Eigen::Index i = 0; i < h.rows(); ++i) out(i, j) = keep(state.rng) ? h(i, j) * s : 0.0;
  return out;
}

namespace {

std::vector<int> layer_widths(const MlpSpec& s) {
  std::vector<int> w{s.input_dim};
  for (int i = 0; i < s.hidden_layers; ++i) w.push_back(s.hidden_dim);
  w.push_back(s.output_dim);
  return w;
}

std::string layer_name(const std::string& prefix, int l, const char* what) {
  return prefix + "." + std::to_string(l) + "." + what;
}

}  // namespace

Mlp Mlp::create(ParameterStore& store, const std::string& prefix, const MlpSpec& spec) {
  spec.validate();
  Mlp m;
  m.spec_ = spec;
  const auto w = layer_widths(spec);
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    m.weights_.push_back(store.add(layer_name(prefix, static_cast<int>(l), "W"), w[l + 1], w[l]));
    m.biases_.push_back(store.add(layer_name(prefix, static_cast<int>(l), "b"), w[l + 1], 1));
  }
  return m;
}

Mlp Mlp::bind(const ParameterStore& store, const std::string& prefix, const MlpSpec& spec) {
  spec.validate();
  Mlp m;
  m.spec_ = spec;
  const auto w = layer_widths(spec);
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const std::size_t wi = store.find(layer_name(prefix, static_cast<int>(l), "W"));
    const std::size_t bi = store.find(layer_name(prefix, static_cast<int>(l), "b"));
    if (store.slice(wi).rows != w[l + 1] || store.slice(wi).cols != w[l] || store.slice(bi).rows != w[l + 1]) {
      throw ConfigError("parameter layout does not match network spec at " + prefix);
    }
    m.weights_.push_back(wi);
    m.biases_.push_back(bi);
  }
  return m;
}

ad::Jet Mlp::forward(ParamSource& params, const ad::Jet& x, DropoutState* dropout) const {
  if (x.rows() != spec_.input_dim) {
    throw DimensionError("mlp_forward: expected input dim " + std::to_string(spec_.input_dim) + ", got " +
                         std::to_string(x.rows()));
  }
  ad::Jet h = x;
  const int n = num_layers();
  for (int l = 0; l < n; ++l) {
    h = ad::affine(params.get(weights_[static_cast<std::size_t>(l)]), h, params.get(biases_[static_cast<std::size_t>(l)]));
    if (l + 1 < n) {
      h = ad::gelu(h);
      if (dropout != nullptr && dropout->training && dropout->rate > 0.0) {
        const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(h.rows(), h.cols());
        h = ad::mul_const(h, dropout_forward(ones, *dropout));
      }
    }
  }
  return h;
}

Eigen::MatrixXd Mlp::forward(const ParameterStore& params, const Eigen::MatrixXd& x) const {
  if (x.rows() != spec_.input_dim) throw DimensionError("mlp_forward: input dimension mismatch");
  Eigen::MatrixXd h = x;
  const int n = num_layers();
  for (int l = 0; l < n; ++l) {
    Eigen::MatrixXd z = params.view(weights_[static_cast<std::size_t>(l)]) * h;
    z.colwise() += params.view(biases_[static_cast<std::size_t>(l)]).col(0);
    h = (l + 1 < n) ? Eigen::MatrixXd(z.unaryExpr([](double v) { return gelu(v); })) : z;
  }
  return h;
}

void init_params(const Mlp& mlp, ParameterStore& store, Rng& rng) {
  for (int l = 0; l < mlp.num_layers(); ++l) {
    auto w = store.view(mlp.weight_slice(l));
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    store.view(mlp.bias_slice(l)).setZero();
  }
}

void AutoencoderSpec::validate() const {
  if (latent_dim < 1 || data_dim < 1) throw ConfigError("AutoencoderSpec: dimensions must be >= 1");
  if (latent_dim > data_dim) throw ConfigError("AutoencoderSpec: latent_dim must not exceed data_dim");
  encoder().validate();
  decoder().validate();
}

Autoencoder Autoencoder::create(ParameterStore& store, const std::string& prefix, const AutoencoderSpec& spec) {
  spec.validate();
  return {spec, Mlp::create(store, prefix + ".enc", spec.encoder()), Mlp::create(store, prefix + ".dec", spec.decoder())};
}

Autoencoder Autoencoder::bind(const ParameterStore& store, const std::string& prefix, const AutoencoderSpec& spec) {
  spec.validate();
  return {spec, Mlp::bind(store, prefix + ".enc", spec.encoder()), Mlp::bind(store, prefix + ".dec", spec.decoder())};
}

void Autoencoder::init(ParameterStore& store, Rng& rng) const {
  init_params(encoder, store, rng);
  init_params(decoder, store, rng);
}

}  // namespace dlda
