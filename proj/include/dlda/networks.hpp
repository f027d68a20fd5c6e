#pragma once

#include "dlda/jet.hpp"
#include "dlda/params.hpp"

#include <Eigen/Dense>

#include <random>
#include <string>
#include <vector>

namespace dlda {

using Rng = std::mt19937_64;

struct MlpSpec {
  int input_dim = 1;
  int hidden_dim = 30;
  int hidden_layers = 3;
  int output_dim = 1;

  void validate() const;
  bool operator==(const MlpSpec&) const = default;
};

// Inverted dropout: kept units are scaled by 1/(1-rate) so the expected
// output equals the input. Masks are drawn only while training.
struct DropoutState {
  double rate = 0.5;
  Rng rng{0};
  bool training = false;
};

// Exact erf form: 0.5 x (1 + erf(x / sqrt 2)).
double gelu(double x);

Eigen::MatrixXd dropout_forward(const Eigen::MatrixXd& h, DropoutState& state);

// Affine -> GELU chain with a final affine layer. Owns slice indices only;
// the weights live in a ParameterStore.
class Mlp {
 public:
  Mlp() = default;

  // Registers "<prefix>.<layer>.W" / ".b" slices (zero-filled).
  static Mlp create(ParameterStore& store, const std::string& prefix, const MlpSpec& spec);
  // Looks up slices previously registered by create().
  static Mlp bind(const ParameterStore& store, const std::string& prefix, const MlpSpec& spec);

  const MlpSpec& spec() const { return spec_; }
  int num_layers() const { return static_cast<int>(weights_.size()); }
  std::size_t weight_slice(int layer) const { return weights_.at(static_cast<std::size_t>(layer)); }
  std::size_t bias_slice(int layer) const { return biases_.at(static_cast<std::size_t>(layer)); }

  // x is (input_dim x B). dropout (if given and training) acts on hidden layers.
  ad::Jet forward(ParamSource& params, const ad::Jet& x, DropoutState* dropout = nullptr) const;
  Eigen::MatrixXd forward(const ParameterStore& params, const Eigen::MatrixXd& x) const;

 private:
  MlpSpec spec_;
  std::vector<std::size_t> weights_;
  std::vector<std::size_t> biases_;
};

// Glorot-uniform weights, zero biases.
void init_params(const Mlp& mlp, ParameterStore& store, Rng& rng);

struct AutoencoderSpec {
  int data_dim = 1500;
  int latent_dim = 1;
  int hidden_dim = 64;
  int hidden_layers = 1;

  MlpSpec encoder() const { return {data_dim, hidden_dim, hidden_layers, latent_dim}; }
  MlpSpec decoder() const { return {latent_dim, hidden_dim, hidden_layers, data_dim}; }
  void validate() const;
};

struct Autoencoder {
  AutoencoderSpec spec;
  Mlp encoder;
  Mlp decoder;

  static Autoencoder create(ParameterStore& store, const std::string& prefix, const AutoencoderSpec& spec);
  static Autoencoder bind(const ParameterStore& store, const std::string& prefix, const AutoencoderSpec& spec);
  void init(ParameterStore& store, Rng& rng) const;

  Eigen::MatrixXd encode(const ParameterStore& p, const Eigen::MatrixXd& x) const { return encoder.forward(p, x); }
  Eigen::MatrixXd decode(const ParameterStore& p, const Eigen::MatrixXd& z) const { return decoder.forward(p, z); }
};

}  // namespace dlda
