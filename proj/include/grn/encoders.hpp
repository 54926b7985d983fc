#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "grn/autodiff.hpp"
#include "grn/checkpoint.hpp"
#include "grn/graph.hpp"
#include "grn/tensor.hpp"

namespace grn {

enum class FeatureScheme { constant, degree_onehot, original };
enum class Mode { train, eval };

inline constexpr int kDefaultMaxDegree = 10;

/// Node feature matrix, one row per vertex.
///   constant       all-ones column
///   degree_onehot  e_deg(v) over degrees 0..max_degree, larger degrees clamped
///   original       the graph's own features (throws GraphError if absent)
Tensor node_feature_init(const Graph& g, FeatureScheme scheme, int max_degree = kDefaultMaxDegree);

/// Width of the rows node_feature_init produces; original needs the graph.
int feature_width(FeatureScheme scheme, int max_degree = kDefaultMaxDegree);

/// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
Tensor normalized_adjacency(const Graph& g);

struct GnnConfig {
  int input_width = 1;
  int hidden_size = 32;
  double dropout = 0.0;
  int num_layers = 2;

  /// The pooled second convolution feeds one affine map of the same width.
  int output_width() const { return hidden_size; }
  void validate() const;
};

/// conv weights, then the affine head applied after pooling.
struct GnnParams {
  std::vector<Tensor> conv;  // input_width x hidden, hidden x hidden, ...
  Tensor head_weight;        // hidden x out
  Tensor head_bias;          // 1 x out

  /// Glorot-uniform weights, zero bias. head_out defaults to the hidden size.
  static GnnParams glorot(const GnnConfig& config, std::mt19937_64& rng, int head_out = -1);

  std::vector<Tensor*> tensors();
  NamedTensors named(const std::string& prefix) const;
  static GnnParams from_named(const NamedTensors& tensors, const std::string& prefix, int num_layers);
};

/// GnnParams as tape variables.
struct GnnVars {
  std::vector<ad::Var> conv;
  ad::Var head_weight;
  ad::Var head_bias;

  static GnnVars on(ad::Tape& tape, const GnnParams& params, bool requires_grad);
  std::vector<ad::Var> all() const;
};

/// relu(adj H W) with adj already normalized.
ad::Var gcn_layer(ad::Var h, ad::Var adj, ad::Var w);

/// Convolutions (with dropout after each when training) and mean pooling: 1 x hidden.
/// rng is only drawn from when training with dropout > 0.
ad::Var gnn_pool(ad::Tape& tape, const Graph& g, const Tensor& features, const GnnVars& params,
                 const GnnConfig& config, Mode mode, std::mt19937_64* rng);

/// sigmoid(pool W + b), a 1 x d_gnn vector strictly inside (0, 1).
ad::Var encode_gnn(ad::Tape& tape, const Graph& g, const Tensor& features, const GnnVars& params,
                   const GnnConfig& config, Mode mode, std::mt19937_64* rng);

/// Baseline classifier: pool W + b as 1 x 2 logits (params built with head_out = 2).
ad::Var gnn_logits(ad::Tape& tape, const Graph& g, const Tensor& features, const GnnVars& params,
                   const GnnConfig& config, Mode mode, std::mt19937_64* rng);

/// Encoded graph with a flag per coordinate: 1 when fixed (binary, no gradient).
struct EncodedGraph {
  std::vector<double> r;
  std::vector<std::uint8_t> fixed;
};

/// [encode_asc(g, n_max) | encode_gnn(g)] as one 1 x d row. The ASC part is a
/// tape constant, so only GNN parameters receive gradient.
ad::Var encode_combined(ad::Tape& tape, const Graph& g, const Tensor& features, const GnnVars& params,
                        const GnnConfig& config, int n_max, Mode mode, std::mt19937_64* rng);

/// Evaluation-mode convenience wrapper.
EncodedGraph encode_combined(const Graph& g, const Tensor& features, const GnnParams& params, const GnnConfig& config,
                             int n_max);

}  // namespace grn
