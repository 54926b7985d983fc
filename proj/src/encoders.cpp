#include "grn/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "grn/canonical.hpp"

namespace grn {

Tensor node_feature_init(const Graph& g, FeatureScheme scheme, int max_degree) {
  const auto n = static_cast<std::size_t>(g.num_nodes());
  switch (scheme) {
    case FeatureScheme::constant:
      return Tensor({n, 1}, 1.0);
    case FeatureScheme::degree_onehot: {
      if (max_degree < 0) throw std::invalid_argument("max_degree must be non-negative");
      const auto width = static_cast<std::size_t>(max_degree) + 1;
      Tensor out({n, width}, 0.0);
      for (std::size_t v = 0; v < n; ++v) out.at(v, static_cast<std::size_t>(std::min(g.degree(static_cast<int>(v)), max_degree))) = 1.0;
      return out;
    }
    case FeatureScheme::original: {
      const auto& features = g.node_features();
      if (!features || features->empty()) throw GraphError("graph has no original node features");
      const std::size_t width = features->front().size();
      Tensor out({n, width}, 0.0);
      for (std::size_t v = 0; v < n; ++v) {
        const auto& row = (*features)[v];
        if (row.size() != width) throw GraphError("node feature rows have different widths");
        std::copy(row.begin(), row.end(), out.data().begin() + static_cast<std::ptrdiff_t>(v * width));
      }
      return out;
    }
  }
  throw std::invalid_argument("unknown feature scheme");
}

int feature_width(FeatureScheme scheme, int max_degree) {
  switch (scheme) {
    case FeatureScheme::constant:
      return 1;
    case FeatureScheme::degree_onehot:
      return max_degree + 1;
    case FeatureScheme::original:
      break;
  }
  throw std::invalid_argument("feature width of original features depends on the dataset");
}

Tensor normalized_adjacency(const Graph& g) {
  const auto n = static_cast<std::size_t>(g.num_nodes());
  Tensor out({n, n}, 0.0);
  std::vector<double> inv_sqrt(n);
  for (std::size_t v = 0; v < n; ++v) inv_sqrt[v] = 1.0 / std::sqrt(1.0 + g.degree(static_cast<int>(v)));
  for (std::size_t v = 0; v < n; ++v) out.at(v, v) = inv_sqrt[v] * inv_sqrt[v];
  for (const auto& [a, b] : g.edges()) {
    const auto u = static_cast<std::size_t>(a), w = static_cast<std::size_t>(b);
    out.at(u, w) = out.at(w, u) = inv_sqrt[u] * inv_sqrt[w];
  }
  return out;
}

void GnnConfig::validate() const {
  if (input_width < 1 || hidden_size < 1 || num_layers < 1)
    throw std::invalid_argument("gnn widths and layer count must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
}

namespace {

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Tensor t({fan_in, fan_out});
  for (double& x : t.values()) x = u(rng);
  return t;
}

ad::Var dropout(ad::Tape& tape, ad::Var h, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(1.0 - p);
  Tensor mask(h.value().shape());
  for (double& x : mask.values()) x = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
  return ad::mul(h, tape.constant(std::move(mask)));
}

}  // namespace

GnnParams GnnParams::glorot(const GnnConfig& config, std::mt19937_64& rng, int head_out) {
  config.validate();
  GnnParams p;
  std::size_t in = static_cast<std::size_t>(config.input_width);
  const auto hidden = static_cast<std::size_t>(config.hidden_size);
  for (int l = 0; l < config.num_layers; ++l) {
    p.conv.push_back(glorot_uniform(in, hidden, rng));
    in = hidden;
  }
  const auto out = static_cast<std::size_t>(head_out < 0 ? config.output_width() : head_out);
  p.head_weight = glorot_uniform(hidden, out, rng);
  p.head_bias = Tensor({1, out}, 0.0);
  return p;
}

std::vector<Tensor*> GnnParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& w : conv) out.push_back(&w);
  out.push_back(&head_weight);
  out.push_back(&head_bias);
  return out;
}

NamedTensors GnnParams::named(const std::string& prefix) const {
  NamedTensors out;
  for (std::size_t l = 0; l < conv.size(); ++l) out.emplace_back(prefix + "conv" + std::to_string(l), conv[l]);
  out.emplace_back(prefix + "head_weight", head_weight);
  out.emplace_back(prefix + "head_bias", head_bias);
  return out;
}

GnnParams GnnParams::from_named(const NamedTensors& tensors, const std::string& prefix, int num_layers) {
  GnnParams p;
  for (int l = 0; l < num_layers; ++l) p.conv.push_back(find_tensor(tensors, prefix + "conv" + std::to_string(l)));
  p.head_weight = find_tensor(tensors, prefix + "head_weight");
  p.head_bias = find_tensor(tensors, prefix + "head_bias");
  return p;
}

GnnVars GnnVars::on(ad::Tape& tape, const GnnParams& params, bool requires_grad) {
  GnnVars v;
  for (const auto& w : params.conv) v.conv.push_back(tape.leaf(w, requires_grad));
  v.head_weight = tape.leaf(params.head_weight, requires_grad);
  v.head_bias = tape.leaf(params.head_bias, requires_grad);
  return v;
}

std::vector<ad::Var> GnnVars::all() const {
  std::vector<ad::Var> out = conv;
  out.push_back(head_weight);
  out.push_back(head_bias);
  return out;
}

ad::Var gcn_layer(ad::Var h, ad::Var adj, ad::Var w) { return ad::relu(ad::matmul(adj, ad::matmul(h, w))); }

ad::Var gnn_pool(ad::Tape& tape, const Graph& g, const Tensor& features, const GnnVars& params,
                 const GnnConfig& config, Mode mode, std::mt19937_64* rng) {
  if (static_cast<int>(features.rows()) != g.num_nodes() || static_cast<int>(features.cols()) != config.input_width)
    throw std::invalid_argument("node features " + to_string(features.shape()) + " do not fit the graph and config");
  if (g.num_nodes() == 0) throw GraphError("cannot encode an empty graph");
  const bool drop = mode == Mode::train && config.dropout > 0.0;
  if (drop && rng == nullptr) throw std::invalid_argument("dropout needs a random generator");
  const ad::Var adj = tape.constant(normalized_adjacency(g));
  ad::Var h = tape.constant(features);
  for (const ad::Var& w : params.conv) {
    h = gcn_layer(h, adj, w);
    if (drop) h = dropout(tape, h, config.dropout, *rng);
  }
  return ad::mean(h, 0);
}

ad::Var encode_gnn(ad::Tape& tape, const Graph& g, const Tensor& features, const GnnVars& params,
                   const GnnConfig& config, Mode mode, std::mt19937_64* rng) {
  const ad::Var pooled = gnn_pool(tape, g, features, params, config, mode, rng);
  return ad::sigmoid(ad::matmul(pooled, params.head_weight) + params.head_bias);
}

ad::Var gnn_logits(ad::Tape& tape, const Graph& g, const Tensor& features, const GnnVars& params,
                   const GnnConfig& config, Mode mode, std::mt19937_64* rng) {
  const ad::Var pooled = gnn_pool(tape, g, features, params, config, mode, rng);
  return ad::matmul(pooled, params.head_weight) + params.head_bias;
}

ad::Var encode_combined(ad::Tape& tape, const Graph& g, const Tensor& features, const GnnVars& params,
                        const GnnConfig& config, int n_max, Mode mode, std::mt19937_64* rng) {
  const BitString asc = encode_asc(g, n_max);
  const ad::Var fixed = tape.constant(Tensor({1, asc.size()}, std::vector<double>(asc.begin(), asc.end())));
  const ad::Var learned = encode_gnn(tape, g, features, params, config, mode, rng);
  const ad::Var parts[] = {fixed, learned};
  return ad::concat(parts, 1);
}

EncodedGraph encode_combined(const Graph& g, const Tensor& features, const GnnParams& params, const GnnConfig& config,
                             int n_max) {
  ad::Tape tape;
  const GnnVars vars = GnnVars::on(tape, params, false);
  const ad::Var out = encode_combined(tape, g, features, vars, config, n_max, Mode::eval, nullptr);
  EncodedGraph enc;
  enc.r = out.value().data();
  enc.fixed.assign(enc.r.size(), 0);
  std::fill_n(enc.fixed.begin(), upper_length(n_max), 1);
  return enc;
}

}  // namespace grn
