#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "teamrl/params.hpp"
#include "teamrl/rng.hpp"
#include "teamrl/tensor.hpp"

namespace teamrl {

// One-hot ID width: 5 training teams x 4 robots. Robots outside the
// training pool have no valid ID, which is what limits ID-based variants.
inline constexpr int kIdPoolSize = 20;
inline constexpr int kNumActions = 5;
inline constexpr int kHidden = 64;

enum class Variant { kIdMlp, kIdGnn, kCaMlp, kCaGnn, kCaCcGnn };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kIdMlp: return "id_mlp";
    case Variant::kIdGnn: return "id_gnn";
    case Variant::kCaMlp: return "ca_mlp";
    case Variant::kCaGnn: return "ca_gnn";
    case Variant::kCaCcGnn: return "ca_cc_gnn";
  }
  return "?";
}

inline Variant variant_from_name(const std::string& name) {
  if (name == "id_mlp") return Variant::kIdMlp;
  if (name == "id_gnn") return Variant::kIdGnn;
  if (name == "ca_mlp") return Variant::kCaMlp;
  if (name == "ca_gnn") return Variant::kCaGnn;
  if (name == "ca_cc_gnn") return Variant::kCaCcGnn;
  throw ConfigError(strfmt("unknown policy variant '%s'", name.c_str()));
}

inline bool variant_uses_ids(Variant v) {
  return v == Variant::kIdMlp || v == Variant::kIdGnn;
}

inline bool variant_is_gnn(Variant v) { return v != Variant::kIdMlp && v != Variant::kCaMlp; }

// Per-robot inputs for one team at one timestep (or several stacked teams
// when adjacency is block diagonal). node_features carries the observation
// without the capability/ID suffix; the variant decides where those attach.
template <typename Scalar>
struct GraphBatch {
  Mat<Scalar> node_features;  // N x F
  Mat<Scalar> capabilities;   // N x C
  Mat<Scalar> ids;            // N x kIdPoolSize, may be empty
  Mat<Scalar> adjacency;      // N x N binary, empty means fully connected
};

struct ForwardTrace {
  std::vector<std::string> entries;
  void note(const char* label, Eigen::Index r, Eigen::Index c) {
    entries.push_back(strfmt("%s %ldx%ld", label, static_cast<long>(r), static_cast<long>(c)));
  }
};

namespace detail {

template <typename S>
Tensor<S> linear(const BoundParams<S>& p, std::pair<int, int> wb, Tensor<S> x) {
  return add(matmul(x, p[wb.first]), p[wb.second]);
}

template <typename S>
std::pair<int, int> layer_ids(const ParamStore<S>& s, const std::string& prefix) {
  return {s.index_of(prefix + "/weight"), s.index_of(prefix + "/bias")};
}

}  // namespace detail

// Shared decentralized action policy. MLP variants map each robot's
// (observation ++ suffix) row straight through a 4-layer MLP. GNN variants
// run encoder -> one graph convolution -> action head, concatenating the
// encoder and aggregation outputs before the head.
template <typename Scalar>
class PolicyNet {
 public:
  Variant variant;
  int obs_dim = 0;  // without suffix
  int cap_dim = 0;

  // Creates fresh parameters in `store` and binds their indices.
  static PolicyNet create(ParamStore<Scalar>& store, Variant variant, int obs_dim, int cap_dim,
                          RngStream& rng) {
    PolicyNet net;
    net.variant = variant;
    net.obs_dim = obs_dim;
    net.cap_dim = cap_dim;
    const std::string base = variant_name(variant);
    const int sfx = net.suffix_dim();
    if (!variant_is_gnn(variant)) {
      // 4 weight layers: 3 hidden of kHidden + logits out
      const int dims[5] = {obs_dim + sfx, kHidden, kHidden, kHidden, kNumActions};
      for (int l = 0; l < 4; ++l)
        add_linear(store, strfmt("%s/mlp/l%d", base.c_str(), l), dims[l], dims[l + 1], rng);
    } else {
      const int enc_in = variant == Variant::kCaGnn ? obs_dim : obs_dim + sfx;
      add_linear(store, base + "/encoder/l0", enc_in, kHidden, rng);
      add_linear(store, base + "/encoder/l1", kHidden, kHidden, rng);
      add_linear(store, base + "/gcn/l0", kHidden, kHidden, rng);
      add_linear(store, base + "/gcn/l1", kHidden, kHidden, rng);
      const int act_in = 2 * kHidden + (variant == Variant::kCaGnn ? 2 * cap_dim : 0);
      add_linear(store, base + "/action/l0", act_in, kHidden, rng);
      add_linear(store, base + "/action/l1", kHidden, kNumActions, rng);
    }
    net.resolve(store);
    return net;
  }

  // Binds to already-present parameters (e.g. loaded from a checkpoint).
  static PolicyNet attach(const ParamStore<Scalar>& store, Variant variant, int obs_dim,
                          int cap_dim) {
    PolicyNet net;
    net.variant = variant;
    net.obs_dim = obs_dim;
    net.cap_dim = cap_dim;
    net.resolve(store);
    return net;
  }

  int suffix_dim() const { return variant_uses_ids(variant) ? kIdPoolSize : cap_dim; }

  // N x 5 logits for every robot in the batch.
  Tensor<Scalar> logits(Tape<Scalar>& tape, const BoundParams<Scalar>& p,
                        const GraphBatch<Scalar>& batch, ForwardTrace* trace = nullptr) const {
    const Eigen::Index n = batch.node_features.rows();
    if (batch.node_features.cols() != obs_dim)
      throw ShapeError(strfmt("%s: expected %d observation features per robot, got %ld",
                              variant_name(variant), obs_dim,
                              static_cast<long>(batch.node_features.cols())));
    Tensor<Scalar> suffix = lift_suffix(tape, batch, n);
    Tensor<Scalar> obs = tape.leaf(batch.node_features);

    if (!variant_is_gnn(variant)) {
      Tensor<Scalar> x = concat(obs, suffix, 1);
      for (size_t l = 0; l + 1 < mlp_.size(); ++l) x = relu(detail::linear(p, mlp_[l], x));
      Tensor<Scalar> out = detail::linear(p, mlp_.back(), x);
      if (trace) trace->note("logits", out.rows(), out.cols());
      return out;
    }

    Tensor<Scalar> node_in =
        variant == Variant::kCaGnn ? obs : concat(obs, suffix, 1);
    Tensor<Scalar> enc = encode(tape, p, node_in);
    if (trace) trace->note("encoder", enc.rows(), enc.cols());
    Tensor<Scalar> agg = gcn_layer(tape, p, enc, batch.adjacency);
    if (trace) trace->note("gcn", agg.rows(), agg.cols());
    Tensor<Scalar> head_in;
    if (variant == Variant::kCaGnn) {
      // capability joins only here, so the action head is the sole
      // capability-conditioned part of this variant
      head_in = concat(concat(enc, suffix, 1), concat(agg, suffix, 1), 1);
    } else {
      head_in = concat(enc, agg, 1);
    }
    if (trace) trace->note("pre_action", head_in.rows(), head_in.cols());
    Tensor<Scalar> out =
        detail::linear(p, action_[1], relu(detail::linear(p, action_[0], head_in)));
    if (trace) trace->note("logits", out.rows(), out.cols());
    return out;
  }

  // 2 weight layers, ReLU after the hidden one.
  Tensor<Scalar> encode(Tape<Scalar>& tape, const BoundParams<Scalar>& p,
                        Tensor<Scalar> features) const {
    (void)tape;
    const int expect = variant == Variant::kCaGnn ? obs_dim : obs_dim + suffix_dim();
    if (features.cols() != expect)
      throw ShapeError(strfmt("%s encoder: expected %d input features, got %ld",
                              variant_name(variant), expect, static_cast<long>(features.cols())));
    return detail::linear(p, encoder_[1], relu(detail::linear(p, encoder_[0], features)));
  }

  // h_i = ReLU( sum_{j in N(i) + self} phi(h_j) ) with phi a 2-layer MLP.
  Tensor<Scalar> gcn_layer(Tape<Scalar>& tape, const BoundParams<Scalar>& p, Tensor<Scalar> h,
                           const Mat<Scalar>& adjacency) const {
    const Eigen::Index n = h.rows();
    Mat<Scalar> a_hat;
    if (adjacency.size() == 0) {
      a_hat = Mat<Scalar>::Ones(n, n);
    } else {
      if (adjacency.rows() != n || adjacency.cols() != n)
        throw ShapeError(strfmt("gcn_layer: adjacency must be %ldx%ld", static_cast<long>(n),
                                static_cast<long>(n)));
      if (!adjacency.isApprox(adjacency.transpose()))
        throw ShapeError("gcn_layer: adjacency must be symmetric");
      a_hat = adjacency;
      a_hat.diagonal().setOnes();  // self-loop
    }
    Tensor<Scalar> phi = detail::linear(p, gcn_[1], relu(detail::linear(p, gcn_[0], h)));
    return relu(matmul(tape.leaf(std::move(a_hat)), phi));
  }

 private:
  void resolve(const ParamStore<Scalar>& store) {
    const std::string base = variant_name(variant);
    if (!variant_is_gnn(variant)) {
      for (int l = 0; l < 4; ++l)
        mlp_.push_back(detail::layer_ids(store, strfmt("%s/mlp/l%d", base.c_str(), l)));
    } else {
      for (int l = 0; l < 2; ++l) {
        encoder_.push_back(detail::layer_ids(store, strfmt("%s/encoder/l%d", base.c_str(), l)));
        gcn_.push_back(detail::layer_ids(store, strfmt("%s/gcn/l%d", base.c_str(), l)));
        action_.push_back(detail::layer_ids(store, strfmt("%s/action/l%d", base.c_str(), l)));
      }
    }
  }

  Tensor<Scalar> lift_suffix(Tape<Scalar>& tape, const GraphBatch<Scalar>& batch,
                             Eigen::Index n) const {
    if (variant_uses_ids(variant)) {
      if (batch.ids.rows() != n || batch.ids.cols() != kIdPoolSize)
        throw Error(strfmt("%s requires %ldx%d one-hot IDs", variant_name(variant),
                           static_cast<long>(n), kIdPoolSize));
      return tape.leaf(batch.ids);
    }
    if (batch.capabilities.rows() != n || batch.capabilities.cols() != cap_dim)
      throw Error(strfmt("%s requires %ldx%d capability vectors", variant_name(variant),
                         static_cast<long>(n), cap_dim));
    return tape.leaf(batch.capabilities);
  }

  std::vector<std::pair<int, int>> mlp_;
  std::vector<std::pair<int, int>> encoder_;
  std::vector<std::pair<int, int>> gcn_;
  std::vector<std::pair<int, int>> action_;
};

// Centralized critic: the team's concatenated per-robot inputs (canonical
// team order) through a 3-weight-layer MLP to one value.
template <typename Scalar>
class CriticNet {
 public:
  int n_train = 0;
  int input_dim = 0;  // n_train * (obs_dim + suffix_dim)

  static CriticNet create(ParamStore<Scalar>& store, Variant variant, int obs_dim, int cap_dim,
                          int n_train, RngStream& rng) {
    CriticNet net;
    net.n_train = n_train;
    const int sfx = variant_uses_ids(variant) ? kIdPoolSize : cap_dim;
    net.input_dim = n_train * (obs_dim + sfx);
    const std::string base = std::string(variant_name(variant)) + "/critic";
    add_linear(store, base + "/l0", net.input_dim, kHidden, rng);
    add_linear(store, base + "/l1", kHidden, kHidden, rng);
    add_linear(store, base + "/l2", kHidden, 1, rng);
    net.resolve(store, variant);
    return net;
  }

  static CriticNet attach(const ParamStore<Scalar>& store, Variant variant, int obs_dim,
                          int cap_dim, int n_train) {
    CriticNet net;
    net.n_train = n_train;
    const int sfx = variant_uses_ids(variant) ? kIdPoolSize : cap_dim;
    net.input_dim = n_train * (obs_dim + sfx);
    net.resolve(store, variant);
    return net;
  }

  // input: rows x input_dim (one row per time step).
  Tensor<Scalar> value(Tape<Scalar>& tape, const BoundParams<Scalar>& p,
                       Tensor<Scalar> input) const {
    (void)tape;
    if (input.cols() != input_dim)
      throw ShapeError(strfmt("critic: expected team input of width %d (team size %d), got %ld",
                              input_dim, n_train, static_cast<long>(input.cols())));
    Tensor<Scalar> h = relu(detail::linear(p, layers_[0], input));
    h = relu(detail::linear(p, layers_[1], h));
    return detail::linear(p, layers_[2], h);
  }

 private:
  void resolve(const ParamStore<Scalar>& store, Variant variant) {
    const std::string base = std::string(variant_name(variant)) + "/critic";
    for (int l = 0; l < 3; ++l)
      layers_.push_back(detail::layer_ids(store, strfmt("%s/l%d", base.c_str(), l)));
  }

  std::vector<std::pair<int, int>> layers_;
};

// Value-level softmax shared by sampling and diagnostics; same kernel as
// the tape primitive's forward.
template <typename Scalar>
Mat<Scalar> rowwise_softmax(const Mat<Scalar>& logits) {
  return detail::softmax_value(logits);
}

template <typename Scalar>
struct ActionSample {
  std::vector<int> actions;
  std::vector<Scalar> log_probs;
};

// Categorical sample per row; log-prob of the drawn action alongside.
template <typename Scalar>
ActionSample<Scalar> soft_action_select(const Mat<Scalar>& logits, RngStream& rng) {
  if (!logits.allFinite()) throw Error("soft_action_select: non-finite logits");
  const Mat<Scalar> probs = rowwise_softmax(logits);
  ActionSample<Scalar> out;
  out.actions.resize(static_cast<size_t>(logits.rows()));
  out.log_probs.resize(static_cast<size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double u = rng.next_double();
    double acc = 0.0;
    int pick = static_cast<int>(logits.cols()) - 1;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      acc += static_cast<double>(probs(r, c));
      if (u < acc) {
        pick = static_cast<int>(c);
        break;
      }
    }
    out.actions[static_cast<size_t>(r)] = pick;
    out.log_probs[static_cast<size_t>(r)] = std::log(probs(r, pick));
  }
  return out;
}

// Argmax per row; ties break toward the lowest index.
template <typename Scalar>
std::vector<int> hard_action_select(const Mat<Scalar>& logits) {
  if (!logits.allFinite()) throw Error("hard_action_select: non-finite logits");
  std::vector<int> actions(static_cast<size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    int best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c)
      if (logits(r, c) > logits(r, best)) best = static_cast<int>(c);
    actions[static_cast<size_t>(r)] = best;
  }
  return actions;
}

}  // namespace teamrl
