#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "teamrl/common.hpp"

namespace teamrl {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
class Tape;

// Lightweight handle to a node on a tape. Values are immutable once
// created; only gradient accumulation mutates tape state.
template <typename Scalar>
struct Tensor {
  Tape<Scalar>* tape = nullptr;
  int id = -1;

  const Mat<Scalar>& value() const { return tape->value(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

// Reverse-mode tape over dense matrices. Nodes are appended in
// topological order by construction; backward() walks them once in
// reverse. A tape and its tensors belong to one logical thread.
template <typename Scalar>
class Tape {
 public:
  using M = Mat<Scalar>;

  Tensor<Scalar> leaf(M value) {
    nodes_.push_back(Node{Op::kLeaf});
    nodes_.back().value = std::move(value);
    return handle(static_cast<int>(nodes_.size()) - 1);
  }

  // Leaf whose storage stays outside the tape (parameters). The referenced
  // matrix must outlive the tape and stay unmodified while the tape is live.
  Tensor<Scalar> leaf_ref(const M* external) {
    nodes_.push_back(Node{Op::kLeaf});
    nodes_.back().ext = external;
    return handle(static_cast<int>(nodes_.size()) - 1);
  }

  Tensor<Scalar> constant(Eigen::Index rows, Eigen::Index cols, Scalar fill) {
    return leaf(M::Constant(rows, cols, fill));
  }

  const M& value(Tensor<Scalar> t) const {
    const Node& n = node(t);
    return n.ext != nullptr ? *n.ext : n.value;
  }

  bool has_grad(Tensor<Scalar> t) const { return node(t).grad.size() > 0; }

  const M& grad(Tensor<Scalar> t) const {
    const Node& n = node(t);
    if (n.grad.size() == 0) throw Error("grad: no gradient accumulated for this tensor");
    return n.grad;
  }

  M grad_or_zero(Tensor<Scalar> t) const {
    const Node& n = node(t);
    if (n.grad.size() > 0) return n.grad;
    const M& v = value(t);
    return M::Zero(v.rows(), v.cols());
  }

  void zero_grad() {
    for (Node& n : nodes_) n.grad.resize(0, 0);
  }

  // Accumulates d(out)/d(node) into every reachable node's grad.
  // Repeated calls without zero_grad() keep accumulating.
  void backward(Tensor<Scalar> out) {
    const M& ov = value(out);
    if (ov.rows() != 1 || ov.cols() != 1)
      throw ShapeError(strfmt("backward: output must be scalar, got %ldx%ld",
                              static_cast<long>(ov.rows()), static_cast<long>(ov.cols())));
    adjoints_.assign(nodes_.size(), M());
    adjoints_[static_cast<size_t>(out.id)] = M::Constant(1, 1, Scalar(1));
    for (int i = out.id; i >= 0; --i) {
      if (adjoints_[static_cast<size_t>(i)].size() == 0) continue;
      propagate(i);
    }
    for (size_t i = 0; i < nodes_.size(); ++i) {
      const M& adj = adjoints_[i];
      if (adj.size() == 0) continue;
      M& g = nodes_[i].grad;
      if (g.size() == 0)
        g = adj;
      else
        g += adj;
    }
    adjoints_.clear();
  }

  void reset() {
    nodes_.clear();
    adjoints_.clear();
  }

  size_t size() const { return nodes_.size(); }

 private:
  enum class Op : uint8_t {
    kLeaf,
    kMatmul,
    kAdd,
    kAddBias,
    kMul,
    kRelu,
    kTanh,
    kConcatRows,
    kConcatCols,
    kSum,
    kMean,
    kLog,
    kExp,
    kSoftmax,
    kGatherRows,
    kScatterAddRows,
  };

  struct Node {
    Op op = Op::kLeaf;
    int a = -1;
    int b = -1;
    M value;
    const M* ext = nullptr;
    M grad;
    std::vector<int> row_index;  // gather/scatter targets
  };

  template <typename S>
  friend Tensor<S> matmul(Tensor<S> a, Tensor<S> b);
  template <typename S>
  friend Tensor<S> add(Tensor<S> a, Tensor<S> b);
  template <typename S>
  friend Tensor<S> mul(Tensor<S> a, Tensor<S> b);
  template <typename S>
  friend Tensor<S> relu(Tensor<S> a);
  template <typename S>
  friend Tensor<S> tanh(Tensor<S> a);
  template <typename S>
  friend Tensor<S> concat(Tensor<S> a, Tensor<S> b, int axis);
  template <typename S>
  friend Tensor<S> sum(Tensor<S> a);
  template <typename S>
  friend Tensor<S> mean(Tensor<S> a);
  template <typename S>
  friend Tensor<S> log(Tensor<S> a);
  template <typename S>
  friend Tensor<S> exp(Tensor<S> a);
  template <typename S>
  friend Tensor<S> softmax(Tensor<S> a);
  template <typename S>
  friend Tensor<S> gather_rows(Tensor<S> a, const std::vector<int>& index);
  template <typename S>
  friend Tensor<S> scatter_add_rows(Tensor<S> src, const std::vector<int>& index, Eigen::Index out_rows);

  Tensor<Scalar> handle(int id) { return Tensor<Scalar>{this, id}; }

  Node& node(Tensor<Scalar> t) { return nodes_.at(static_cast<size_t>(t.id)); }
  const Node& node(Tensor<Scalar> t) const { return nodes_.at(static_cast<size_t>(t.id)); }

  const M& node_value(int id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    return n.ext != nullptr ? *n.ext : n.value;
  }

  Tensor<Scalar> emplace(Op op, int a, int b, M value, std::vector<int> row_index = {}) {
    nodes_.push_back(Node{op, a, b});
    nodes_.back().value = std::move(value);
    nodes_.back().row_index = std::move(row_index);
    return handle(static_cast<int>(nodes_.size()) - 1);
  }

  M& adj(int id) {
    M& a = adjoints_[static_cast<size_t>(id)];
    if (a.size() == 0) {
      const M& v = node_value(id);
      a = M::Zero(v.rows(), v.cols());
    }
    return a;
  }

  void propagate(int id) {
    const Node& n = nodes_[static_cast<size_t>(id)];
    const M& g = adjoints_[static_cast<size_t>(id)];
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatmul:
        adj(n.a).noalias() += g * node_value(n.b).transpose();
        adj(n.b).noalias() += node_value(n.a).transpose() * g;
        break;
      case Op::kAdd:
        adj(n.a) += g;
        adj(n.b) += g;
        break;
      case Op::kAddBias:
        adj(n.a) += g;
        adj(n.b) += g.colwise().sum();
        break;
      case Op::kMul:
        adj(n.a).array() += g.array() * node_value(n.b).array();
        adj(n.b).array() += g.array() * node_value(n.a).array();
        break;
      case Op::kRelu:
        adj(n.a).array() +=
            g.array() * (node_value(n.a).array() > Scalar(0)).template cast<Scalar>();
        break;
      case Op::kTanh:
        adj(n.a).array() += g.array() * (Scalar(1) - n.value.array().square());
        break;
      case Op::kConcatRows: {
        const Eigen::Index ra = node_value(n.a).rows();
        adj(n.a) += g.topRows(ra);
        adj(n.b) += g.bottomRows(g.rows() - ra);
        break;
      }
      case Op::kConcatCols: {
        const Eigen::Index ca = node_value(n.a).cols();
        adj(n.a) += g.leftCols(ca);
        adj(n.b) += g.rightCols(g.cols() - ca);
        break;
      }
      case Op::kSum:
        adj(n.a).array() += g(0, 0);
        break;
      case Op::kMean:
        adj(n.a).array() += g(0, 0) / static_cast<Scalar>(node_value(n.a).size());
        break;
      case Op::kLog:
        adj(n.a).array() += g.array() / node_value(n.a).array();
        break;
      case Op::kExp:
        adj(n.a).array() += g.array() * n.value.array();
        break;
      case Op::kSoftmax: {
        // per row: dx = y * (dy - dot(dy, y))
        M& da = adj(n.a);
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          const auto y = n.value.row(r).array();
          const auto dy = g.row(r).array();
          const Scalar dot = (dy * y).sum();
          da.row(r).array() += y * (dy - dot);
        }
        break;
      }
      case Op::kGatherRows: {
        M& da = adj(n.a);
        for (size_t k = 0; k < n.row_index.size(); ++k)
          da.row(n.row_index[k]) += g.row(static_cast<Eigen::Index>(k));
        break;
      }
      case Op::kScatterAddRows: {
        M& da = adj(n.a);
        for (size_t k = 0; k < n.row_index.size(); ++k)
          da.row(static_cast<Eigen::Index>(k)) += g.row(n.row_index[k]);
        break;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<M> adjoints_;
};

namespace detail {

template <typename S>
Tape<S>* same_tape(Tensor<S> a, Tensor<S> b, const char* op) {
  if (a.tape == nullptr || a.tape != b.tape)
    throw Error(strfmt("%s: operands must live on the same tape", op));
  return a.tape;
}

// Max-shifted row-wise softmax; also used directly for action sampling.
template <typename S>
Mat<S> softmax_value(const Mat<S>& logits) {
  Mat<S> out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const S m = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

inline std::string shape_str(Eigen::Index r, Eigen::Index c) {
  return strfmt("%ldx%ld", static_cast<long>(r), static_cast<long>(c));
}

}  // namespace detail

template <typename S>
Tensor<S> matmul(Tensor<S> a, Tensor<S> b) {
  Tape<S>* t = detail::same_tape(a, b, "matmul");
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.cols() != bv.rows())
    throw ShapeError(strfmt("matmul: inner dimensions mismatch (%s vs %s)",
                            detail::shape_str(av.rows(), av.cols()).c_str(),
                            detail::shape_str(bv.rows(), bv.cols()).c_str()));
  Mat<S> out(av.rows(), bv.cols());
  out.noalias() = av * bv;
  return t->emplace(Tape<S>::Op::kMatmul, a.id, b.id, std::move(out));
}

// Same-shape elementwise add, or bias broadcast when b is 1 x cols(a).
template <typename S>
Tensor<S> add(Tensor<S> a, Tensor<S> b) {
  Tape<S>* t = detail::same_tape(a, b, "add");
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rows() == bv.rows() && av.cols() == bv.cols())
    return t->emplace(Tape<S>::Op::kAdd, a.id, b.id, av + bv);
  if (bv.rows() == 1 && bv.cols() == av.cols()) {
    Mat<S> out = av;
    out.rowwise() += bv.row(0);
    return t->emplace(Tape<S>::Op::kAddBias, a.id, b.id, std::move(out));
  }
  throw ShapeError(strfmt("add: incompatible shapes (%s vs %s)",
                          detail::shape_str(av.rows(), av.cols()).c_str(),
                          detail::shape_str(bv.rows(), bv.cols()).c_str()));
}

template <typename S>
Tensor<S> mul(Tensor<S> a, Tensor<S> b) {
  Tape<S>* t = detail::same_tape(a, b, "mul");
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols())
    throw ShapeError(strfmt("mul: shapes differ (%s vs %s)",
                            detail::shape_str(av.rows(), av.cols()).c_str(),
                            detail::shape_str(bv.rows(), bv.cols()).c_str()));
  return t->emplace(Tape<S>::Op::kMul, a.id, b.id, av.cwiseProduct(bv));
}

template <typename S>
Tensor<S> relu(Tensor<S> a) {
  return a.tape->emplace(Tape<S>::Op::kRelu, a.id, -1, a.value().cwiseMax(S(0)));
}

template <typename S>
Tensor<S> tanh(Tensor<S> a) {
  return a.tape->emplace(Tape<S>::Op::kTanh, a.id, -1, a.value().array().tanh().matrix());
}

// axis 0 stacks rows, axis 1 stacks columns.
template <typename S>
Tensor<S> concat(Tensor<S> a, Tensor<S> b, int axis) {
  Tape<S>* t = detail::same_tape(a, b, "concat");
  const auto& av = a.value();
  const auto& bv = b.value();
  if (axis == 0) {
    if (av.cols() != bv.cols())
      throw ShapeError(strfmt("concat axis 0: column counts differ (%s vs %s)",
                              detail::shape_str(av.rows(), av.cols()).c_str(),
                              detail::shape_str(bv.rows(), bv.cols()).c_str()));
    Mat<S> out(av.rows() + bv.rows(), av.cols());
    out << av, bv;
    return t->emplace(Tape<S>::Op::kConcatRows, a.id, b.id, std::move(out));
  }
  if (axis == 1) {
    if (av.rows() != bv.rows())
      throw ShapeError(strfmt("concat axis 1: row counts differ (%s vs %s)",
                              detail::shape_str(av.rows(), av.cols()).c_str(),
                              detail::shape_str(bv.rows(), bv.cols()).c_str()));
    Mat<S> out(av.rows(), av.cols() + bv.cols());
    out << av, bv;
    return t->emplace(Tape<S>::Op::kConcatCols, a.id, b.id, std::move(out));
  }
  throw ShapeError(strfmt("concat: axis must be 0 or 1, got %d", axis));
}

template <typename S>
Tensor<S> sum(Tensor<S> a) {
  return a.tape->emplace(Tape<S>::Op::kSum, a.id, -1, Mat<S>::Constant(1, 1, a.value().sum()));
}

template <typename S>
Tensor<S> mean(Tensor<S> a) {
  return a.tape->emplace(Tape<S>::Op::kMean, a.id, -1, Mat<S>::Constant(1, 1, a.value().mean()));
}

template <typename S>
Tensor<S> log(Tensor<S> a) {
  return a.tape->emplace(Tape<S>::Op::kLog, a.id, -1, a.value().array().log().matrix());
}

template <typename S>
Tensor<S> exp(Tensor<S> a) {
  return a.tape->emplace(Tape<S>::Op::kExp, a.id, -1, a.value().array().exp().matrix());
}

// Row-wise softmax (softmax over the last axis), max-shifted for stability.
template <typename S>
Tensor<S> softmax(Tensor<S> a) {
  return a.tape->emplace(Tape<S>::Op::kSoftmax, a.id, -1, detail::softmax_value(a.value()));
}

template <typename S>
Tensor<S> gather_rows(Tensor<S> a, const std::vector<int>& index) {
  const auto& av = a.value();
  Mat<S> out(static_cast<Eigen::Index>(index.size()), av.cols());
  for (size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= av.rows())
      throw ShapeError(strfmt("gather_rows: index %d out of range [0, %ld)", index[k],
                              static_cast<long>(av.rows())));
    out.row(static_cast<Eigen::Index>(k)) = av.row(index[k]);
  }
  return a.tape->emplace(Tape<S>::Op::kGatherRows, a.id, -1, std::move(out), index);
}

template <typename S>
Tensor<S> scatter_add_rows(Tensor<S> src, const std::vector<int>& index, Eigen::Index out_rows) {
  const auto& sv = src.value();
  if (static_cast<Eigen::Index>(index.size()) != sv.rows())
    throw ShapeError(strfmt("scatter_add_rows: %zu indices for %ld source rows", index.size(),
                            static_cast<long>(sv.rows())));
  Mat<S> out = Mat<S>::Zero(out_rows, sv.cols());
  for (size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= out_rows)
      throw ShapeError(strfmt("scatter_add_rows: index %d out of range [0, %ld)", index[k],
                              static_cast<long>(out_rows)));
    out.row(index[k]) += sv.row(static_cast<Eigen::Index>(k));
  }
  return src.tape->emplace(Tape<S>::Op::kScatterAddRows, src.id, -1, std::move(out), index);
}

// --- compositions of the primitives above (no dedicated backward rules) ---

template <typename S>
Tensor<S> scale(Tensor<S> a, S factor) {
  return mul(a, a.tape->constant(a.rows(), a.cols(), factor));
}

template <typename S>
Tensor<S> sub(Tensor<S> a, Tensor<S> b) {
  return add(a, scale(b, S(-1)));
}

template <typename S>
Tensor<S> minimum(Tensor<S> a, Tensor<S> b) {
  // min(a, b) = a - relu(a - b)
  return sub(a, relu(sub(a, b)));
}

// Elementwise clamp to [lo, hi]: lo + relu(x - lo) - relu(x - hi).
template <typename S>
Tensor<S> clamp(Tensor<S> x, S lo, S hi) {
  Tensor<S> lo_c = x.tape->constant(x.rows(), x.cols(), lo);
  Tensor<S> hi_c = x.tape->constant(x.rows(), x.cols(), hi);
  return sub(add(lo_c, relu(sub(x, lo_c))), relu(sub(x, hi_c)));
}

}  // namespace teamrl
