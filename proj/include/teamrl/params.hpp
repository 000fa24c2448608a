#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "teamrl/rng.hpp"
#include "teamrl/tensor.hpp"

namespace teamrl {

// Named parameter matrices in stable creation order. The order defines the
// checkpoint layout and the Adam state alignment.
template <typename Scalar>
class ParamStore {
 public:
  int add(std::string name, Mat<Scalar> value) {
    if (index_.count(name) > 0) throw Error(strfmt("parameter '%s' already exists", name.c_str()));
    const int id = static_cast<int>(values_.size());
    index_.emplace(name, id);
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return id;
  }

  int index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error(strfmt("unknown parameter '%s'", name.c_str()));
    return it->second;
  }

  int size() const { return static_cast<int>(values_.size()); }
  const std::string& name(int i) const { return names_.at(static_cast<size_t>(i)); }
  const Mat<Scalar>& value(int i) const { return values_.at(static_cast<size_t>(i)); }
  Mat<Scalar>& value(int i) { return values_.at(static_cast<size_t>(i)); }
  const Mat<Scalar>& value(const std::string& name) const { return value(index_of(name)); }
  Mat<Scalar>& value(const std::string& name) { return value(index_of(name)); }

  int64_t element_count() const {
    int64_t n = 0;
    for (const auto& v : values_) n += static_cast<int64_t>(v.size());
    return n;
  }

  template <typename Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    for (int i = 0; i < size(); ++i) out.add(names_[static_cast<size_t>(i)], values_[static_cast<size_t>(i)].template cast<Other>());
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Mat<Scalar>> values_;
  std::unordered_map<std::string, int> index_;
};

// Affine layer parameters: weight uniform in +-sqrt(1/fan_in) (keeps early
// logits near uniform), bias zero. Elements drawn in storage order.
template <typename Scalar>
void add_linear(ParamStore<Scalar>& store, const std::string& prefix, int in_dim, int out_dim,
                RngStream& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(in_dim));
  Mat<Scalar> w(in_dim, out_dim);
  for (Eigen::Index i = 0; i < w.size(); ++i)
    w.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
  store.add(prefix + "/weight", std::move(w));
  store.add(prefix + "/bias", Mat<Scalar>::Zero(1, out_dim));
}

// Parameters lifted onto a tape as external-storage leaves, aligned with
// store order. Valid while both the tape and the store stay alive.
template <typename Scalar>
struct BoundParams {
  const ParamStore<Scalar>* store = nullptr;
  std::vector<Tensor<Scalar>> leaves;

  static BoundParams bind(Tape<Scalar>& tape, const ParamStore<Scalar>& store) {
    BoundParams out;
    out.store = &store;
    out.leaves.reserve(static_cast<size_t>(store.size()));
    for (int i = 0; i < store.size(); ++i) out.leaves.push_back(tape.leaf_ref(&store.value(i)));
    return out;
  }

  Tensor<Scalar> operator[](int i) const { return leaves.at(static_cast<size_t>(i)); }
  Tensor<Scalar> operator[](const std::string& name) const {
    return leaves.at(static_cast<size_t>(store->index_of(name)));
  }
};

}  // namespace teamrl
