#pragma once

#include <cmath>
#include <functional>

#include "teamrl/params.hpp"

namespace teamrl {

// Builds a scalar loss on the given tape from bound parameters.
template <typename Scalar>
using LossBuilder = std::function<Tensor<Scalar>(Tape<Scalar>&, const BoundParams<Scalar>&)>;

// Central-difference gradient check against the tape. Returns the max over
// all parameter elements of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// The numeric side only reruns the forward value, never the tape's backward.
template <typename Scalar>
Scalar finite_diff_check(const LossBuilder<Scalar>& loss, ParamStore<Scalar>& params,
                         Scalar step) {
  if (!(step > Scalar(0))) throw Error("finite_diff_check: step must be positive");

  const auto loss_value = [&]() -> Scalar {
    Tape<Scalar> tape;
    BoundParams<Scalar> bound = BoundParams<Scalar>::bind(tape, params);
    const Scalar v = loss(tape, bound).value()(0, 0);
    if (!std::isfinite(static_cast<double>(v)))
      throw Error("finite_diff_check: loss is not finite");
    return v;
  };

  std::vector<Mat<Scalar>> analytic;
  {
    Tape<Scalar> tape;
    BoundParams<Scalar> bound = BoundParams<Scalar>::bind(tape, params);
    Tensor<Scalar> out = loss(tape, bound);
    if (!std::isfinite(static_cast<double>(out.value()(0, 0))))
      throw Error("finite_diff_check: loss is not finite");
    tape.backward(out);
    analytic.reserve(static_cast<size_t>(params.size()));
    for (const auto& leaf : bound.leaves) analytic.push_back(tape.grad_or_zero(leaf));
  }

  Scalar max_rel = Scalar(0);
  for (int p = 0; p < params.size(); ++p) {
    Mat<Scalar>& value = params.value(p);
    for (Eigen::Index k = 0; k < value.size(); ++k) {
      const Scalar saved = value.data()[k];
      value.data()[k] = saved + step;
      const Scalar up = loss_value();
      value.data()[k] = saved - step;
      const Scalar down = loss_value();
      value.data()[k] = saved;
      const Scalar numeric = (up - down) / (Scalar(2) * step);
      const Scalar a = analytic[static_cast<size_t>(p)].data()[k];
      const Scalar denom = std::max({std::abs(a), std::abs(numeric), Scalar(1e-8)});
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace teamrl
