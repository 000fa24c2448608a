#pragma once

#include <cmath>
#include <vector>

#include "teamrl/params.hpp"

namespace teamrl {

// Adam with bias correction. Moment matrices align with the ParamStore;
// step_count advances by exactly one per apply.
template <typename Scalar>
struct AdamState {
  std::vector<Mat<Scalar>> first_moment;
  std::vector<Mat<Scalar>> second_moment;
  int64_t step_count = 0;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);

  static AdamState init(const ParamStore<Scalar>& params) {
    AdamState s;
    s.first_moment.reserve(static_cast<size_t>(params.size()));
    s.second_moment.reserve(static_cast<size_t>(params.size()));
    for (int i = 0; i < params.size(); ++i) {
      const auto& v = params.value(i);
      s.first_moment.push_back(Mat<Scalar>::Zero(v.rows(), v.cols()));
      s.second_moment.push_back(Mat<Scalar>::Zero(v.rows(), v.cols()));
    }
    return s;
  }
};

template <typename Scalar>
void adam_step(ParamStore<Scalar>& params, const std::vector<Mat<Scalar>>& grads,
               AdamState<Scalar>& state, Scalar lr) {
  if (!(lr > Scalar(0))) throw Error("adam_step: learning rate must be positive");
  if (static_cast<int>(grads.size()) != params.size() ||
      static_cast<int>(state.first_moment.size()) != params.size())
    throw Error("adam_step: parameter/gradient/state size mismatch");
  state.step_count += 1;
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, static_cast<Scalar>(state.step_count));
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, static_cast<Scalar>(state.step_count));
  for (int i = 0; i < params.size(); ++i) {
    const Mat<Scalar>& g = grads[static_cast<size_t>(i)];
    if (!g.allFinite())
      throw Error(strfmt("adam_step: non-finite gradient for parameter '%s'",
                         params.name(i).c_str()));
    Mat<Scalar>& m = state.first_moment[static_cast<size_t>(i)];
    Mat<Scalar>& v = state.second_moment[static_cast<size_t>(i)];
    m = state.beta1 * m + (Scalar(1) - state.beta1) * g;
    v.array() = state.beta2 * v.array() + (Scalar(1) - state.beta2) * g.array().square();
    params.value(i).array() -=
        lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  }
}

}  // namespace teamrl
