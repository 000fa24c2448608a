#include "teamrl/rollout.hpp"

#include <cmath>

namespace teamrl {

AdvantageResult compute_advantages(const RolloutBuffer& buffer, int n_step, bool normalize) {
  if (n_step < 1) throw Error("compute_advantages: n_step must be >= 1");
  const int t_max = buffer.steps;
  AdvantageResult out;
  out.returns.resize(t_max);
  out.advantages_raw.resize(t_max);

  for (int t = 0; t < t_max; ++t) {
    double g = 0.0;
    bool hit_done = false;
    int k = 0;
    for (; k < n_step && t + k < t_max; ++k) {
      g += static_cast<double>(buffer.rewards(t + k));
      if (buffer.done[static_cast<size_t>(t + k)] != 0) {
        hit_done = true;
        ++k;
        break;
      }
    }
    if (!hit_done) {
      const int boot = t + k;
      g += boot < t_max ? static_cast<double>(buffer.values(boot))
                        : static_cast<double>(buffer.final_value);
    }
    out.returns(t) = g;
    out.advantages_raw(t) = g - static_cast<double>(buffer.values(t));
  }

  out.advantages = out.advantages_raw;
  if (normalize && t_max > 0) {
    const double mean = out.advantages.mean();
    const double var = (out.advantages.array() - mean).square().mean();
    const double sd = std::sqrt(var);
    out.advantages = (out.advantages.array() - mean) / std::max(sd, 1e-8);
  }
  return out;
}

}  // namespace teamrl
