#include "lts/bandit.hpp"

#include <cmath>
#include <string>

#include "lts/errors.hpp"

namespace lts {

void BanditConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("bandit alpha must be > 0");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("bandit beta must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("bandit delta must lie in (0, 1)");
}

std::size_t select_arm(const BanditState& state, const BanditConfig& cfg, const BetaDraw& draw,
                       const std::vector<bool>& eligible) {
  const std::size_t k = state.arms.size();
  if (!eligible.empty() && eligible.size() != k) throw ValidationError("eligibility mask size does not match arm count");
  std::size_t best = k;
  double best_theta = -1.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!eligible.empty() && !eligible[i]) continue;
    const auto& arm = state.arms[i];
    const double theta = draw(cfg.alpha + arm.wins, cfg.beta + arm.losses);
    if (theta > best_theta) {
      best_theta = theta;
      best = i;
    }
  }
  if (best == k) throw ValidationError("no eligible arms to select from");
  return best;
}

void update(BanditState& state, std::size_t arm, bool won, const BanditConfig& cfg) {
  if (arm >= state.arms.size()) {
    throw ValidationError("arm index " + std::to_string(arm) + " out of range for " +
                          std::to_string(state.arms.size()) + " arms");
  }
  if (won) {
    state.arms[arm].wins += 1.0;
  } else {
    state.arms[arm].losses += 1.0;
  }
  for (auto& a : state.arms) {
    a.wins *= cfg.delta;
    a.losses *= cfg.delta;
  }
  ++state.round;
}

}  // namespace lts
