#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lts/rng.hpp"

namespace lts {

// Soft win/loss counts for one cluster arm. Decay makes them non-integral.
struct ArmState {
  double wins = 0.0;
  double losses = 0.0;

  friend bool operator==(const ArmState&, const ArmState&) = default;
};

struct BanditConfig {
  double alpha = 1.0;
  double beta = 1.0;
  /// Multiplicative decay applied to every arm after each update, in (0, 1).
  double delta = 0.99;

  void validate() const;
};

struct BanditState {
  std::vector<ArmState> arms;
  std::uint64_t round = 0;

  BanditState() = default;
  explicit BanditState(std::size_t k) : arms(k) {}
};

/// Source of Beta(a, b) draws; tests inject fixed values through this.
using BetaDraw = std::function<double(double a, double b)>;

inline BetaDraw beta_draw_from(Rng& rng) {
  return [&rng](double a, double b) { return rng.beta(a, b); };
}

/// Thompson draw over eligible arms; returns the argmax, lowest index on ties.
/// An empty `eligible` mask means every arm is eligible. Draws are taken for
/// eligible arms only, in index order. Throws ValidationError when no arm is
/// eligible.
std::size_t select_arm(const BanditState& state, const BanditConfig& cfg, const BetaDraw& draw,
                       const std::vector<bool>& eligible = {});

/// Increments wins or losses of `arm`, then decays every arm by delta.
void update(BanditState& state, std::size_t arm, bool won, const BanditConfig& cfg);

}  // namespace lts
