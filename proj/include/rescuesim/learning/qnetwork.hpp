#pragma once

// Convolutional Q-network: 6x6 input -> conv 3x3x20 -> conv 2x2x40 -> FC 180 -> heads x actions.
// Plain doubles, hand-written backpropagation.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rescuesim/rng.hpp"

namespace rescuesim::learning {

constexpr std::size_t kPlaneSide = 6;
constexpr std::size_t kPlaneSize = kPlaneSide * kPlaneSide;
using Plane = std::array<double, kPlaneSize>;

enum class OutputActivation : std::uint8_t { linear = 0, relu = 1 };

class QNetwork {
 public:
  static constexpr std::size_t kConv1Filters = 20, kConv1K = 3, kConv1Out = 4;
  static constexpr std::size_t kConv2Filters = 40, kConv2K = 2, kConv2Out = 3;
  static constexpr std::size_t kFlat = kConv2Filters * kConv2Out * kConv2Out;  // 360
  static constexpr std::size_t kHidden = 180;

  QNetwork(std::size_t heads, std::size_t actions, OutputActivation out = OutputActivation::linear);

  /// He-uniform weights, zero biases.
  void initialize(Rng& rng);

  std::size_t heads() const { return heads_; }
  std::size_t actions() const { return actions_; }
  std::size_t outputs() const { return heads_ * actions_; }
  OutputActivation output_activation() const { return out_act_; }

  /// Q-values, head-major: q[h * actions + a].
  std::vector<double> forward(const Plane& x) const;
  std::vector<double> forward(std::span<const double> x) const;  // throws on size != 36

  /// Adds d(loss)/d(theta) for loss = sum over (head, action, target) of (target - Q)^2 at
  /// one input, and returns the loss.
  struct Target {
    std::size_t head;
    std::size_t action;
    double value;
  };
  double accumulate_gradient(const Plane& x, std::span<const Target> targets, std::vector<double>& grad) const;

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  /// Versioned binary checkpoint.
  void save(std::ostream& os) const;
  static QNetwork load(std::istream& is);

  // Parameter layout, exposed for the independent reference implementation in tests.
  std::size_t conv1_w(std::size_t f, std::size_t i, std::size_t j) const { return (f * kConv1K + i) * kConv1K + j; }
  std::size_t conv1_b(std::size_t f) const { return c1b_ + f; }
  std::size_t conv2_w(std::size_t f, std::size_t c, std::size_t i, std::size_t j) const {
    return c2w_ + ((f * kConv1Filters + c) * kConv2K + i) * kConv2K + j;
  }
  std::size_t conv2_b(std::size_t f) const { return c2b_ + f; }
  std::size_t fc1_w(std::size_t o, std::size_t i) const { return f1w_ + o * kFlat + i; }
  std::size_t fc1_b(std::size_t o) const { return f1b_ + o; }
  std::size_t fc2_w(std::size_t o, std::size_t i) const { return f2w_ + o * kHidden + i; }
  std::size_t fc2_b(std::size_t o) const { return f2b_ + o; }

 private:
  struct Activations {
    std::vector<double> a1;  // 20 x 4 x 4, post ReLU
    std::vector<double> a2;  // 40 x 3 x 3 = flat 360, post ReLU
    std::vector<double> a3;  // 180, post ReLU
    std::vector<double> z4;  // outputs before activation
  };
  void run(const Plane& x, Activations& act) const;

  std::size_t heads_, actions_;
  OutputActivation out_act_;
  std::size_t c1b_, c2w_, c2b_, f1w_, f1b_, f2w_, f2b_;
  std::vector<double> params_;
};

}  // namespace rescuesim::learning
