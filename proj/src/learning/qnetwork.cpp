#include "rescuesim/learning/qnetwork.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace rescuesim::learning {

namespace {
constexpr char kMagic[4] = {'R', 'S', 'Q', 'N'};
constexpr std::uint32_t kVersion = 1;

inline double relu(double v) { return v > 0.0 ? v : 0.0; }
}  // namespace

QNetwork::QNetwork(std::size_t heads, std::size_t actions, OutputActivation out)
    : heads_(heads), actions_(actions), out_act_(out) {
  if (heads == 0 || actions == 0) throw std::domain_error("QNetwork needs at least one head and one action");
  c1b_ = kConv1Filters * kConv1K * kConv1K;
  c2w_ = c1b_ + kConv1Filters;
  c2b_ = c2w_ + kConv2Filters * kConv1Filters * kConv2K * kConv2K;
  f1w_ = c2b_ + kConv2Filters;
  f1b_ = f1w_ + kHidden * kFlat;
  f2w_ = f1b_ + kHidden;
  f2b_ = f2w_ + outputs() * kHidden;
  params_.assign(f2b_ + outputs(), 0.0);
}

void QNetwork::initialize(Rng& rng) {
  auto fill = [&](std::size_t from, std::size_t count, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) params_[from + i] = rng.uniform(-bound, bound);
  };
  std::fill(params_.begin(), params_.end(), 0.0);
  fill(0, c1b_, kConv1K * kConv1K);
  fill(c2w_, c2b_ - c2w_, kConv1Filters * kConv2K * kConv2K);
  fill(f1w_, f1b_ - f1w_, kFlat);
  fill(f2w_, f2b_ - f2w_, kHidden);
}

void QNetwork::run(const Plane& x, Activations& act) const {
  const auto& p = params_;
  act.a1.assign(kConv1Filters * kConv1Out * kConv1Out, 0.0);
  for (std::size_t f = 0; f < kConv1Filters; ++f) {
    for (std::size_t r = 0; r < kConv1Out; ++r) {
      for (std::size_t c = 0; c < kConv1Out; ++c) {
        double s = p[conv1_b(f)];
        for (std::size_t i = 0; i < kConv1K; ++i) {
          for (std::size_t j = 0; j < kConv1K; ++j) s += p[conv1_w(f, i, j)] * x[(r + i) * kPlaneSide + c + j];
        }
        act.a1[(f * kConv1Out + r) * kConv1Out + c] = relu(s);
      }
    }
  }
  act.a2.assign(kFlat, 0.0);
  for (std::size_t f = 0; f < kConv2Filters; ++f) {
    for (std::size_t r = 0; r < kConv2Out; ++r) {
      for (std::size_t c = 0; c < kConv2Out; ++c) {
        double s = p[conv2_b(f)];
        for (std::size_t ch = 0; ch < kConv1Filters; ++ch) {
          for (std::size_t i = 0; i < kConv2K; ++i) {
            for (std::size_t j = 0; j < kConv2K; ++j) {
              s += p[conv2_w(f, ch, i, j)] * act.a1[(ch * kConv1Out + r + i) * kConv1Out + c + j];
            }
          }
        }
        act.a2[(f * kConv2Out + r) * kConv2Out + c] = relu(s);
      }
    }
  }
  act.a3.assign(kHidden, 0.0);
  for (std::size_t o = 0; o < kHidden; ++o) {
    double s = p[fc1_b(o)];
    const double* w = &p[fc1_w(o, 0)];
    for (std::size_t i = 0; i < kFlat; ++i) s += w[i] * act.a2[i];
    act.a3[o] = relu(s);
  }
  act.z4.assign(outputs(), 0.0);
  for (std::size_t o = 0; o < outputs(); ++o) {
    double s = p[fc2_b(o)];
    const double* w = &p[fc2_w(o, 0)];
    for (std::size_t i = 0; i < kHidden; ++i) s += w[i] * act.a3[i];
    act.z4[o] = s;
  }
}

std::vector<double> QNetwork::forward(const Plane& x) const {
  Activations act;
  run(x, act);
  if (out_act_ == OutputActivation::relu) {
    for (auto& v : act.z4) v = relu(v);
  }
  return act.z4;
}

std::vector<double> QNetwork::forward(std::span<const double> x) const {
  if (x.size() != kPlaneSize) throw std::domain_error("QNetwork input must be a 6x6 plane");
  Plane plane;
  std::copy(x.begin(), x.end(), plane.begin());
  return forward(plane);
}

double QNetwork::accumulate_gradient(const Plane& x, std::span<const Target> targets, std::vector<double>& grad) const {
  if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
  Activations act;
  run(x, act);
  const auto& p = params_;

  std::vector<double> d4(outputs(), 0.0);
  double loss = 0.0;
  for (const auto& t : targets) {
    if (t.head >= heads_ || t.action >= actions_) throw std::domain_error("target outside the output grid");
    const std::size_t o = t.head * actions_ + t.action;
    const double z = act.z4[o];
    const double q = out_act_ == OutputActivation::relu ? relu(z) : z;
    const double err = q - t.value;
    loss += err * err;
    const double dq = 2.0 * err;
    d4[o] += (out_act_ == OutputActivation::relu && z <= 0.0) ? 0.0 : dq;
  }

  std::vector<double> d3(kHidden, 0.0);
  for (std::size_t o = 0; o < outputs(); ++o) {
    if (d4[o] == 0.0) continue;
    grad[fc2_b(o)] += d4[o];
    for (std::size_t i = 0; i < kHidden; ++i) {
      grad[fc2_w(o, i)] += d4[o] * act.a3[i];
      d3[i] += d4[o] * p[fc2_w(o, i)];
    }
  }
  std::vector<double> d2(kFlat, 0.0);
  for (std::size_t o = 0; o < kHidden; ++o) {
    if (act.a3[o] <= 0.0 || d3[o] == 0.0) continue;
    const double g = d3[o];
    grad[fc1_b(o)] += g;
    double* gw = &grad[fc1_w(o, 0)];
    const double* w = &p[fc1_w(o, 0)];
    for (std::size_t i = 0; i < kFlat; ++i) {
      gw[i] += g * act.a2[i];
      d2[i] += g * w[i];
    }
  }
  std::vector<double> d1(act.a1.size(), 0.0);
  for (std::size_t f = 0; f < kConv2Filters; ++f) {
    for (std::size_t r = 0; r < kConv2Out; ++r) {
      for (std::size_t c = 0; c < kConv2Out; ++c) {
        const std::size_t idx = (f * kConv2Out + r) * kConv2Out + c;
        if (act.a2[idx] <= 0.0) continue;
        const double g = d2[idx];
        if (g == 0.0) continue;
        grad[conv2_b(f)] += g;
        for (std::size_t ch = 0; ch < kConv1Filters; ++ch) {
          for (std::size_t i = 0; i < kConv2K; ++i) {
            for (std::size_t j = 0; j < kConv2K; ++j) {
              const std::size_t a = (ch * kConv1Out + r + i) * kConv1Out + c + j;
              grad[conv2_w(f, ch, i, j)] += g * act.a1[a];
              d1[a] += g * p[conv2_w(f, ch, i, j)];
            }
          }
        }
      }
    }
  }
  for (std::size_t f = 0; f < kConv1Filters; ++f) {
    for (std::size_t r = 0; r < kConv1Out; ++r) {
      for (std::size_t c = 0; c < kConv1Out; ++c) {
        const std::size_t idx = (f * kConv1Out + r) * kConv1Out + c;
        if (act.a1[idx] <= 0.0) continue;
        const double g = d1[idx];
        if (g == 0.0) continue;
        grad[conv1_b(f)] += g;
        for (std::size_t i = 0; i < kConv1K; ++i) {
          for (std::size_t j = 0; j < kConv1K; ++j) grad[conv1_w(f, i, j)] += g * x[(r + i) * kPlaneSide + c + j];
        }
      }
    }
  }
  return loss;
}

void QNetwork::save(std::ostream& os) const {
  os.write(kMagic, 4);
  auto put32 = [&](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  put32(kVersion);
  put32(static_cast<std::uint32_t>(heads_));
  put32(static_cast<std::uint32_t>(actions_));
  put32(static_cast<std::uint32_t>(out_act_));
  put32(static_cast<std::uint32_t>(params_.size()));
  os.write(reinterpret_cast<const char*>(params_.data()), static_cast<std::streamsize>(params_.size() * sizeof(double)));
  if (!os) throw std::runtime_error("failed to write checkpoint");
}

QNetwork QNetwork::load(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not a Q-network checkpoint");
  auto get32 = [&] {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is) throw std::runtime_error("truncated checkpoint");
    return v;
  };
  if (get32() != kVersion) throw std::runtime_error("unsupported checkpoint version");
  const auto heads = get32();
  const auto actions = get32();
  const auto act = get32();
  if (act > 1) throw std::runtime_error("bad output activation in checkpoint");
  QNetwork net(heads, actions, static_cast<OutputActivation>(act));
  if (get32() != net.params_.size()) throw std::runtime_error("checkpoint parameter count mismatch");
  is.read(reinterpret_cast<char*>(net.params_.data()), static_cast<std::streamsize>(net.params_.size() * sizeof(double)));
  if (!is) throw std::runtime_error("truncated checkpoint");
  return net;
}

}  // namespace rescuesim::learning
