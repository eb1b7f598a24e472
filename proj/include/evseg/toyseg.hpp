#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "evseg/dataset.hpp"
#include "evseg/detail/binio.hpp"
#include "evseg/error.hpp"
#include "evseg/label_map.hpp"
#include "evseg/repr.hpp"

namespace evseg {

// Per-pixel linear softmax classifier over representation channels.
// logits[c] = sum_f W[c][f] * (x_f - mean_f) / std_f + W[c][F].
class LinearPixelModel {
 public:
  LinearPixelModel() = default;
  LinearPixelModel(std::uint32_t num_classes, std::uint32_t num_features)
      : classes_(num_classes),
        features_(num_features),
        mean_(num_features, 0.0),
        std_(num_features, 1.0),
        weights_(std::size_t{num_classes} * (num_features + 1), 0.0) {
    if (num_classes < 1 || num_features < 1) throw Error(Errc::InvalidArgument, "empty model");
  }

  std::uint32_t num_classes() const noexcept { return classes_; }
  std::uint32_t num_features() const noexcept { return features_; }
  std::uint32_t row_stride() const noexcept { return features_ + 1; }

  std::span<double> weights() noexcept { return weights_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double& weight(std::uint32_t c, std::uint32_t f) { return weights_[std::size_t{c} * row_stride() + f]; }
  double& bias(std::uint32_t c) { return weights_[std::size_t{c} * row_stride() + features_]; }

  std::span<const double> feature_mean() const noexcept { return mean_; }
  std::span<const double> feature_std() const noexcept { return std_; }

  // Zero-variance channels get std = 1.
  void set_normalization(std::vector<double> mean, std::vector<double> std) {
    if (mean.size() != features_ || std.size() != features_) throw Error(Errc::InvalidArgument, "normalization size");
    for (auto& s : std) {
      if (!(s > 0) || !std::isfinite(s)) s = 1.0;
    }
    mean_ = std::move(mean);
    std_ = std::move(std);
  }

  void normalize(const double* raw, double* out) const {
    for (std::uint32_t f = 0; f < features_; ++f) out[f] = (raw[f] - mean_[f]) / std_[f];
  }

  // `x` is already normalized.
  void logits(const double* x, double* out) const {
    for (std::uint32_t c = 0; c < classes_; ++c) {
      const double* w = weights_.data() + std::size_t{c} * row_stride();
      double z = w[features_];
      for (std::uint32_t f = 0; f < features_; ++f) z += w[f] * x[f];
      out[c] = z;
    }
  }

  friend bool operator==(const LinearPixelModel&, const LinearPixelModel&) = default;

 private:
  std::uint32_t classes_ = 0;
  std::uint32_t features_ = 0;
  std::vector<double> mean_;
  std::vector<double> std_;
  std::vector<double> weights_;
};

struct XentResult {
  double loss = 0.0;
  std::vector<double> probs;  // N×C, rows for ignored pixels included
};

// Mean softmax cross-entropy over non-ignored pixels. logits is N×C row-major.
inline XentResult softmax_xent(std::span<const double> logits, std::span<const std::uint8_t> truth,
                               std::uint32_t num_classes) {
  if (num_classes == 0 || logits.size() != truth.size() * num_classes) {
    throw Error(Errc::InvalidArgument, "logits shape does not match labels");
  }
  XentResult r;
  r.probs.resize(logits.size());
  double total = 0.0;
  std::size_t labeled = 0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const double* z = logits.data() + j * num_classes;
    double* p = r.probs.data() + j * num_classes;
    const double zmax = *std::max_element(z, z + num_classes);
    double denom = 0.0;
    for (std::uint32_t c = 0; c < num_classes; ++c) {
      p[c] = std::exp(z[c] - zmax);
      denom += p[c];
    }
    for (std::uint32_t c = 0; c < num_classes; ++c) p[c] /= denom;
    if (truth[j] == kIgnoreId) continue;
    if (truth[j] >= num_classes) throw Error(Errc::BadClassId, std::to_string(truth[j]));
    total += std::log(denom) - (z[truth[j]] - zmax);
    ++labeled;
  }
  if (labeled == 0) throw Error(Errc::AllPixelsIgnored, "");
  r.loss = total / static_cast<double>(labeled);
  return r;
}

inline XentResult softmax_xent(std::span<const double> logits, const LabelMap& truth, std::uint32_t num_classes) {
  return softmax_xent(logits, std::span<const std::uint8_t>(truth.data), num_classes);
}

// Raw (unnormalized) features, N×F row-major, with one label per pixel.
struct PixelBatch {
  std::uint32_t num_features = 0;
  std::vector<double> features;
  std::vector<std::uint8_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

namespace detail {

inline void check_batch(const LinearPixelModel& model, const PixelBatch& batch) {
  if (batch.num_features != model.num_features() || batch.features.size() != batch.size() * batch.num_features) {
    throw Error(Errc::ChannelMismatch, "batch features do not match the model");
  }
}

inline std::vector<double> batch_logits(const LinearPixelModel& model, const PixelBatch& batch) {
  const std::uint32_t F = model.num_features(), C = model.num_classes();
  std::vector<double> x(F);
  std::vector<double> z(batch.size() * C);
  for (std::size_t j = 0; j < batch.size(); ++j) {
    model.normalize(batch.features.data() + j * F, x.data());
    model.logits(x.data(), z.data() + j * C);
  }
  return z;
}

inline double l2_penalty(const LinearPixelModel& model, double l2) {
  if (l2 == 0.0) return 0.0;
  double s = 0.0;
  const auto w = model.weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i % model.row_stride() != model.num_features()) s += w[i] * w[i];
  }
  return 0.5 * l2 * s;
}

}  // namespace detail

// Cross-entropy over the batch plus (l2 / 2) * ||W||^2, biases excluded.
inline double batch_loss(const LinearPixelModel& model, const PixelBatch& batch, double l2) {
  detail::check_batch(model, batch);
  const auto z = detail::batch_logits(model, batch);
  return softmax_xent(z, batch.labels, model.num_classes()).loss + detail::l2_penalty(model, l2);
}

// d(batch_loss)/dW, same layout as model.weights():
//   (1/N) sum_j (p_j - onehot_j) [x_j, 1]^T + l2 * W  (no decay on biases)
inline std::vector<double> loss_gradient(const LinearPixelModel& model, const PixelBatch& batch, double l2,
                                         double* loss_out = nullptr) {
  detail::check_batch(model, batch);
  const std::uint32_t F = model.num_features(), C = model.num_classes(), R = model.row_stride();
  const auto z = detail::batch_logits(model, batch);
  const auto xent = softmax_xent(z, batch.labels, C);

  std::vector<double> grad(model.weights().size(), 0.0);
  std::vector<double> x(F);
  std::size_t labeled = 0;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto y = batch.labels[j];
    if (y == kIgnoreId) continue;
    ++labeled;
    model.normalize(batch.features.data() + j * F, x.data());
    const double* p = xent.probs.data() + j * C;
    for (std::uint32_t c = 0; c < C; ++c) {
      const double d = p[c] - (c == y ? 1.0 : 0.0);
      double* g = grad.data() + std::size_t{c} * R;
      for (std::uint32_t f = 0; f < F; ++f) g[f] += d * x[f];
      g[F] += d;
    }
  }
  const double inv = 1.0 / static_cast<double>(labeled);
  const auto w = model.weights();
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] *= inv;
    if (i % R != F) grad[i] += l2 * w[i];
  }
  if (loss_out) *loss_out = xent.loss + detail::l2_penalty(model, l2);
  return grad;
}

struct TrainConfig {
  double learning_rate = 0.5;
  std::uint32_t steps = 500;
  std::uint32_t batch_pixels = 4096;  // 0 = every labeled pixel each step
  std::uint64_t seed = 0;
  double l2 = 0.0;

  void validate() const {
    if (!(learning_rate > 0)) throw Error(Errc::InvalidArgument, "learning_rate must be > 0");
    if (steps < 1) throw Error(Errc::InvalidArgument, "steps must be >= 1");
    if (!(l2 >= 0)) throw Error(Errc::InvalidArgument, "l2 must be >= 0");
  }
};

struct TrainResult {
  LinearPixelModel model;
  std::vector<double> loss_trace;  // batch loss before each update
};

// Flattens every non-ignored pixel of every sample into one batch.
inline PixelBatch labeled_pixels(const std::vector<Sample>& samples) {
  if (samples.empty()) throw Error(Errc::InvalidArgument, "no training samples");
  PixelBatch all;
  all.num_features = samples.front().tensor.channels();
  for (const auto& s : samples) {
    check_sample(s);
    if (s.tensor.channels() != all.num_features) throw Error(Errc::ChannelMismatch, "samples mix representations");
    const std::uint32_t C = all.num_features;
    for (std::size_t i = 0; i < s.labels.data.size(); ++i) {
      if (s.labels.data[i] == kIgnoreId) continue;
      all.labels.push_back(s.labels.data[i]);
      all.features.insert(all.features.end(), s.tensor.data.begin() + static_cast<std::ptrdiff_t>(i * C),
                          s.tensor.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * C));
    }
  }
  return all;
}

// Plain mini-batch gradient descent. Normalization statistics come from all
// labeled training pixels; minibatches are drawn with replacement from a
// mt19937_64 seeded with config.seed.
inline TrainResult train(LinearPixelModel model, const std::vector<Sample>& samples, const TrainConfig& config) {
  config.validate();
  const PixelBatch all = labeled_pixels(samples);
  if (all.size() == 0) throw Error(Errc::AllPixelsIgnored, "training set has no labeled pixels");
  if (all.num_features != model.num_features()) throw Error(Errc::ChannelMismatch, "model/sample channel mismatch");
  const std::uint32_t F = all.num_features;

  std::vector<double> mean(F, 0.0), var(F, 0.0);
  for (std::size_t j = 0; j < all.size(); ++j) {
    for (std::uint32_t f = 0; f < F; ++f) mean[f] += all.features[j * F + f];
  }
  for (auto& m : mean) m /= static_cast<double>(all.size());
  for (std::size_t j = 0; j < all.size(); ++j) {
    for (std::uint32_t f = 0; f < F; ++f) {
      const double d = all.features[j * F + f] - mean[f];
      var[f] += d * d;
    }
  }
  for (auto& v : var) v = std::sqrt(v / static_cast<double>(all.size()));
  model.set_normalization(std::move(mean), std::move(var));

  std::mt19937_64 rng(config.seed);
  const bool full = config.batch_pixels == 0 || config.batch_pixels >= all.size();
  PixelBatch batch;
  batch.num_features = F;

  TrainResult result;
  result.loss_trace.reserve(config.steps);
  for (std::uint32_t step = 0; step < config.steps; ++step) {
    if (!full) {
      batch.features.resize(std::size_t{config.batch_pixels} * F);
      batch.labels.resize(config.batch_pixels);
      for (std::uint32_t k = 0; k < config.batch_pixels; ++k) {
        const std::size_t j = rng() % all.size();
        batch.labels[k] = all.labels[j];
        std::copy_n(all.features.begin() + static_cast<std::ptrdiff_t>(j * F), F,
                    batch.features.begin() + static_cast<std::ptrdiff_t>(std::size_t{k} * F));
      }
    }
    double loss = 0.0;
    const auto grad = loss_gradient(model, full ? all : batch, config.l2, &loss);
    if (!std::isfinite(loss)) throw Error(Errc::DivergenceDetected, "loss at step " + std::to_string(step));
    result.loss_trace.push_back(loss);
    auto w = model.weights();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config.learning_rate * grad[i];
  }
  result.model = std::move(model);
  return result;
}

// Per-pixel argmax; ties go to the lowest class id.
inline LabelMap predict(const LinearPixelModel& model, const ReprTensor& tensor) {
  if (tensor.channels() != model.num_features()) throw Error(Errc::ChannelMismatch, "tensor channels != model features");
  const std::uint32_t F = model.num_features(), C = model.num_classes();
  LabelMap out(tensor.geometry, 0);
  std::vector<double> x(F), z(C);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    model.normalize(tensor.data.data() + i * F, x.data());
    model.logits(x.data(), z.data());
    std::uint32_t best = 0;
    for (std::uint32_t c = 1; c < C; ++c) {
      if (z[c] > z[best]) best = c;
    }
    out.data[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

// LPM1 checkpoint (little-endian): "LPM1", u16 C, u16 F, F x (f64 mean, f64 std),
// C x (F + 1) f64 weights row-major (bias last in each row).
inline void save_model(std::ostream& out, const LinearPixelModel& model) {
  detail::put_bytes(out, "LPM1", 4);
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(model.num_classes()));
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(model.num_features()));
  for (std::uint32_t f = 0; f < model.num_features(); ++f) {
    detail::put_le<double>(out, model.feature_mean()[f]);
    detail::put_le<double>(out, model.feature_std()[f]);
  }
  for (const double w : model.weights()) detail::put_le<double>(out, w);
  detail::check_sink(out, "LPM1");
}

inline LinearPixelModel load_model(std::istream& in) {
  unsigned char h[8];
  const auto got = detail::read_up_to(in, h, 8);
  if (got >= 4 && std::string_view(reinterpret_cast<const char*>(h), 4) != "LPM1") throw Error(Errc::BadMagic, "expected LPM1");
  if (got < 8) throw Error(Errc::TruncatedRecord, "short LPM1 header");
  LinearPixelModel model(detail::get_le<std::uint16_t>(h + 4), detail::get_le<std::uint16_t>(h + 6));
  const std::uint32_t F = model.num_features();
  std::vector<unsigned char> raw((2 * F + model.weights().size()) * 8);
  if (detail::read_up_to(in, raw.data(), raw.size()) != raw.size()) throw Error(Errc::TruncatedRecord, "short LPM1 body");
  std::vector<double> mean(F), sd(F);
  for (std::uint32_t f = 0; f < F; ++f) {
    mean[f] = detail::get_le<double>(&raw[16 * f]);
    sd[f] = detail::get_le<double>(&raw[16 * f + 8]);
  }
  model.set_normalization(std::move(mean), std::move(sd));
  auto w = model.weights();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = detail::get_le<double>(&raw[16 * F + 8 * i]);
  return model;
}

}  // namespace evseg
