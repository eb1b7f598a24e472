#pragma once

#include <cstdint>
#include <vector>

#include "evseg/error.hpp"
#include "evseg/label_map.hpp"

namespace evseg {

enum class MiouPolicy {
  // Mean over all C classes; a class absent from truth and prediction scores 0.
  AllClasses,
  // Mean over classes present in truth or prediction only.
  ExcludeAbsent,
};

struct MiouResult {
  std::vector<double> iou;      // per class, TP / max(1, TP + FP + FN)
  std::vector<bool> present;    // class appears in truth or prediction
  double mean = 0.0;
};

// counts[g][p]: pixels with ground truth g predicted as p. Ignore pixels in the
// truth map are never counted.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::uint32_t num_classes) : num_classes_(num_classes), counts_(std::size_t{num_classes} * num_classes, 0) {
    if (num_classes == 0 || num_classes >= kIgnoreId) throw Error(Errc::InvalidArgument, "bad class count");
  }

  std::uint32_t num_classes() const noexcept { return num_classes_; }
  std::uint64_t at(std::uint32_t truth, std::uint32_t pred) const { return counts_[std::size_t{truth} * num_classes_ + pred]; }

  std::uint64_t total() const noexcept {
    std::uint64_t n = 0;
    for (auto c : counts_) n += c;
    return n;
  }

  std::uint64_t trace() const noexcept {
    std::uint64_t n = 0;
    for (std::uint32_t c = 0; c < num_classes_; ++c) n += at(c, c);
    return n;
  }

  void add(std::uint8_t truth, std::uint8_t pred) {
    if (truth == kIgnoreId) return;
    if (truth >= num_classes_) throw Error(Errc::BadClassId, "truth class " + std::to_string(truth));
    if (pred >= num_classes_) throw Error(Errc::BadClassId, "predicted class " + std::to_string(pred));
    ++counts_[std::size_t{truth} * num_classes_ + pred];
  }

  // Validates the whole pair before counting, so a failed call leaves the matrix unchanged.
  void accumulate(const LabelMap& truth, const LabelMap& pred) {
    if (truth.geometry != pred.geometry) throw Error(Errc::GeometryMismatch, "truth and prediction differ in size");
    truth.validate(num_classes_);
    for (const auto p : pred.data) {
      if (p >= num_classes_) throw Error(Errc::BadClassId, "predicted class " + std::to_string(p));
    }
    for (std::size_t i = 0; i < truth.data.size(); ++i) {
      if (truth.data[i] != kIgnoreId) ++counts_[std::size_t{truth.data[i]} * num_classes_ + pred.data[i]];
    }
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
    if (other.num_classes_ != num_classes_) throw Error(Errc::InvalidArgument, "class count mismatch");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::uint32_t num_classes_;
  std::vector<std::uint64_t> counts_;
};

inline double accuracy(const ConfusionMatrix& cm) {
  const auto n = cm.total();
  if (n == 0) throw Error(Errc::EmptyEvaluation, "no labeled pixels");
  return static_cast<double>(cm.trace()) / static_cast<double>(n);
}

inline MiouResult miou(const ConfusionMatrix& cm, MiouPolicy policy = MiouPolicy::AllClasses) {
  if (cm.total() == 0) throw Error(Errc::EmptyEvaluation, "no labeled pixels");
  const std::uint32_t C = cm.num_classes();
  MiouResult r;
  r.iou.assign(C, 0.0);
  r.present.assign(C, false);
  double sum = 0.0;
  std::uint32_t used = 0;
  for (std::uint32_t c = 0; c < C; ++c) {
    std::uint64_t row = 0, col = 0;
    for (std::uint32_t k = 0; k < C; ++k) {
      row += cm.at(c, k);
      col += cm.at(k, c);
    }
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t uni = row + col - tp;
    r.present[c] = uni > 0;
    r.iou[c] = static_cast<double>(tp) / static_cast<double>(uni > 0 ? uni : 1);
    if (policy == MiouPolicy::AllClasses || r.present[c]) {
      sum += r.iou[c];
      ++used;
    }
  }
  r.mean = sum / static_cast<double>(used);
  return r;
}

}  // namespace evseg
