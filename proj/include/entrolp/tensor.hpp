#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "entrolp/errors.hpp"

namespace entrolp {

/// Dense rank-3 array indexed (s, a, b), row-major with b fastest.
/// Small enough at the sizes this library targets that no sparsity or
/// expression machinery is warranted.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int ns, int na, int nb, double fill = 0.0)
      : ns_(ns), na_(na), nb_(nb),
        data_(static_cast<std::size_t>(ns) * na * nb, fill) {
    if (ns <= 0 || na <= 0 || nb <= 0)
      throw SolverError(ErrorCode::ShapeMismatch, "tensor dims must be positive");
  }

  int ns() const noexcept { return ns_; }
  int na() const noexcept { return na_; }
  int nb() const noexcept { return nb_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(int s, int a, int b) { return data_[index(s, a, b)]; }
  double at(int s, int a, int b) const { return data_[index(s, a, b)]; }

  std::span<double> state(int s) {
    return {data_.data() + static_cast<std::size_t>(s) * na_ * nb_,
            static_cast<std::size_t>(na_) * nb_};
  }
  std::span<const double> state(int s) const {
    return {data_.data() + static_cast<std::size_t>(s) * na_ * nb_,
            static_cast<std::size_t>(na_) * nb_};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool same_shape(const Tensor3& other) const noexcept {
    return ns_ == other.ns_ && na_ == other.na_ && nb_ == other.nb_;
  }

  friend bool operator==(const Tensor3& x, const Tensor3& y) {
    return x.ns_ == y.ns_ && x.na_ == y.na_ && x.nb_ == y.nb_ &&
           x.data_ == y.data_;
  }

 private:
  std::size_t index(int s, int a, int b) const noexcept {
    return (static_cast<std::size_t>(s) * na_ + a) * nb_ + b;
  }

  int ns_ = 0, na_ = 0, nb_ = 0;
  std::vector<double> data_;
};

/// Neumaier-compensated sum. Fixed-point iterates accumulate rounding and
/// the marginal sums feed logarithms, so the cheap compensation is used for
/// every probability-mass reduction in the library.
inline double compensated_sum(std::span<const double> values) {
  double sum = 0.0, comp = 0.0;
  for (double v : values) {
    double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

class CompensatedAccumulator {
 public:
  void add(double v) {
    double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

inline double l2_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw SolverError(ErrorCode::ShapeMismatch, "l2_distance length mismatch");
  CompensatedAccumulator acc;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    acc.add(d * d);
  }
  return std::sqrt(acc.value());
}

inline double l1_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw SolverError(ErrorCode::ShapeMismatch, "l1_distance length mismatch");
  CompensatedAccumulator acc;
  for (std::size_t i = 0; i < x.size(); ++i) acc.add(std::abs(x[i] - y[i]));
  return acc.value();
}

}  // namespace entrolp
