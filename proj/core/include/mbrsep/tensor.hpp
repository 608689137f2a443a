#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mbrsep {

// Axis order everywhere in the engine: (batch, channel, time, frequency).
using Shape4 = std::array<std::int64_t, 4>;

std::string shape_str(const Shape4& s);

// Dense row-major 4-axis array. Values are expected to stay finite; ops
// that can produce or propagate NaN/Inf (loss, optimizer, batch norm)
// check and throw instead of silently continuing.
template <typename T>
class Tensor {
  static_assert(std::is_floating_point_v<T>);

public:
  Tensor() : shape_{0, 0, 0, 0} {}

  explicit Tensor(Shape4 shape) : shape_(shape) {
    for (auto d : shape_) {
      if (d < 0) throw std::invalid_argument("Tensor: negative extent in " + shape_str(shape_));
    }
    data_.assign(static_cast<std::size_t>(numel_of(shape_)), T(0));
  }

  Tensor(Shape4 shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != numel_of(shape_)) {
      throw std::invalid_argument("Tensor: data length " + std::to_string(data_.size()) +
                                  " does not match shape " + shape_str(shape_));
    }
  }

  static Tensor full(Shape4 shape, T value) {
    Tensor t(shape);
    t.fill(value);
    return t;
  }

  const Shape4& shape() const { return shape_; }
  std::int64_t batch() const { return shape_[0]; }
  std::int64_t channels() const { return shape_[1]; }
  std::int64_t time() const { return shape_[2]; }
  std::int64_t freq() const { return shape_[3]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> flat() { return {data_.data(), data_.size()}; }
  std::span<const T> flat() const { return {data_.data(), data_.size()}; }

  std::int64_t index(std::int64_t b, std::int64_t c, std::int64_t t, std::int64_t f) const {
    return ((b * shape_[1] + c) * shape_[2] + t) * shape_[3] + f;
  }
  T& at(std::int64_t b, std::int64_t c, std::int64_t t, std::int64_t f) {
    return data_[static_cast<std::size_t>(index(b, c, t, f))];
  }
  const T& at(std::int64_t b, std::int64_t c, std::int64_t t, std::int64_t f) const {
    return data_[static_cast<std::size_t>(index(b, c, t, f))];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool all_finite() const;

  // Throws std::runtime_error naming `what` if any entry is NaN or Inf.
  void require_finite(const char* what) const;

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::int64_t i = 0; i < numel(); ++i) out.data()[i] = static_cast<U>(data_[i]);
    return out;
  }

  static std::int64_t numel_of(const Shape4& s) { return s[0] * s[1] * s[2] * s[3]; }

private:
  Shape4 shape_;
  std::vector<T> data_;
};

void require_finite(std::span<const float> values, const char* what);
void require_finite(std::span<const double> values, const char* what);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace mbrsep
