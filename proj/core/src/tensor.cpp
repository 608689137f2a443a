#include "mbrsep/tensor.hpp"

#include <cmath>
#include <sstream>

namespace mbrsep {

std::string shape_str(const Shape4& s) {
  std::ostringstream os;
  os << "(" << s[0] << ", " << s[1] << ", " << s[2] << ", " << s[3] << ")";
  return os.str();
}

namespace {
template <typename T>
void require_finite_impl(std::span<const T> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw std::runtime_error(std::string(what) + ": non-finite value at flat index " +
                               std::to_string(i));
    }
  }
}
}  // namespace

void require_finite(std::span<const float> values, const char* what) {
  require_finite_impl(values, what);
}
void require_finite(std::span<const double> values, const char* what) {
  require_finite_impl(values, what);
}

template <typename T>
bool Tensor<T>::all_finite() const {
  for (const T& v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename T>
void Tensor<T>::require_finite(const char* what) const {
  mbrsep::require_finite(flat(), what);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace mbrsep
