#pragma once

#include <span>
#include <vector>

#include "cantus/neural/tensor.hpp"

namespace cantus::nn {

// Binary ops accept b with the same shape as a, a 1 x cols row (broadcast over
// rows), or a 1x1 scalar.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
/// Subgradient 0 at and below zero.
Tensor relu(const Tensor& a);
Tensor silu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
/// Subgradient 0 at zero.
Tensor abs(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// frames x 1 per-row sums.
Tensor row_sum(const Tensor& a);

Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count);
Tensor slice_rows(const Tensor& a, Eigen::Index start, Eigen::Index count);
/// out[t] = a[t - offset], zero where t - offset is out of range.
Tensor shift_rows(const Tensor& a, Eigen::Index offset);
/// Rows of `table` selected by ids.
Tensor embedding(const Tensor& table, std::span<const int> ids);
Tensor log_softmax(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }
inline Tensor operator-(const Tensor& a) { return scale(a, -1.0); }

}  // namespace cantus::nn
