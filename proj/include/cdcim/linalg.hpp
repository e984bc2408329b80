// Copyright 2026 The cdcim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Small dense LU with partial pivoting. Networks in this library have a few
// dozen nodes at most, so a dense row-major factorization is the whole story.

#include "cdcim/common.hpp"

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace cdcim {

template <AnalogScalar Scalar>
class DenseMatrix {
public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, Scalar(0)) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Scalar& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Scalar& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Scalar> data_;
};

template <AnalogScalar Scalar>
class DenseLu {
public:
  /// Relative pivot threshold below which a double-precision system is
  /// declared singular. Rational systems are singular only on an exact zero.
  static constexpr double kSingularTolerance = 1e-13;

  explicit DenseLu(DenseMatrix<Scalar> a) : lu_(std::move(a)), perm_(lu_.rows()) {
    const std::size_t n = lu_.rows();
    if (lu_.cols() != n) throw SolverError("LU needs a square matrix");
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;

    double scale = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) scale = std::max(scale, to_double(abs_value(lu_(r, c))));

    for (std::size_t k = 0; k < n; ++k) {
      std::size_t pivot = k;
      Scalar best = abs_value(lu_(k, k));
      for (std::size_t r = k + 1; r < n; ++r) {
        Scalar cand = abs_value(lu_(r, k));
        if (best < cand) {
          best = cand;
          pivot = r;
        }
      }
      if (is_singular(best, scale)) throw SolverError("singular charge-redistribution system (floating island?)");
      if (pivot != k) {
        for (std::size_t c = 0; c < n; ++c) std::swap(lu_(k, c), lu_(pivot, c));
        std::swap(perm_[k], perm_[pivot]);
      }
      for (std::size_t r = k + 1; r < n; ++r) {
        if (lu_(r, k) == Scalar(0)) continue;
        Scalar f = lu_(r, k) / lu_(k, k);
        lu_(r, k) = f;
        for (std::size_t c = k + 1; c < n; ++c) lu_(r, c) -= f * lu_(k, c);
      }
    }
  }

  std::size_t size() const { return lu_.rows(); }

  std::vector<Scalar> solve(std::span<const Scalar> b) const {
    const std::size_t n = lu_.rows();
    if (b.size() != n) throw SolverError("right-hand side has the wrong length");
    std::vector<Scalar> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      Scalar s = b[perm_[i]];
      for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
      x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      Scalar s = x[i];
      for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
      x[i] = s / lu_(i, i);
    }
    return x;
  }

private:
  static bool is_singular(const Scalar& pivot_abs, double scale) {
    if constexpr (std::is_same_v<Scalar, double>) {
      return !(pivot_abs > kSingularTolerance * std::max(scale, 1e-300));
    } else {
      return pivot_abs == Scalar(0);
    }
  }

  DenseMatrix<Scalar> lu_;
  std::vector<std::size_t> perm_;
};

}  // namespace cdcim
