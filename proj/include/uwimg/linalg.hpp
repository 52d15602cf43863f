#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace uwimg {

// Dense row-major symmetric eigensolver (cyclic Jacobi). Small fixed-size
// problems only; the homography path uses n = 9.
struct SymmetricEigen {
  std::vector<double> values;   // ascending
  std::vector<double> vectors;  // row-major, row k = eigenvector for values[k]
};

inline SymmetricEigen eigen_symmetric(const std::vector<double>& a_in,
                                      std::size_t n) {
  if (a_in.size() != n * n)
    throw std::invalid_argument("eigen_symmetric: matrix size mismatch");
  std::vector<double> a = a_in;
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  auto off = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a[i * n + j] * a[i * n + j];
    return s;
  };

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps && off() > 1e-24; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double tau = (aqq - app) / (2.0 * apq);
        double t;
        if (tau >= 0)
          t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
        else
          t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n * n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::size_t best = i;
    for (std::size_t j = i + 1; j < n; ++j)
      if (a[order[j] * n + order[j]] < a[order[best] * n + order[best]])
        best = j;
    std::swap(order[i], order[best]);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t col = order[k];
    out.values[k] = a[col * n + col];
    for (std::size_t i = 0; i < n; ++i) out.vectors[k * n + i] = v[i * n + col];
  }
  return out;
}

}  // namespace uwimg
