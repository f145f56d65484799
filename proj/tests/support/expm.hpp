#pragma once

// Small dense matrix exponential (scaling-and-squaring with Pade(6)), used as
// the brute-force linear-ODE oracle for solver accuracy checks. Test-only.

#include <cmath>
#include <vector>

namespace testsupport {

class Mat {
 public:
  Mat() = default;
  Mat(int n, int m) : n_(n), m_(m), d_(n * m, 0.0) {}
  static Mat identity(int n) {
    Mat I(n, n);
    for (int i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
  }
  double& operator()(int i, int j) { return d_[i * m_ + j]; }
  double operator()(int i, int j) const { return d_[i * m_ + j]; }
  int rows() const { return n_; }
  int cols() const { return m_; }

  Mat operator*(const Mat& o) const {
    Mat r(n_, o.m_);
    for (int i = 0; i < n_; ++i)
      for (int k = 0; k < m_; ++k) {
        double a = (*this)(i, k);
        if (a == 0.0) continue;
        for (int j = 0; j < o.m_; ++j) r(i, j) += a * o(k, j);
      }
    return r;
  }
  Mat operator+(const Mat& o) const {
    Mat r = *this;
    for (size_t i = 0; i < d_.size(); ++i) r.d_[i] += o.d_[i];
    return r;
  }
  Mat operator-(const Mat& o) const {
    Mat r = *this;
    for (size_t i = 0; i < d_.size(); ++i) r.d_[i] -= o.d_[i];
    return r;
  }
  Mat scaled(double s) const {
    Mat r = *this;
    for (double& v : r.d_) v *= s;
    return r;
  }
  double norm_inf() const {
    double best = 0.0;
    for (int i = 0; i < n_; ++i) {
      double row = 0.0;
      for (int j = 0; j < m_; ++j) row += std::abs((*this)(i, j));
      best = std::max(best, row);
    }
    return best;
  }

  // Gaussian elimination solve A X = B (A square).
  static Mat solve(Mat a, Mat b) {
    int n = a.rows();
    for (int k = 0; k < n; ++k) {
      int p = k;
      for (int i = k + 1; i < n; ++i)
        if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
      if (p != k)
        for (int j = 0; j < n; ++j) {
          std::swap(a(k, j), a(p, j));
        }
      if (p != k)
        for (int j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(p, j));
      double inv = 1.0 / a(k, k);
      for (int i = k + 1; i < n; ++i) {
        double f = a(i, k) * inv;
        for (int j = k; j < n; ++j) a(i, j) -= f * a(k, j);
        for (int j = 0; j < b.cols(); ++j) b(i, j) -= f * b(k, j);
      }
    }
    for (int i = n - 1; i >= 0; --i) {
      for (int j = 0; j < b.cols(); ++j) {
        double s = b(i, j);
        for (int k2 = i + 1; k2 < n; ++k2) s -= a(i, k2) * b(k2, j);
        b(i, j) = s / a(i, i);
      }
    }
    return b;
  }

 private:
  int n_ = 0, m_ = 0;
  std::vector<double> d_;
};

inline Mat expm(const Mat& a) {
  int n = a.rows();
  double norm = a.norm_inf();
  int squarings = 0;
  Mat as = a;
  if (norm > 0.5) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / 0.5))));
    as = a.scaled(std::pow(2.0, -squarings));
  }
  // Pade(6,6) approximant; c_k = c_{k-1} * (p-k+1) / ((2p-k+1) * k).
  const int p = 6;
  double c[p + 1];
  c[0] = 1.0;
  for (int k = 1; k <= p; ++k) c[k] = c[k - 1] * (p - k + 1) / (double((2 * p - k + 1)) * k);
  Mat x = Mat::identity(n);
  Mat num = Mat::identity(n).scaled(c[0]);
  Mat den = Mat::identity(n).scaled(c[0]);
  double sign = -1.0;
  for (int k = 1; k <= p; ++k) {
    x = x * as;
    num = num + x.scaled(c[k]);
    den = den + x.scaled(sign * c[k]);
    sign = -sign;
  }
  Mat r = Mat::solve(den, num);
  for (int s = 0; s < squarings; ++s) r = r * r;
  return r;
}

}  // namespace testsupport
