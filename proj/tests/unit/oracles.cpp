#include "oracles.hpp"

#include <cmath>
#include <random>

namespace oracle {

Mat from(const ltn::Matrix& m) {
  Mat out(m.rows(), Vec(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

ltn::Matrix to_matrix(const Mat& m) {
  ltn::Matrix out(m.size(), m.empty() ? 0 : m[0].size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j) out(i, j) = static_cast<double>(m[i][j]);
  return out;
}

Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.size(), Vec(b.empty() ? 0 : b[0].size(), 0.0L));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < out[i].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

Vec softmax(const Vec& v) {
  long double total = 0.0L;
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) total += std::exp(v[i]);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i]) / total;
  return out;
}

long double dot(const Vec& a, const Vec& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

long double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

long double cosine(const Vec& a, const Vec& b) { return dot(a, b) / (norm(a) * norm(b)); }

long double info_nce(const Vec& pos_sims, const Vec& neg_sims, bool neg_only) {
  long double num = 0.0L, den = 0.0L;
  for (long double s : pos_sims) num += std::exp(s);
  for (long double s : neg_sims) den += std::exp(s);
  if (!neg_only) den += num;
  return -std::log(num / den);
}

Mat gram_schmidt(const Mat& a) {
  const std::size_t n = a.size(), m = a[0].size();
  Mat q(n, Vec(m, 0.0L));
  for (std::size_t j = 0; j < m; ++j) {
    Vec v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a[i][j];
    Vec w = v;
    for (std::size_t k = 0; k < j; ++k) {
      long double c = 0.0L;
      for (std::size_t i = 0; i < n; ++i) c += q[i][k] * v[i];
      for (std::size_t i = 0; i < n; ++i) w[i] -= c * q[i][k];
    }
    const long double len = norm(w);
    for (std::size_t i = 0; i < n; ++i) q[i][j] = w[i] / len;
  }
  return q;
}

ltn::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  ltn::Matrix out(rows, cols);
  for (double& v : out.data()) v = n(rng);
  return out;
}

}  // namespace oracle
