#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace hsx {

using Vector = std::vector<double>;

// Library-wide guard for normalizing near-zero vectors.
inline constexpr double kNormEps = 1e-12;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  // Column copy; columns are strided in row-major storage.
  Vector col(std::size_t c) const;
  void set_col(std::size_t c, std::span<const double> values);

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  Matrix transposed() const;
  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// v / max(||v||, eps). The zero vector maps to itself.
Vector normalize(std::span<const double> v, double eps = kNormEps);

/// max + log(sum(exp(x - max))). Requires a nonempty input.
double stable_log_sum_exp(std::span<const double> logits);

/// Softmax computed through the same max shift as stable_log_sum_exp.
Vector softmax(std::span<const double> logits);

double clamp_unit(double c) noexcept;

/// Seeded generator with a platform-independent draw sequence.
///
/// std::mt19937_64 output is fixed by the standard but the std distributions
/// are not, so every transform from raw bits is done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  // [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // [0, n), unbiased.
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central-difference gradient, (f(p + h e_i) - f(p - h e_i)) / 2h per
/// coordinate. Throws NumericError carrying the coordinate index if f is
/// non-finite at a probe point.
Vector finite_difference_gradient(const ScalarFunction& f, std::span<const double> p,
                                  double h = 1e-5);

/// ||a - b|| / max(||a||, ||b||, floor). Used to compare gradients.
double relative_error(std::span<const double> a, std::span<const double> b,
                      double floor = 1e-12);

}  // namespace hsx
