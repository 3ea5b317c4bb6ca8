#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace impact {

struct SolverOptions {
  /// Tikhonov parameter; 0 solves the square system directly.
  double ridge = 0.0;
  /// Largest accepted condition estimate before IllConditioned is thrown.
  double max_condition = 1e12;
};

/// Dense block-Toeplitz system shared by the propagator and influence-matrix
/// calibrations. Unknowns and equations are laid out block-major: entry
/// (block, k) sits at block * lags + k. The coefficient linking equation
/// (row_block, i) to unknown (col_block, j) is coefficient(row_block,
/// col_block, i - j).
class BlockToeplitzSystem {
 public:
  using Coefficient = std::function<double(std::size_t row_block, std::size_t col_block, std::ptrdiff_t lag)>;

  BlockToeplitzSystem(std::size_t blocks, std::size_t lags, const Coefficient& coefficient,
                      const SolverOptions& options = {});
  ~BlockToeplitzSystem();
  BlockToeplitzSystem(BlockToeplitzSystem&&) noexcept;
  BlockToeplitzSystem& operator=(BlockToeplitzSystem&&) noexcept;

  [[nodiscard]] std::size_t blocks() const { return blocks_; }
  [[nodiscard]] std::size_t lags() const { return lags_; }
  [[nodiscard]] std::size_t size() const { return blocks_ * lags_; }
  /// L1 condition estimate of the factorized matrix.
  [[nodiscard]] double condition() const { return condition_; }

  [[nodiscard]] std::vector<double> solve(std::span<const double> rhs) const;
  /// Matrix-vector product with the unregularized system.
  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const;

 private:
  struct Impl;
  std::size_t blocks_;
  std::size_t lags_;
  double condition_ = 0.0;
  std::unique_ptr<Impl> impl_;
};

}  // namespace impact
