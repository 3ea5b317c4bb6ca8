#include "impact/kernel_system.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "impact/errors.hpp"

namespace impact {

struct BlockToeplitzSystem::Impl {
  Eigen::MatrixXd matrix;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  Eigen::LDLT<Eigen::MatrixXd> normal;
  double ridge = 0.0;
};

BlockToeplitzSystem::BlockToeplitzSystem(std::size_t blocks, std::size_t lags, const Coefficient& coefficient,
                                         const SolverOptions& options)
    : blocks_(blocks), lags_(lags), impl_(std::make_unique<Impl>()) {
  if (blocks == 0 || lags == 0) throw Error("empty calibration system");
  const auto n = static_cast<Eigen::Index>(size());
  auto& m = impl_->matrix;
  m.resize(n, n);
  for (std::size_t rb = 0; rb < blocks; ++rb) {
    for (std::size_t cb = 0; cb < blocks; ++cb) {
      // Each block is Toeplitz: evaluate every diagonal once.
      std::vector<double> diag(2 * lags - 1);
      for (std::size_t d = 0; d < diag.size(); ++d) {
        diag[d] = coefficient(rb, cb, static_cast<std::ptrdiff_t>(d) - static_cast<std::ptrdiff_t>(lags - 1));
      }
      for (std::size_t i = 0; i < lags; ++i) {
        for (std::size_t j = 0; j < lags; ++j) {
          m(static_cast<Eigen::Index>(rb * lags + i), static_cast<Eigen::Index>(cb * lags + j)) =
              diag[i + lags - 1 - j];
        }
      }
    }
  }
  if (!m.allFinite()) throw Error("calibration system contains non-finite coefficients");

  impl_->ridge = options.ridge;
  if (options.ridge > 0.0) {
    Eigen::MatrixXd nm = m.transpose() * m;
    nm.diagonal().array() += options.ridge;
    impl_->normal.compute(nm);
    condition_ = 1.0 / impl_->normal.rcond();
  } else {
    impl_->lu.compute(m);
    condition_ = 1.0 / impl_->lu.rcond();
  }
  if (!std::isfinite(condition_) || condition_ > options.max_condition) {
    std::ostringstream os;
    os << "calibration system is ill-conditioned: condition estimate " << condition_ << " exceeds "
       << options.max_condition;
    throw IllConditioned(os.str(), condition_);
  }
}

BlockToeplitzSystem::~BlockToeplitzSystem() = default;
BlockToeplitzSystem::BlockToeplitzSystem(BlockToeplitzSystem&&) noexcept = default;
BlockToeplitzSystem& BlockToeplitzSystem::operator=(BlockToeplitzSystem&&) noexcept = default;

std::vector<double> BlockToeplitzSystem::solve(std::span<const double> rhs) const {
  if (rhs.size() != size()) throw Error("right-hand side has the wrong length");
  const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  Eigen::VectorXd x;
  if (impl_->ridge > 0.0) {
    x = impl_->normal.solve(impl_->matrix.transpose() * b);
  } else {
    x = impl_->lu.solve(b);
  }
  return {x.data(), x.data() + x.size()};
}

std::vector<double> BlockToeplitzSystem::apply(std::span<const double> x) const {
  if (x.size() != size()) throw Error("vector has the wrong length");
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd y = impl_->matrix * v;
  return {y.data(), y.data() + y.size()};
}

}  // namespace impact
