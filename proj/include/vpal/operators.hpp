#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <memory>
#include <vector>

#include "vpal/signal.hpp"

namespace vpal {

class LinearOperator;

// Matrix-free forward map x -> A(x) with Jacobian products. Implementations
// are immutable after construction; apply/linearize may be called
// concurrently.
class Operator {
 public:
  Operator(Shape in_shape, Shape out_shape)
      : in_shape_(std::move(in_shape)), out_shape_(std::move(out_shape)) {}
  virtual ~Operator() = default;

  const Shape& in_shape() const { return in_shape_; }
  const Shape& out_shape() const { return out_shape_; }
  std::size_t in_size() const { return numel(in_shape_); }
  std::size_t out_size() const { return numel(out_shape_); }

  virtual GridSignal apply(const GridSignal& x) const = 0;

  // Jacobian J_A(x) as a linear operator. The returned object may reference
  // *this and must not outlive it.
  virtual std::unique_ptr<LinearOperator> linearize(const GridSignal& x) const = 0;

  virtual bool is_linear() const { return false; }

  GridSignal jvp(const GridSignal& x, const GridSignal& tangent) const;
  GridSignal vjp(const GridSignal& x, const GridSignal& cotangent) const;

 protected:
  void check_input(const GridSignal& x) const;
  void check_output(const GridSignal& v) const;

 private:
  Shape in_shape_;
  Shape out_shape_;
};

class LinearOperator : public Operator {
 public:
  using Operator::Operator;

  virtual GridSignal adjoint(const GridSignal& v) const = 0;

  std::unique_ptr<LinearOperator> linearize(const GridSignal& x) const final;
  bool is_linear() const final { return true; }
};

using OperatorPtr = std::shared_ptr<const Operator>;
using LinearOperatorPtr = std::shared_ptr<const LinearOperator>;

class IdentityOperator final : public LinearOperator {
 public:
  explicit IdentityOperator(Shape shape) : LinearOperator(shape, shape) {}
  GridSignal apply(const GridSignal& x) const override;
  GridSignal adjoint(const GridSignal& v) const override;
};

class ZeroOperator final : public LinearOperator {
 public:
  ZeroOperator(Shape in_shape, Shape out_shape)
      : LinearOperator(std::move(in_shape), std::move(out_shape)) {}
  GridSignal apply(const GridSignal& x) const override;
  GridSignal adjoint(const GridSignal& v) const override;
};

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(Eigen::MatrixXd m);
  DenseOperator(Eigen::MatrixXd m, Shape in_shape, Shape out_shape);
  GridSignal apply(const GridSignal& x) const override;
  GridSignal adjoint(const GridSignal& v) const override;
  const Eigen::MatrixXd& matrix() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

class SparseOperator final : public LinearOperator {
 public:
  using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  SparseOperator(Matrix m, Shape in_shape, Shape out_shape);
  GridSignal apply(const GridSignal& x) const override;
  GridSignal adjoint(const GridSignal& v) const override;
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

class ScaledOperator final : public LinearOperator {
 public:
  ScaledOperator(LinearOperatorPtr op, double factor);
  GridSignal apply(const GridSignal& x) const override;
  GridSignal adjoint(const GridSignal& v) const override;

 private:
  LinearOperatorPtr op_;
  double factor_;
};

// diag(B1, B2, ...) acting on the concatenation of the block inputs.
class BlockDiagonalOperator final : public LinearOperator {
 public:
  explicit BlockDiagonalOperator(std::vector<LinearOperatorPtr> blocks);
  GridSignal apply(const GridSignal& x) const override;
  GridSignal adjoint(const GridSignal& v) const override;

 private:
  std::vector<LinearOperatorPtr> blocks_;
};

// [B1; B2; ...] sharing one input; output is the concatenation.
class StackedOperator final : public LinearOperator {
 public:
  explicit StackedOperator(std::vector<LinearOperatorPtr> blocks);
  GridSignal apply(const GridSignal& x) const override;
  GridSignal adjoint(const GridSignal& v) const override;

 private:
  std::vector<LinearOperatorPtr> blocks_;
};

// Column-by-column assembly; intended for small operators in tests and the
// dense reference solvers.
Eigen::MatrixXd to_dense(const LinearOperator& op);
Eigen::MatrixXd jacobian_to_dense(const Operator& op, const GridSignal& x);

Eigen::Map<const Eigen::VectorXd> as_eigen(const GridSignal& x);
Eigen::Map<Eigen::VectorXd> as_eigen(GridSignal& x);

}  // namespace vpal
