#include "vpal/operators.hpp"

namespace vpal {

namespace {

// Jacobian of a linear operator is the operator itself.
class LinearView final : public LinearOperator {
 public:
  explicit LinearView(const LinearOperator& op)
      : LinearOperator(op.in_shape(), op.out_shape()), op_(op) {}
  GridSignal apply(const GridSignal& x) const override { return op_.apply(x); }
  GridSignal adjoint(const GridSignal& v) const override { return op_.adjoint(v); }

 private:
  const LinearOperator& op_;
};

}  // namespace

void Operator::check_input(const GridSignal& x) const {
  if (x.size() != in_size()) {
    throw ShapeError("operator input: expected " + to_string(in_shape_) + ", got " +
                     to_string(x.shape));
  }
}

void Operator::check_output(const GridSignal& v) const {
  if (v.size() != out_size()) {
    throw ShapeError("operator output-space argument: expected " + to_string(out_shape_) +
                     ", got " + to_string(v.shape));
  }
}

GridSignal Operator::jvp(const GridSignal& x, const GridSignal& tangent) const {
  return linearize(x)->apply(tangent);
}

GridSignal Operator::vjp(const GridSignal& x, const GridSignal& cotangent) const {
  return linearize(x)->adjoint(cotangent);
}

std::unique_ptr<LinearOperator> LinearOperator::linearize(const GridSignal&) const {
  return std::make_unique<LinearView>(*this);
}

GridSignal IdentityOperator::apply(const GridSignal& x) const {
  check_input(x);
  return GridSignal(out_shape(), x.data);
}

GridSignal IdentityOperator::adjoint(const GridSignal& v) const {
  check_output(v);
  return GridSignal(in_shape(), v.data);
}

GridSignal ZeroOperator::apply(const GridSignal& x) const {
  check_input(x);
  return GridSignal(out_shape());
}

GridSignal ZeroOperator::adjoint(const GridSignal& v) const {
  check_output(v);
  return GridSignal(in_shape());
}

DenseOperator::DenseOperator(Eigen::MatrixXd m)
    : LinearOperator(Shape{static_cast<std::size_t>(m.cols())},
                     Shape{static_cast<std::size_t>(m.rows())}),
      m_(std::move(m)) {}

DenseOperator::DenseOperator(Eigen::MatrixXd m, Shape in_shape, Shape out_shape)
    : LinearOperator(std::move(in_shape), std::move(out_shape)), m_(std::move(m)) {
  if (static_cast<std::size_t>(m_.cols()) != in_size() ||
      static_cast<std::size_t>(m_.rows()) != out_size())
    throw ShapeError("DenseOperator: matrix size does not match shapes");
}

GridSignal DenseOperator::apply(const GridSignal& x) const {
  check_input(x);
  GridSignal out(out_shape());
  as_eigen(out).noalias() = m_ * as_eigen(x);
  return out;
}

GridSignal DenseOperator::adjoint(const GridSignal& v) const {
  check_output(v);
  GridSignal out(in_shape());
  as_eigen(out).noalias() = m_.transpose() * as_eigen(v);
  return out;
}

SparseOperator::SparseOperator(Matrix m, Shape in_shape, Shape out_shape)
    : LinearOperator(std::move(in_shape), std::move(out_shape)), m_(std::move(m)) {
  if (static_cast<std::size_t>(m_.cols()) != in_size() ||
      static_cast<std::size_t>(m_.rows()) != out_size())
    throw ShapeError("SparseOperator: matrix size does not match shapes");
}

GridSignal SparseOperator::apply(const GridSignal& x) const {
  check_input(x);
  GridSignal out(out_shape());
  as_eigen(out).noalias() = m_ * as_eigen(x);
  return out;
}

GridSignal SparseOperator::adjoint(const GridSignal& v) const {
  check_output(v);
  GridSignal out(in_shape());
  as_eigen(out).noalias() = m_.transpose() * as_eigen(v);
  return out;
}

ScaledOperator::ScaledOperator(LinearOperatorPtr op, double factor)
    : LinearOperator(op->in_shape(), op->out_shape()), op_(std::move(op)), factor_(factor) {}

GridSignal ScaledOperator::apply(const GridSignal& x) const {
  return factor_ * op_->apply(x);
}

GridSignal ScaledOperator::adjoint(const GridSignal& v) const {
  return factor_ * op_->adjoint(v);
}

namespace {

std::size_t total_in(const std::vector<LinearOperatorPtr>& blocks) {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b->in_size();
  return n;
}

std::size_t total_out(const std::vector<LinearOperatorPtr>& blocks) {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b->out_size();
  return n;
}

GridSignal slice(const GridSignal& x, std::size_t offset, const Shape& shape) {
  const std::size_t n = numel(shape);
  return GridSignal(shape, std::vector<double>(x.data.begin() + offset,
                                               x.data.begin() + offset + n));
}

}  // namespace

BlockDiagonalOperator::BlockDiagonalOperator(std::vector<LinearOperatorPtr> blocks)
    : LinearOperator(Shape{total_in(blocks)}, Shape{total_out(blocks)}),
      blocks_(std::move(blocks)) {}

GridSignal BlockDiagonalOperator::apply(const GridSignal& x) const {
  check_input(x);
  GridSignal out(out_shape());
  std::size_t in_off = 0, out_off = 0;
  for (const auto& b : blocks_) {
    GridSignal part = b->apply(slice(x, in_off, b->in_shape()));
    std::copy(part.data.begin(), part.data.end(), out.data.begin() + out_off);
    in_off += b->in_size();
    out_off += b->out_size();
  }
  return out;
}

GridSignal BlockDiagonalOperator::adjoint(const GridSignal& v) const {
  check_output(v);
  GridSignal out(in_shape());
  std::size_t in_off = 0, out_off = 0;
  for (const auto& b : blocks_) {
    GridSignal part = b->adjoint(slice(v, out_off, b->out_shape()));
    std::copy(part.data.begin(), part.data.end(), out.data.begin() + in_off);
    in_off += b->in_size();
    out_off += b->out_size();
  }
  return out;
}

StackedOperator::StackedOperator(std::vector<LinearOperatorPtr> blocks)
    : LinearOperator(blocks.at(0)->in_shape(), Shape{total_out(blocks)}),
      blocks_(std::move(blocks)) {
  for (const auto& b : blocks_)
    if (b->in_size() != in_size()) throw ShapeError("StackedOperator: input sizes differ");
}

GridSignal StackedOperator::apply(const GridSignal& x) const {
  check_input(x);
  GridSignal out(out_shape());
  std::size_t off = 0;
  for (const auto& b : blocks_) {
    GridSignal part = b->apply(x);
    std::copy(part.data.begin(), part.data.end(), out.data.begin() + off);
    off += part.size();
  }
  return out;
}

GridSignal StackedOperator::adjoint(const GridSignal& v) const {
  check_output(v);
  GridSignal out(in_shape());
  std::size_t off = 0;
  for (const auto& b : blocks_) {
    axpy(1.0, b->adjoint(slice(v, off, b->out_shape())), out);
    off += b->out_size();
  }
  return out;
}

Eigen::MatrixXd to_dense(const LinearOperator& op) {
  const auto n = op.in_size();
  Eigen::MatrixXd m(op.out_size(), n);
  GridSignal e(op.in_shape());
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    m.col(static_cast<Eigen::Index>(j)) = as_eigen(op.apply(e));
    e[j] = 0.0;
  }
  return m;
}

Eigen::MatrixXd jacobian_to_dense(const Operator& op, const GridSignal& x) {
  return to_dense(*op.linearize(x));
}

Eigen::Map<const Eigen::VectorXd> as_eigen(const GridSignal& x) {
  return {x.data.data(), static_cast<Eigen::Index>(x.size())};
}

Eigen::Map<Eigen::VectorXd> as_eigen(GridSignal& x) {
  return {x.data.data(), static_cast<Eigen::Index>(x.size())};
}

}  // namespace vpal
