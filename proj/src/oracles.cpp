#include "ttman/oracles.hpp"

namespace ttman::oracle {

TTTensor curve_raw(const TangentVector& v, double t) {
  const TangentVector w = to_param(v, Param::first);
  const BasePoint& b = *w.base();
  std::vector<Matrix> cores = b.x.cores();
  for (std::size_t k = 0; k < cores.size(); ++k) cores[k] += t * w.cores()[k];
  return TTTensor(b.shape(), std::move(cores));
}

BasePtr curve_point(const TangentVector& v, double t) { return make_base_point(curve_raw(v, t)); }

DenseTensor central_difference(const TangentVector& v, const std::function<DenseTensor(const BasePtr&)>& f,
                               double h) {
  DenseTensor plus = f(curve_point(v, h));
  plus -= f(curve_point(v, -h));
  plus *= 0.5 / h;
  return plus;
}

Matrix central_difference_raw(const TangentVector& v, const std::function<Matrix(const TTTensor&)>& f, double h) {
  return (f(curve_raw(v, h)) - f(curve_raw(v, -h))) / (2.0 * h);
}

DenseTensor projector_derivative(const TangentVector& v, const DenseTensor& z, double h) {
  return central_difference(v, [&](const BasePtr& b) { return densify(project_dense(b, z)); }, h);
}

DenseTensor component_derivative(const TangentVector& v, const DenseTensor& z, Index k, double h) {
  return central_difference(v, [&](const BasePtr& b) { return densify(project_dense_component(b, z, k)); }, h);
}

Matrix assemble_projector(const BasePtr& base) {
  const Index n = base->shape().num_entries();
  Matrix p(n, n);
  DenseTensor e(base->shape().n);
  for (Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    p.col(j) = densify(project_dense(base, e)).vec();
    e[j] = 0.0;
  }
  return p;
}

double rel_error(const DenseTensor& a, const DenseTensor& b, double floor) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

}  // namespace ttman::oracle
