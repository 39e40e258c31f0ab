#include "bmgcn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace bmgcn {

void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
               AdamState& state) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: one gradient per parameter");
  if (state.first_moment.empty()) {
    for (const Matrix* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: parameter list changed between steps");
  }

  const AdamOptions& o = state.options;
  ++state.step;
  const double correction1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    if (grads[k].rows() != p.rows() || grads[k].cols() != p.cols()) {
      throw std::invalid_argument("adam_step: gradient shape differs from parameter");
    }
    const Matrix g = grads[k] + o.weight_decay * p;
    Matrix& m = state.first_moment[k];
    Matrix& v = state.second_moment[k];
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseProduct(g);
    p.array() -= o.lr * (m.array() / correction1) /
                 ((v.array() / correction2).sqrt() + o.eps);
  }
}

}  // namespace bmgcn
