#include "dlda/diff.hpp"

#include "dlda/error.hpp"

#include <numeric>
#include <string>

namespace dlda {

std::vector<ad::Jet> seed_rows(ad::Var x, std::span<const int> directions, int dirs, int order) {
  if (static_cast<ad::Index>(directions.size()) != x.rows()) throw DimensionError("seed_rows: one direction per row");
  std::vector<ad::Jet> out;
  out.reserve(directions.size());
  for (ad::Index i = 0; i < x.rows(); ++i) {
    ad::Var r = ad::row(x, i);
    const int dir = directions[static_cast<std::size_t>(i)];
    out.push_back(dir >= 0 && order >= 1 ? ad::Jet::seed(r, dir, dirs, order) : ad::Jet(r, dirs, order));
  }
  return out;
}

std::vector<ad::Jet> seed_rows(ad::Tape& tape, const Eigen::MatrixXd& x, std::span<const int> directions, int dirs,
                               int order) {
  if (static_cast<ad::Index>(directions.size()) != x.rows()) throw DimensionError("seed_rows: one direction per row");
  std::vector<ad::Jet> out;
  out.reserve(directions.size());
  for (ad::Index i = 0; i < x.rows(); ++i) {
    ad::Var r = tape.constant(x.row(i));
    const int dir = directions[static_cast<std::size_t>(i)];
    out.push_back(dir >= 0 && order >= 1 ? ad::Jet::seed(r, dir, dirs, order) : ad::Jet(r, dirs, order));
  }
  return out;
}

DiffResult evaluate(const ScalarFunction& f, const ParameterStore& params, const Eigen::VectorXd& x,
                    const DiffRequest& request) {
  if (x.size() != f.arity) {
    throw DimensionError("evaluate: expected " + std::to_string(f.arity) + " inputs, got " + std::to_string(x.size()));
  }
  const int m = f.arity;
  const int order = request.want_input_hessian ? 2 : (request.want_input_grad ? 1 : 0);
  ad::Tape tape;
  ParamSource src(tape, params, request.want_param_grad);
  std::vector<int> dirs(static_cast<std::size_t>(m));
  std::iota(dirs.begin(), dirs.end(), 0);
  const Eigen::MatrixXd xm = x;
  std::vector<ad::Jet> inputs = seed_rows(tape, xm, dirs, m, order);
  ad::Jet y = f.fn(src, inputs);
  if (y.rows() != 1 || y.cols() != 1) throw DimensionError("evaluate: function is not scalar");

  DiffResult r;
  r.value = y.value().scalar();
  if (order >= 1) {
    r.input_grad.resize(m);
    for (int i = 0; i < m; ++i) r.input_grad(i) = y.d1_value(i)(0, 0);
  }
  if (order >= 2) {
    r.input_hessian.resize(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) r.input_hessian(i, j) = y.d2_value(i, j)(0, 0);
  }
  if (request.want_param_grad) {
    tape.backward(y.value());
    r.param_grad = src.gradient();
  }
  return r;
}

ValueAndGrad eval_with_input_grad(const ScalarFunction& f, const ParameterStore& params, const Eigen::VectorXd& x) {
  DiffRequest req;
  req.want_input_grad = true;
  DiffResult r = evaluate(f, params, x, req);
  return {r.value, std::move(r.input_grad)};
}

Eigen::MatrixXd eval_input_hessian(const ScalarFunction& f, const ParameterStore& params, const Eigen::VectorXd& x) {
  DiffRequest req;
  req.want_input_hessian = true;
  return evaluate(f, params, x, req).input_hessian;
}

ValueAndGrad eval_param_grad(const Objective& objective, const ParameterStore& params) {
  ad::Tape tape;
  ParamSource src(tape, params, true);
  ad::Var out = objective(src);
  if (!out || out.value().size() != 1) throw DimensionError("eval_param_grad: objective is not scalar");
  tape.backward(out);
  return {out.scalar(), src.gradient()};
}

}  // namespace dlda
