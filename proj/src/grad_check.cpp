#include "drsl/grad_check.hpp"

#include <cmath>
#include <limits>

namespace drsl {

namespace {

template <typename T>
double eval_scalar(
    const std::function<Var(Graph<T>&, const std::vector<Var>&)>& build,
    const std::vector<Tensor<T>>& params) {
  Graph<T> g(true);
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const auto& p : params) {
    Tensor<T> t = p;
    t.requires_grad = false;
    leaves.push_back(g.input(t));
  }
  Var out = build(g, leaves);
  if (g.value(out).numel() != 1) {
    throw InputError("grad_check: expression is not scalar, got " +
                     g.value(out).shape_str());
  }
  return double(g.value(out).data[0]);
}

}  // namespace

template <typename T>
GradCheckReport grad_check(
    const std::function<Var(Graph<T>&, const std::vector<Var>&)>& build,
    const std::vector<Tensor<T>>& params, double tol) {
  GradCheckReport rep;

  std::vector<std::vector<double>> analytic(params.size());
  try {
    Graph<T> g(true);
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const auto& p : params) {
      Tensor<T> t = p;
      t.requires_grad = true;
      leaves.push_back(g.input(t));
    }
    Var out = build(g, leaves);
    g.backward(out);
    for (size_t i = 0; i < params.size(); ++i) {
      const auto& gr = g.grad(leaves[i]);
      analytic[i].assign(gr.data.begin(), gr.data.end());
    }
  } catch (const NumericError& e) {
    rep.message = std::string("analytic pass failed: ") + e.what();
    return rep;
  }

  const double h_base = std::cbrt(std::numeric_limits<double>::epsilon());
  std::vector<Tensor<T>> probe = params;
  rep.pass = true;
  for (size_t pi = 0; pi < probe.size(); ++pi) {
    for (size_t e = 0; e < probe[pi].data.size(); ++e) {
      const T orig = probe[pi].data[e];
      const double h = h_base * std::max(1.0, std::fabs(double(orig)));
      probe[pi].data[e] = T(double(orig) + h);
      const double f_plus = eval_scalar(build, probe);
      probe[pi].data[e] = T(double(orig) - h);
      const double f_minus = eval_scalar(build, probe);
      probe[pi].data[e] = orig;

      const double fd = (f_plus - f_minus) / (2.0 * h);
      const double an = analytic[pi][e];
      const double rel = std::fabs(an - fd) / std::max(1.0, std::fabs(fd));
      if (rel > rep.worst_rel_err || rep.worst_entry < 0) {
        rep.worst_rel_err = rel;
        rep.worst_param = pi;
        rep.worst_entry = int64_t(e);
        rep.analytic = an;
        rep.numeric = fd;
      }
      if (!std::isfinite(rel)) rep.pass = false;
    }
  }
  if (rep.worst_rel_err > tol) rep.pass = false;
  rep.message = (rep.pass ? "ok" : "mismatch") + std::string(": worst |an-fd| rel err ") +
                std::to_string(rep.worst_rel_err) + " at param " +
                std::to_string(rep.worst_param) + " entry " +
                std::to_string(rep.worst_entry) + " (analytic " +
                std::to_string(rep.analytic) + ", numeric " +
                std::to_string(rep.numeric) + ")";
  return rep;
}

template GradCheckReport grad_check<float>(
    const std::function<Var(Graph<float>&, const std::vector<Var>&)>&,
    const std::vector<Tensor<float>>&, double);
template GradCheckReport grad_check<double>(
    const std::function<Var(Graph<double>&, const std::vector<Var>&)>&,
    const std::vector<Tensor<double>>&, double);

}  // namespace drsl
