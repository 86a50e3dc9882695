#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "recipetree/autodiff.hpp"
#include "recipetree/errors.hpp"

namespace recipetree {

double GradientCheckReport::max_relative_error() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.max_relative_error);
  return worst;
}

bool GradientCheckReport::passed(double relative_tolerance) const {
  return max_relative_error() <= relative_tolerance;
}

namespace {

double evaluate(const GraphBuilder& build) {
  Graph g;
  const Var out = build(g);
  if (g.size(out) != 1) throw ContractError("check_gradients: builder must produce a scalar");
  return g.scalar(out);
}

}  // namespace

GradientCheckReport check_gradients(const GraphBuilder& build, std::span<const NamedTensor> inputs,
                                    const GradientCheckOptions& options) {
  if (!(options.eps > 0.0)) throw ArgumentError("check_gradients: eps must be positive");

  for (const auto& in : inputs) {
    if (in.tensor->requires_grad()) in.tensor->zero_grad();
  }
  {
    Graph g;
    const Var out = build(g);
    if (g.size(out) != 1) throw ContractError("check_gradients: builder must produce a scalar");
    g.backward(out);
  }

  GradientCheckReport report;
  std::mt19937_64 rng(options.seed);
  for (const auto& in : inputs) {
    Tensor& t = *in.tensor;
    if (!t.requires_grad()) continue;
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());

    std::vector<std::size_t> positions(t.size());
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    if (options.max_elements_per_input && positions.size() > options.max_elements_per_input) {
      std::shuffle(positions.begin(), positions.end(), rng);
      positions.resize(options.max_elements_per_input);
      std::sort(positions.begin(), positions.end());
    }

    GradientCheckEntry entry;
    entry.name = in.name;
    for (std::size_t pos : positions) {
      double& x = t.values()[pos];
      const double saved = x;
      x = saved + options.eps;
      const double up = evaluate(build);
      x = saved - options.eps;
      const double down = evaluate(build);
      x = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double diff = std::abs(numeric - analytic[pos]);
      entry.max_absolute_error = std::max(entry.max_absolute_error, diff);
      if (diff > options.absolute_floor) {
        const double scale = std::max(std::abs(numeric), std::abs(analytic[pos]));
        entry.max_relative_error = std::max(entry.max_relative_error, diff / scale);
      }
      ++entry.checked;
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace recipetree
