#pragma once

// Reverse-mode differentiation over a per-forward-pass tape.
//
// A Graph records every operation as it is evaluated. Nodes are appended in
// evaluation order, so the append order is a topological order and backward()
// simply walks it in reverse. Trainable tensors live outside the graph (see
// ParameterStore) and are bound by reference: parameter nodes read their values
// in place and backward() accumulates straight into the tensor's grad buffer.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace recipetree {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  std::size_t rows() const { return shape_.empty() ? 1 : shape_.front(); }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on);

  bool has_grad() const { return grad_.has_value(); }
  std::span<const double> grad() const;
  std::span<double> grad();
  void zero_grad();

 private:
  Shape shape_;
  std::vector<double> values_;
  bool requires_grad_ = false;
  std::optional<std::vector<double>> grad_;
};

/// Named, persistent trainable tensors. Addresses are stable for the lifetime of
/// the store, so encoders may hold plain references into it.
class ParameterStore {
 public:
  Tensor& add(const std::string& name, Tensor tensor);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  /// Names in insertion order.
  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return order_.size(); }
  std::size_t element_count() const;

  void zero_grad();

 private:
  std::map<std::string, std::unique_ptr<Tensor>> tensors_;
  std::vector<std::string> order_;
};

struct Var {
  std::uint32_t id = 0;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  // Leaves.
  Var constant(std::vector<double> values);
  Var constant(const Tensor& tensor);
  /// Binds `tensor` by reference. Gradients accumulate into tensor.grad() when
  /// requires_grad is set; otherwise the node is a constant.
  Var param(Tensor& tensor);
  /// Row `row` of a rank-2 table, bound by reference. `frozen` rows never receive
  /// gradient (used for the PAD row of the word table).
  Var row(Tensor& table, std::size_t row, bool frozen = false);

  // Linear algebra.
  Var affine(Var x, Var weight, Var bias);
  Var matvec(Var weight, Var x);

  // Pointwise.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var add_scalar(Var a, double offset);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);

  // Structure.
  Var concat(std::span<const Var> parts);
  Var concat(std::initializer_list<Var> parts);
  Var slice(Var a, std::size_t offset, std::size_t length);

  // Reductions.
  Var sum(Var a);
  Var dot(Var a, Var b);
  /// Cosine similarity. Norms below kNormFloor raise DegenerateInputError.
  Var cosine(Var p, Var q);

  /// softmax((logits + noise) / temperature). In hard mode the forward value is the
  /// one-hot argmax while backward uses the soft Jacobian (straight-through).
  Var gumbel_softmax(Var logits, double temperature, std::span<const double> noise, bool hard);

  /// Frontier update for soft/straight-through tree merging. With selection weights
  /// s over k-1 candidate pairs, position i of the next frontier is
  ///   (1 - sum_{j<=i} s_j) * left + s_i * candidate + (sum_{j<i} s_j) * right
  /// where left/right are old frontier entries i and i+1.
  Var frontier_mix(Var selection, std::size_t position, Var left, Var candidate, Var right);

  void backward(Var output);

  std::span<const double> value(Var v) const;
  double scalar(Var v) const;
  std::size_t size(Var v) const;
  /// Gradient of the last backward() output with respect to a non-parameter node.
  std::span<const double> grad(Var v) const;
  std::size_t node_count() const { return nodes_.size(); }

  static constexpr double kNormFloor = 1e-12;

 private:
  enum class Op : std::uint8_t {
    kConstant,
    kParam,
    kRow,
    kAffine,
    kMatVec,
    kAdd,
    kSub,
    kMul,
    kScale,
    kAddScalar,
    kSigmoid,
    kTanh,
    kRelu,
    kConcat,
    kSlice,
    kSum,
    kDot,
    kCosine,
    kGumbel,
    kFrontierMix,
  };

  struct Node {
    Op op = Op::kConstant;
    std::uint32_t in[4] = {0, 0, 0, 0};
    std::uint8_t n_in = 0;
    std::vector<std::uint32_t> many;  // concat inputs
    std::vector<double> owned;
    const double* data = nullptr;  // points into owned or a bound tensor
    std::size_t size = 0;
    std::size_t rows = 0, cols = 0;  // matrix operands only
    double* grad_sink = nullptr;     // bound tensors: where gradient goes
    double factor = 0.0;             // scale / temperature / norms
    std::size_t offset = 0;          // slice offset / frontier position
    std::vector<double> aux;         // op-specific cache
  };

  Var push(Node node);
  const Node& node(Var v) const;
  void check_shape(bool ok, const char* op, Var a, Var b) const;
  std::string describe(Var v) const;
  double* grad_buffer(std::uint32_t id);
  void accumulate(std::uint32_t id, std::span<const double> g);

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
};

/// Per-input outcome of a finite-difference gradient check.
struct GradientCheckEntry {
  std::string name;
  std::size_t checked = 0;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
};

struct GradientCheckReport {
  std::vector<GradientCheckEntry> entries;
  double max_relative_error() const;
  bool passed(double relative_tolerance = 1e-4) const;
};

struct GradientCheckOptions {
  double eps = 1e-5;
  /// Differences below this are treated as exact regardless of relative size.
  double absolute_floor = 1e-8;
  /// 0 checks every element; otherwise a seeded subsample per input.
  std::size_t max_elements_per_input = 0;
  std::uint64_t seed = 0;
};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

/// Builds a graph whose output must be a scalar; called repeatedly.
using GraphBuilder = std::function<Var(Graph&)>;

/// Compares reverse-mode gradients to central differences
/// (f(x+eps) - f(x-eps)) / 2eps for every input with requires_grad set.
/// Inputs with requires_grad=false are excluded from the report.
GradientCheckReport check_gradients(const GraphBuilder& build, std::span<const NamedTensor> inputs,
                                    const GradientCheckOptions& options = {});

/// Draws Gumbel(0,1) noise -log(-log(u)).
template <class Rng>
std::vector<double> gumbel_noise(Rng& rng, std::size_t count) {
  std::vector<double> noise(count);
  for (double& n : noise) {
    double u = std::generate_canonical<double, 53>(rng);
    if (u <= 0.0) u = 1e-300;
    if (u >= 1.0) u = std::nextafter(1.0, 0.0);
    n = -std::log(-std::log(u));
  }
  return noise;
}

}  // namespace recipetree
