#include "recipetree/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "recipetree/errors.hpp"

namespace recipetree {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : shape_(std::move(shape)), values_(std::move(values)) {
  for (std::size_t d : shape_) {
    if (d == 0) throw DimensionError("tensor shape has a zero dimension: " + shape_to_string(shape_));
  }
  if (element_count(shape_) != values_.size()) {
    throw DimensionError("tensor shape " + shape_to_string(shape_) + " does not match " +
                         std::to_string(values_.size()) + " values");
  }
  set_requires_grad(requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = element_count(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  Shape shape{values.size()};
  return Tensor(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                      bool requires_grad) {
  return Tensor({rows, cols}, std::move(values), requires_grad);
}

void Tensor::set_requires_grad(bool on) {
  requires_grad_ = on;
  if (on && !grad_) grad_.emplace(values_.size(), 0.0);
}

std::span<const double> Tensor::grad() const {
  if (!grad_) return {};
  return *grad_;
}

std::span<double> Tensor::grad() {
  if (!grad_) return {};
  return *grad_;
}

void Tensor::zero_grad() {
  if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0);
}

// ---------------------------------------------------------------------------
// ParameterStore

Tensor& ParameterStore::add(const std::string& name, Tensor tensor) {
  if (tensors_.count(name)) throw ArgumentError("duplicate parameter name: " + name);
  auto [it, _] = tensors_.emplace(name, std::make_unique<Tensor>(std::move(tensor)));
  order_.push_back(name);
  return *it->second;
}

Tensor& ParameterStore::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw NotFoundError("unknown parameter: " + name);
  return *it->second;
}

const Tensor& ParameterStore::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw NotFoundError("unknown parameter: " + name);
  return *it->second;
}

bool ParameterStore::contains(const std::string& name) const { return tensors_.count(name) > 0; }

std::size_t ParameterStore::element_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t->size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [_, t] : tensors_) t->zero_grad();
}

// ---------------------------------------------------------------------------
// Graph: forward

Var Graph::push(Node node) {
  if (!node.data) {
    node.size = node.owned.size();
    if (!all_finite(node.owned)) {
      throw NumericError("non-finite value produced in forward pass");
    }
  }
  nodes_.push_back(std::move(node));
  Node& stored = nodes_.back();
  if (!stored.data) stored.data = stored.owned.data();
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Graph::Node& Graph::node(Var v) const {
  if (v.id >= nodes_.size()) throw IndexError("graph variable out of range");
  return nodes_[v.id];
}

std::string Graph::describe(Var v) const {
  const Node& n = node(v);
  if (n.rows) return shape_to_string({n.rows, n.cols});
  return shape_to_string({n.size});
}

void Graph::check_shape(bool ok, const char* op, Var a, Var b) const {
  if (!ok) {
    throw DimensionError(std::string(op) + ": shape mismatch " + describe(a) + " vs " + describe(b));
  }
}

Var Graph::constant(std::vector<double> values) {
  if (values.empty()) throw ArgumentError("constant: empty tensor");
  Node n;
  n.op = Op::kConstant;
  n.owned = std::move(values);
  return push(std::move(n));
}

Var Graph::constant(const Tensor& tensor) {
  Node n;
  n.op = Op::kConstant;
  n.owned.assign(tensor.values().begin(), tensor.values().end());
  if (tensor.rank() == 2) {
    n.rows = tensor.rows();
    n.cols = tensor.cols();
  }
  return push(std::move(n));
}

Var Graph::param(Tensor& tensor) {
  if (tensor.size() == 0) throw ArgumentError("param: empty tensor");
  Node n;
  n.op = Op::kParam;
  n.data = tensor.values().data();
  n.size = tensor.size();
  if (tensor.rank() == 2) {
    n.rows = tensor.rows();
    n.cols = tensor.cols();
  }
  if (tensor.requires_grad()) n.grad_sink = tensor.grad().data();
  return push(std::move(n));
}

Var Graph::row(Tensor& table, std::size_t row, bool frozen) {
  if (table.rank() != 2) throw DimensionError("row: table must be rank 2, got " + shape_to_string(table.shape()));
  if (row >= table.rows()) {
    throw IndexError("row index " + std::to_string(row) + " out of range for table with " +
                     std::to_string(table.rows()) + " rows");
  }
  Node n;
  n.op = Op::kRow;
  n.size = table.cols();
  n.data = table.values().data() + row * table.cols();
  if (table.requires_grad() && !frozen) n.grad_sink = table.grad().data() + row * table.cols();
  return push(std::move(n));
}

Var Graph::matvec(Var weight, Var x) {
  const Node& w = node(weight);
  const Node& xv = node(x);
  check_shape(w.rows > 0 && w.cols == xv.size, "matvec", weight, x);
  Node n;
  n.op = Op::kMatVec;
  n.in[0] = weight.id;
  n.in[1] = x.id;
  n.n_in = 2;
  n.owned.assign(w.rows, 0.0);
  const double* wd = w.data;
  const double* xd = xv.data;
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = wd + r * w.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * xd[c];
    n.owned[r] = acc;
  }
  return push(std::move(n));
}

Var Graph::affine(Var x, Var weight, Var bias) {
  const Node& w = node(weight);
  const Node& xv = node(x);
  const Node& b = node(bias);
  if (!(w.rows > 0 && w.cols == xv.size && b.size == w.rows)) {
    throw DimensionError("affine: shape mismatch W" + describe(weight) + " x" + describe(x) + " b" +
                         describe(bias));
  }
  Node n;
  n.op = Op::kAffine;
  n.in[0] = x.id;
  n.in[1] = weight.id;
  n.in[2] = bias.id;
  n.n_in = 3;
  n.owned.assign(b.data, b.data + b.size);
  const double* wd = w.data;
  const double* xd = xv.data;
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = wd + r * w.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * xd[c];
    n.owned[r] += acc;
  }
  return push(std::move(n));
}

Var Graph::add(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  check_shape(na.size == nb.size, "add", a, b);
  Node n;
  n.op = Op::kAdd;
  n.in[0] = a.id;
  n.in[1] = b.id;
  n.n_in = 2;
  n.owned.resize(na.size);
  for (std::size_t i = 0; i < na.size; ++i) n.owned[i] = na.data[i] + nb.data[i];
  return push(std::move(n));
}

Var Graph::sub(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  check_shape(na.size == nb.size, "sub", a, b);
  Node n;
  n.op = Op::kSub;
  n.in[0] = a.id;
  n.in[1] = b.id;
  n.n_in = 2;
  n.owned.resize(na.size);
  for (std::size_t i = 0; i < na.size; ++i) n.owned[i] = na.data[i] - nb.data[i];
  return push(std::move(n));
}

Var Graph::mul(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  check_shape(na.size == nb.size, "mul", a, b);
  Node n;
  n.op = Op::kMul;
  n.in[0] = a.id;
  n.in[1] = b.id;
  n.n_in = 2;
  n.owned.resize(na.size);
  for (std::size_t i = 0; i < na.size; ++i) n.owned[i] = na.data[i] * nb.data[i];
  return push(std::move(n));
}

Var Graph::scale(Var a, double factor) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kScale;
  n.in[0] = a.id;
  n.n_in = 1;
  n.factor = factor;
  n.owned.resize(na.size);
  for (std::size_t i = 0; i < na.size; ++i) n.owned[i] = na.data[i] * factor;
  return push(std::move(n));
}

Var Graph::add_scalar(Var a, double offset) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kAddScalar;
  n.in[0] = a.id;
  n.n_in = 1;
  n.owned.resize(na.size);
  for (std::size_t i = 0; i < na.size; ++i) n.owned[i] = na.data[i] + offset;
  return push(std::move(n));
}

Var Graph::sigmoid(Var a) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kSigmoid;
  n.in[0] = a.id;
  n.n_in = 1;
  n.owned.resize(na.size);
  for (std::size_t i = 0; i < na.size; ++i) {
    const double x = na.data[i];
    // Split on sign so exp() never overflows.
    if (x >= 0) {
      n.owned[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      n.owned[i] = e / (1.0 + e);
    }
  }
  return push(std::move(n));
}

Var Graph::tanh(Var a) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kTanh;
  n.in[0] = a.id;
  n.n_in = 1;
  n.owned.resize(na.size);
  for (std::size_t i = 0; i < na.size; ++i) n.owned[i] = std::tanh(na.data[i]);
  return push(std::move(n));
}

Var Graph::relu(Var a) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kRelu;
  n.in[0] = a.id;
  n.n_in = 1;
  n.owned.resize(na.size);
  for (std::size_t i = 0; i < na.size; ++i) n.owned[i] = na.data[i] > 0.0 ? na.data[i] : 0.0;
  return push(std::move(n));
}

Var Graph::concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var Graph::concat(std::span<const Var> parts) {
  if (parts.empty()) throw ArgumentError("concat: no parts");
  Node n;
  n.op = Op::kConcat;
  std::size_t total = 0;
  for (Var p : parts) total += node(p).size;
  n.owned.reserve(total);
  n.many.reserve(parts.size());
  for (Var p : parts) {
    const Node& np = node(p);
    n.owned.insert(n.owned.end(), np.data, np.data + np.size);
    n.many.push_back(p.id);
  }
  return push(std::move(n));
}

Var Graph::slice(Var a, std::size_t offset, std::size_t length) {
  const Node& na = node(a);
  if (length == 0 || offset + length > na.size) {
    throw DimensionError("slice [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                         ") out of range for " + describe(a));
  }
  Node n;
  n.op = Op::kSlice;
  n.in[0] = a.id;
  n.n_in = 1;
  n.offset = offset;
  n.owned.assign(na.data + offset, na.data + offset + length);
  return push(std::move(n));
}

Var Graph::sum(Var a) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kSum;
  n.in[0] = a.id;
  n.n_in = 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < na.size; ++i) acc += na.data[i];
  n.owned = {acc};
  return push(std::move(n));
}

Var Graph::dot(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  check_shape(na.size == nb.size, "dot", a, b);
  Node n;
  n.op = Op::kDot;
  n.in[0] = a.id;
  n.in[1] = b.id;
  n.n_in = 2;
  double acc = 0.0;
  for (std::size_t i = 0; i < na.size; ++i) acc += na.data[i] * nb.data[i];
  n.owned = {acc};
  return push(std::move(n));
}

Var Graph::cosine(Var p, Var q) {
  const Node& np = node(p);
  const Node& nq = node(q);
  check_shape(np.size == nq.size, "cosine", p, q);
  double pp = 0.0, qq = 0.0, pq = 0.0;
  for (std::size_t i = 0; i < np.size; ++i) {
    pp += np.data[i] * np.data[i];
    qq += nq.data[i] * nq.data[i];
    pq += np.data[i] * nq.data[i];
  }
  const double norm_p = std::sqrt(pp);
  const double norm_q = std::sqrt(qq);
  if (norm_p < kNormFloor || norm_q < kNormFloor) {
    throw DegenerateInputError("cosine: input norm below 1e-12");
  }
  Node n;
  n.op = Op::kCosine;
  n.in[0] = p.id;
  n.in[1] = q.id;
  n.n_in = 2;
  const double c = std::clamp(pq / (norm_p * norm_q), -1.0, 1.0);
  n.owned = {c};
  n.aux = {norm_p, norm_q};
  return push(std::move(n));
}

Var Graph::gumbel_softmax(Var logits, double temperature, std::span<const double> noise, bool hard) {
  if (!(temperature > 0.0)) throw ArgumentError("gumbel_softmax: temperature must be positive");
  const Node& nl = node(logits);
  if (!noise.empty() && noise.size() != nl.size) {
    throw DimensionError("gumbel_softmax: noise length " + std::to_string(noise.size()) +
                         " does not match logits " + describe(logits));
  }
  std::vector<double> soft(nl.size);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nl.size; ++i) {
    soft[i] = (nl.data[i] + (noise.empty() ? 0.0 : noise[i])) / temperature;
    peak = std::max(peak, soft[i]);
  }
  double total = 0.0;
  for (double& s : soft) {
    s = std::exp(s - peak);
    total += s;
  }
  for (double& s : soft) s /= total;

  Node n;
  n.op = Op::kGumbel;
  n.in[0] = logits.id;
  n.n_in = 1;
  n.factor = temperature;
  if (hard) {
    // First maximum wins, so the choice is deterministic under ties.
    const auto best = static_cast<std::size_t>(std::max_element(soft.begin(), soft.end()) - soft.begin());
    n.owned.assign(nl.size, 0.0);
    n.owned[best] = 1.0;
  } else {
    n.owned = soft;
  }
  n.aux = std::move(soft);
  return push(std::move(n));
}

Var Graph::frontier_mix(Var selection, std::size_t position, Var left, Var candidate, Var right) {
  const Node& ns = node(selection);
  const Node& nl = node(left);
  const Node& nc = node(candidate);
  const Node& nr = node(right);
  if (position >= ns.size) throw IndexError("frontier_mix: position beyond selection length");
  check_shape(nl.size == nc.size, "frontier_mix", left, candidate);
  check_shape(nl.size == nr.size, "frontier_mix", left, right);
  double before = 0.0;  // sum_{j<i} s_j
  for (std::size_t j = 0; j < position; ++j) before += ns.data[j];
  const double pick = ns.data[position];
  const double keep_left = 1.0 - (before + pick);
  const double take_right = before;

  Node n;
  n.op = Op::kFrontierMix;
  n.in[0] = selection.id;
  n.in[1] = left.id;
  n.in[2] = candidate.id;
  n.in[3] = right.id;
  n.n_in = 4;
  n.offset = position;
  n.aux = {keep_left, pick, take_right};
  n.owned.resize(nl.size);
  for (std::size_t i = 0; i < nl.size; ++i) {
    n.owned[i] = keep_left * nl.data[i] + pick * nc.data[i] + take_right * nr.data[i];
  }
  return push(std::move(n));
}

// ---------------------------------------------------------------------------
// Graph: backward

double* Graph::grad_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.op == Op::kParam || n.op == Op::kRow) return n.grad_sink;
  if (n.op == Op::kConstant) return nullptr;
  auto& g = grads_[id];
  if (g.empty()) g.assign(n.size, 0.0);
  return g.data();
}

void Graph::accumulate(std::uint32_t id, std::span<const double> g) {
  double* dst = grad_buffer(id);
  if (!dst) return;
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void Graph::backward(Var output) {
  const Node& out = node(output);
  if (out.size != 1) {
    throw ContractError("backward: output must be scalar, got " + describe(output));
  }
  grads_.assign(nodes_.size(), {});
  {
    double* seed = grad_buffer(output.id);
    if (seed) seed[0] += 1.0;
  }

  std::vector<double> tmp;
  for (std::size_t idx = output.id + 1; idx-- > 0;) {
    Node& n = nodes_[idx];
    if (n.op == Op::kConstant || n.op == Op::kParam || n.op == Op::kRow) continue;
    const std::vector<double>& g = grads_[idx];
    if (g.empty()) continue;  // no gradient reached this node
    const double* gd = g.data();

    switch (n.op) {
      case Op::kMatVec:
      case Op::kAffine: {
        const bool with_bias = n.op == Op::kAffine;
        const std::uint32_t w_id = with_bias ? n.in[1] : n.in[0];
        const std::uint32_t x_id = with_bias ? n.in[0] : n.in[1];
        const Node& w = nodes_[w_id];
        const Node& x = nodes_[x_id];
        if (double* gx = grad_buffer(x_id)) {
          for (std::size_t r = 0; r < w.rows; ++r) {
            const double* wr = w.data + r * w.cols;
            const double gr = gd[r];
            if (gr == 0.0) continue;
            for (std::size_t c = 0; c < w.cols; ++c) gx[c] += wr[c] * gr;
          }
        }
        if (double* gw = grad_buffer(w_id)) {
          for (std::size_t r = 0; r < w.rows; ++r) {
            const double gr = gd[r];
            if (gr == 0.0) continue;
            double* gwr = gw + r * w.cols;
            for (std::size_t c = 0; c < w.cols; ++c) gwr[c] += gr * x.data[c];
          }
        }
        if (with_bias) accumulate(n.in[2], {gd, n.size});
        break;
      }
      case Op::kAdd:
        accumulate(n.in[0], {gd, n.size});
        accumulate(n.in[1], {gd, n.size});
        break;
      case Op::kSub: {
        accumulate(n.in[0], {gd, n.size});
        if (double* gb = grad_buffer(n.in[1])) {
          for (std::size_t i = 0; i < n.size; ++i) gb[i] -= gd[i];
        }
        break;
      }
      case Op::kMul: {
        const Node& a = nodes_[n.in[0]];
        const Node& b = nodes_[n.in[1]];
        if (double* ga = grad_buffer(n.in[0])) {
          for (std::size_t i = 0; i < n.size; ++i) ga[i] += gd[i] * b.data[i];
        }
        if (double* gb = grad_buffer(n.in[1])) {
          for (std::size_t i = 0; i < n.size; ++i) gb[i] += gd[i] * a.data[i];
        }
        break;
      }
      case Op::kScale:
        if (double* ga = grad_buffer(n.in[0])) {
          for (std::size_t i = 0; i < n.size; ++i) ga[i] += gd[i] * n.factor;
        }
        break;
      case Op::kAddScalar:
        accumulate(n.in[0], {gd, n.size});
        break;
      case Op::kSigmoid:
        if (double* ga = grad_buffer(n.in[0])) {
          for (std::size_t i = 0; i < n.size; ++i) {
            const double y = n.data[i];
            ga[i] += gd[i] * y * (1.0 - y);
          }
        }
        break;
      case Op::kTanh:
        if (double* ga = grad_buffer(n.in[0])) {
          for (std::size_t i = 0; i < n.size; ++i) {
            const double y = n.data[i];
            ga[i] += gd[i] * (1.0 - y * y);
          }
        }
        break;
      case Op::kRelu: {
        const Node& a = nodes_[n.in[0]];
        if (double* ga = grad_buffer(n.in[0])) {
          for (std::size_t i = 0; i < n.size; ++i) {
            if (a.data[i] > 0.0) ga[i] += gd[i];
          }
        }
        break;
      }
      case Op::kConcat: {
        std::size_t off = 0;
        for (std::uint32_t part : n.many) {
          const std::size_t len = nodes_[part].size;
          accumulate(part, {gd + off, len});
          off += len;
        }
        break;
      }
      case Op::kSlice:
        if (double* ga = grad_buffer(n.in[0])) {
          for (std::size_t i = 0; i < n.size; ++i) ga[n.offset + i] += gd[i];
        }
        break;
      case Op::kSum:
        if (double* ga = grad_buffer(n.in[0])) {
          const std::size_t len = nodes_[n.in[0]].size;
          for (std::size_t i = 0; i < len; ++i) ga[i] += gd[0];
        }
        break;
      case Op::kDot: {
        const Node& a = nodes_[n.in[0]];
        const Node& b = nodes_[n.in[1]];
        if (double* ga = grad_buffer(n.in[0])) {
          for (std::size_t i = 0; i < a.size; ++i) ga[i] += gd[0] * b.data[i];
        }
        if (double* gb = grad_buffer(n.in[1])) {
          for (std::size_t i = 0; i < b.size; ++i) gb[i] += gd[0] * a.data[i];
        }
        break;
      }
      case Op::kCosine: {
        const Node& p = nodes_[n.in[0]];
        const Node& q = nodes_[n.in[1]];
        const double norm_p = n.aux[0];
        const double norm_q = n.aux[1];
        const double c = n.data[0];
        const double inv = 1.0 / (norm_p * norm_q);
        if (double* gp = grad_buffer(n.in[0])) {
          for (std::size_t i = 0; i < p.size; ++i) {
            gp[i] += gd[0] * (q.data[i] * inv - c * p.data[i] / (norm_p * norm_p));
          }
        }
        if (double* gq = grad_buffer(n.in[1])) {
          for (std::size_t i = 0; i < q.size; ++i) {
            gq[i] += gd[0] * (p.data[i] * inv - c * q.data[i] / (norm_q * norm_q));
          }
        }
        break;
      }
      case Op::kGumbel: {
        // Soft Jacobian regardless of the forward mode (straight-through when hard).
        const std::vector<double>& s = n.aux;
        double sg = 0.0;
        for (std::size_t i = 0; i < n.size; ++i) sg += s[i] * gd[i];
        if (double* gl = grad_buffer(n.in[0])) {
          for (std::size_t i = 0; i < n.size; ++i) gl[i] += s[i] * (gd[i] - sg) / n.factor;
        }
        break;
      }
      case Op::kFrontierMix: {
        const double keep_left = n.aux[0];
        const double pick = n.aux[1];
        const double take_right = n.aux[2];
        const Node& l = nodes_[n.in[1]];
        const Node& c = nodes_[n.in[2]];
        const Node& r = nodes_[n.in[3]];
        if (double* gl = grad_buffer(n.in[1])) {
          for (std::size_t i = 0; i < n.size; ++i) gl[i] += keep_left * gd[i];
        }
        if (double* gc = grad_buffer(n.in[2])) {
          for (std::size_t i = 0; i < n.size; ++i) gc[i] += pick * gd[i];
        }
        if (double* gr = grad_buffer(n.in[3])) {
          for (std::size_t i = 0; i < n.size; ++i) gr[i] += take_right * gd[i];
        }
        if (double* gs = grad_buffer(n.in[0])) {
          double gl_dot = 0.0, gc_dot = 0.0, gr_dot = 0.0;
          for (std::size_t i = 0; i < n.size; ++i) {
            gl_dot += gd[i] * l.data[i];
            gc_dot += gd[i] * c.data[i];
            gr_dot += gd[i] * r.data[i];
          }
          const std::size_t pos = n.offset;
          for (std::size_t j = 0; j < pos; ++j) gs[j] += gr_dot - gl_dot;
          gs[pos] += gc_dot - gl_dot;
        }
        break;
      }
      case Op::kConstant:
      case Op::kParam:
      case Op::kRow:
        break;
    }
  }

  for (std::size_t idx = 0; idx <= output.id; ++idx) {
    const Node& n = nodes_[idx];
    if ((n.op == Op::kParam || n.op == Op::kRow) && n.grad_sink) {
      if (!all_finite({n.grad_sink, n.size})) throw NumericError("non-finite gradient in backward pass");
    }
  }
}

std::span<const double> Graph::value(Var v) const {
  const Node& n = node(v);
  return {n.data, n.size};
}

double Graph::scalar(Var v) const {
  const Node& n = node(v);
  if (n.size != 1) throw ContractError("scalar: node is not a scalar, got " + describe(v));
  return n.data[0];
}

std::size_t Graph::size(Var v) const { return node(v).size; }

std::span<const double> Graph::grad(Var v) const {
  node(v);
  if (v.id >= grads_.size() || grads_[v.id].empty()) return {};
  return grads_[v.id];
}

}  // namespace recipetree
