#include "topicap/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "topicap/errors.hpp"

namespace topicap {

// ---- ParameterSet ---------------------------------------------------------

Parameter& ParameterSet::add(const std::string& name, Tensor value) {
  auto [it, inserted] = params_.try_emplace(name, name, std::move(value));
  if (!inserted) throw ContractError("duplicate parameter '" + name + "'");
  return it->second;
}

Parameter& ParameterSet::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParameterSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& [_, p] : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& [_, p] : params_) out.push_back(&p);
  return out;
}

std::vector<Parameter*> ParameterSet::with_prefix(const std::string& prefix) {
  std::vector<Parameter*> out;
  for (auto& [name, p] : params_) {
    if (name.rfind(prefix, 0) == 0) out.push_back(&p);
  }
  return out;
}

void ParameterSet::zero_grad() const {
  for (auto& [_, p] : params_) p.zero_grad();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

bool operator==(const ParameterSet& a, const ParameterSet& b) {
  if (a.params_.size() != b.params_.size()) return false;
  for (auto ia = a.params_.begin(), ib = b.params_.begin(); ia != a.params_.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !(ia->second.value == ib->second.value)) return false;
  }
  return true;
}

// ---- Tape -----------------------------------------------------------------

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::param(const Parameter& p) {
  if (!record_) return constant(p.value);
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{this, it->second};
  nodes_.push_back(Node{p.value, {}, {}, &p, true});
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var{this, nodes_.size() - 1};
}

Var Tape::push(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
              std::move(backward));
}

Var Tape::push(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  if (record_) {
    for (const auto& v : inputs) {
      if (v.tape != this) throw ContractError("operation mixes variables from different tapes");
      needs = needs || nodes_[v.id].requires_grad;
    }
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : BackwardFn{}, nullptr, needs});
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
  auto& node = nodes_[id];
  if (node.grad.empty()) node.grad = Tensor::zeros_like(node.value);
  return node.grad;
}

void Tape::backward(Var loss, double seed) {
  if (loss.tape != this) throw ContractError("backward: loss was not recorded on this tape");
  if (!nodes_[loss.id].value.is_scalar()) {
    throw ContractError("backward: loss must be scalar, got shape " +
                        shape_string(nodes_[loss.id].value.shape()));
  }
  if (!record_) throw ContractError("backward: tape was created without gradient recording");
  for (auto& n : nodes_) n.grad = Tensor{};
  grad(loss.id)[0] = seed;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backward) node.backward(*this, i);
    if (node.param) {
      auto& dst = node.param->grad.data();
      const auto& src = node.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

// ---- operations -----------------------------------------------------------

namespace {

void require_rank1(const Tensor& t, const char* op) {
  if (t.rank() != 1) {
    throw DimensionError(std::string(op) + ": expected a vector, got " + shape_string(t.shape()));
  }
}

void accumulate(Tape& tape, Var target, const std::vector<double>& g, double factor = 1.0) {
  if (!tape.requires_grad(target.id)) return;
  auto& dst = tape.grad(target.id).data();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += factor * g[k];
}

}  // namespace

Var matmul(Var a, Var b) {
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows()) {
    throw DimensionError("matmul: incompatible shapes " + shape_string(A.shape()) + " and " +
                         shape_string(B.shape()));
  }
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
    }
  }
  return a.tape->push(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self);
    const auto& A = t.value(a.id);
    const auto& B = t.value(b.id);
    if (t.requires_grad(a.id)) {
      auto& ga = t.grad(a.id);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * B[p * n + j];
          ga[i * k + p] += s;
        }
    }
    if (t.requires_grad(b.id)) {
      auto& gb = t.grad(b.id);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
        }
    }
  });
}

Var matvec(Var a, Var x) {
  const auto& A = a.value();
  const auto& X = x.value();
  if (A.rank() != 2 || X.rank() != 1 || A.cols() != X.size()) {
    throw DimensionError("matvec: incompatible shapes " + shape_string(A.shape()) + " and " +
                         shape_string(X.shape()));
  }
  const std::size_t m = A.rows(), k = A.cols();
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = A.data().data() + i * k;
    double s = 0.0;
    for (std::size_t p = 0; p < k; ++p) s += row[p] * X[p];
    out[i] = s;
  }
  return a.tape->push(std::move(out), {a, x}, [a, x, m, k](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self);
    if (t.requires_grad(a.id)) {
      const auto& X = t.value(x.id);
      auto& ga = t.grad(a.id);
      for (std::size_t i = 0; i < m; ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        double* row = ga.data().data() + i * k;
        for (std::size_t p = 0; p < k; ++p) row[p] += gi * X[p];
      }
    }
    if (t.requires_grad(x.id)) {
      const auto& A = t.value(a.id);
      auto& gx = t.grad(x.id);
      for (std::size_t i = 0; i < m; ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        const double* row = A.data().data() + i * k;
        for (std::size_t p = 0; p < k; ++p) gx[p] += gi * row[p];
      }
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const auto& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  return a.tape->push(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self).data();
    accumulate(t, a, g);
    accumulate(t, b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const auto& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  return a.tape->push(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self).data();
    accumulate(t, a, g);
    accumulate(t, b, g, -1.0);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const auto& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  return a.tape->push(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self);
    if (t.requires_grad(a.id)) {
      const auto& B = t.value(b.id);
      auto& ga = t.grad(a.id);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * B[i];
    }
    if (t.requires_grad(b.id)) {
      const auto& A = t.value(a.id);
      auto& gb = t.grad(b.id);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * A[i];
    }
  });
}

Var scale(Var a, double c) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= c;
  return a.tape->push(std::move(out), {a}, [a, c](Tape& t, std::size_t self) {
    accumulate(t, a, t.upstream(self).data(), c);
  });
}

Var tanh(Var a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v = std::tanh(v);
  return a.tape->push(std::move(out), {a}, [a](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self);
    const auto& y = t.value(self);
    auto& ga = t.grad(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Var a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  return a.tape->push(std::move(out), {a}, [a](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self);
    const auto& y = t.value(self);
    auto& ga = t.grad(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var softmax(Var a) {
  const auto& X = a.value();
  require_rank1(X, "softmax");
  Tensor out = X;
  const double mx = *std::max_element(out.data().begin(), out.data().end());
  double z = 0.0;
  for (auto& v : out.data()) {
    v = std::exp(v - mx);
    z += v;
  }
  for (auto& v : out.data()) v /= z;
  return a.tape->push(std::move(out), {a}, [a](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self);
    const auto& y = t.value(self);
    double gy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) gy += g[i] * y[i];
    auto& ga = t.grad(a.id);
    for (std::size_t i = 0; i < y.size(); ++i) ga[i] += y[i] * (g[i] - gy);
  });
}

Var log_softmax(Var a) {
  const auto& X = a.value();
  require_rank1(X, "log_softmax");
  const double mx = *std::max_element(X.data().begin(), X.data().end());
  double z = 0.0;
  for (double v : X.data()) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  Tensor out = X;
  for (auto& v : out.data()) v -= lse;
  return a.tape->push(std::move(out), {a}, [a](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self);
    const auto& y = t.value(self);
    double gs = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) gs += g[i];
    auto& ga = t.grad(a.id);
    for (std::size_t i = 0; i < y.size(); ++i) ga[i] += g[i] - std::exp(y[i]) * gs;
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape->push(Tensor::scalar(s), {a}, [a](Tape& t, std::size_t self) {
    const double g = t.upstream(self)[0];
    for (auto& v : t.grad(a.id).data()) v += g;
  });
}

Var dot(Var a, Var b) {
  require_rank1(a.value(), "dot");
  require_same_shape(a.value(), b.value(), "dot");
  const auto& A = a.value();
  const auto& B = b.value();
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) s += A[i] * B[i];
  return a.tape->push(Tensor::scalar(s), {a, b}, [a, b](Tape& t, std::size_t self) {
    const double g = t.upstream(self)[0];
    if (t.requires_grad(a.id)) accumulate(t, a, t.value(b.id).data(), g);
    if (t.requires_grad(b.id)) accumulate(t, b, t.value(a.id).data(), g);
  });
}

Var squared_norm(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v * v;
  return a.tape->push(Tensor::scalar(s), {a}, [a](Tape& t, std::size_t self) {
    accumulate(t, a, t.value(a.id).data(), 2.0 * t.upstream(self)[0]);
  });
}

Var squared_distance(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "squared_distance");
  const auto& A = a.value();
  const auto& B = b.value();
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) s += (A[i] - B[i]) * (A[i] - B[i]);
  return a.tape->push(Tensor::scalar(s), {a, b}, [a, b](Tape& t, std::size_t self) {
    const double g = 2.0 * t.upstream(self)[0];
    const auto& A = t.value(a.id);
    const auto& B = t.value(b.id);
    std::vector<double> diff(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) diff[i] = A[i] - B[i];
    accumulate(t, a, diff, g);
    accumulate(t, b, diff, -g);
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  std::vector<double> out;
  std::vector<std::size_t> sizes;
  sizes.reserve(parts.size());
  for (const auto& p : parts) {
    require_rank1(p.value(), "concat");
    const auto& d = p.value().data();
    out.insert(out.end(), d.begin(), d.end());
    sizes.push_back(d.size());
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  Tape* tape = parts.front().tape;
  return tape->push(Tensor::vector(std::move(out)), parts,
                    [inputs, sizes](Tape& t, std::size_t self) {
                      const auto& g = t.upstream(self);
                      std::size_t off = 0;
                      for (std::size_t k = 0; k < inputs.size(); ++k) {
                        if (t.requires_grad(inputs[k].id)) {
                          auto& gi = t.grad(inputs[k].id);
                          for (std::size_t i = 0; i < sizes[k]; ++i) gi[i] += g[off + i];
                        }
                        off += sizes[k];
                      }
                    });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice(Var a, std::size_t offset, std::size_t length) {
  const auto& A = a.value();
  require_rank1(A, "slice");
  if (length == 0 || offset + length > A.size()) {
    throw DimensionError("slice: range [" + std::to_string(offset) + ", " +
                         std::to_string(offset + length) + ") outside " + shape_string(A.shape()));
  }
  std::vector<double> out(A.data().begin() + offset, A.data().begin() + offset + length);
  return a.tape->push(Tensor::vector(std::move(out)), {a},
                      [a, offset, length](Tape& t, std::size_t self) {
                        const auto& g = t.upstream(self);
                        auto& ga = t.grad(a.id);
                        for (std::size_t i = 0; i < length; ++i) ga[offset + i] += g[i];
                      });
}

Var row(Var matrix, std::size_t index) {
  const auto& M = matrix.value();
  if (M.rank() != 2) throw DimensionError("row: expected a matrix, got " + shape_string(M.shape()));
  if (index >= M.rows()) {
    throw IndexError("row: index " + std::to_string(index) + " outside " + shape_string(M.shape()));
  }
  const std::size_t n = M.cols();
  std::vector<double> out(M.data().begin() + index * n, M.data().begin() + (index + 1) * n);
  return matrix.tape->push(Tensor::vector(std::move(out)), {matrix},
                           [matrix, index, n](Tape& t, std::size_t self) {
                             const auto& g = t.upstream(self);
                             auto& gm = t.grad(matrix.id);
                             for (std::size_t i = 0; i < n; ++i) gm[index * n + i] += g[i];
                           });
}

Var pick(Var a, std::size_t index) {
  const auto& A = a.value();
  if (index >= A.size()) {
    throw IndexError("pick: index " + std::to_string(index) + " outside " + shape_string(A.shape()));
  }
  return a.tape->push(Tensor::scalar(A[index]), {a}, [a, index](Tape& t, std::size_t self) {
    t.grad(a.id)[index] += t.upstream(self)[0];
  });
}

Var stack(std::span<const Var> scalars) {
  if (scalars.empty()) throw ContractError("stack: no inputs");
  std::vector<double> out;
  out.reserve(scalars.size());
  for (const auto& s : scalars) {
    if (!s.value().is_scalar()) {
      throw DimensionError("stack: expected scalars, got " + shape_string(s.value().shape()));
    }
    out.push_back(s.value()[0]);
  }
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return scalars.front().tape->push(Tensor::vector(std::move(out)), scalars,
                                    [inputs](Tape& t, std::size_t self) {
                                      const auto& g = t.upstream(self);
                                      for (std::size_t i = 0; i < inputs.size(); ++i) {
                                        if (t.requires_grad(inputs[i].id)) t.grad(inputs[i].id)[0] += g[i];
                                      }
                                    });
}

Var mean(std::span<const Var> vectors) {
  if (vectors.empty()) throw ContractError("mean: no inputs");
  Tensor out = Tensor::zeros_like(vectors.front().value());
  for (const auto& v : vectors) {
    require_same_shape(out, v.value(), "mean");
    const auto& d = v.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
  }
  const double inv = 1.0 / static_cast<double>(vectors.size());
  for (auto& v : out.data()) v *= inv;
  std::vector<Var> inputs(vectors.begin(), vectors.end());
  return vectors.front().tape->push(std::move(out), vectors, [inputs, inv](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self).data();
    for (const auto& in : inputs) accumulate(t, in, g, inv);
  });
}

Var weighted_sum(Var weights, std::span<const Var> vectors) {
  const auto& W = weights.value();
  require_rank1(W, "weighted_sum");
  if (vectors.size() != W.size()) {
    throw DimensionError("weighted_sum: " + std::to_string(W.size()) + " weights for " +
                         std::to_string(vectors.size()) + " vectors");
  }
  Tensor out = Tensor::zeros_like(vectors.front().value());
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    require_same_shape(out, vectors[k].value(), "weighted_sum");
    const auto& d = vectors[k].value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += W[k] * d[i];
  }
  std::vector<Var> inputs;
  inputs.reserve(vectors.size() + 1);
  inputs.push_back(weights);
  inputs.insert(inputs.end(), vectors.begin(), vectors.end());
  return weights.tape->push(std::move(out), inputs, [inputs](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self);
    const auto& W = t.value(inputs[0].id);
    const bool want_w = t.requires_grad(inputs[0].id);
    for (std::size_t k = 1; k < inputs.size(); ++k) {
      const auto& v = t.value(inputs[k].id);
      if (want_w) {
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) s += g[i] * v[i];
        t.grad(inputs[0].id)[k - 1] += s;
      }
      accumulate(t, inputs[k], g.data(), W[k - 1]);
    }
  });
}

Var add_n(std::span<const Var> terms) {
  if (terms.empty()) throw ContractError("add_n: no inputs");
  Tensor out = Tensor::zeros_like(terms.front().value());
  for (const auto& v : terms) {
    require_same_shape(out, v.value(), "add_n");
    const auto& d = v.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
  }
  std::vector<Var> inputs(terms.begin(), terms.end());
  return terms.front().tape->push(std::move(out), terms, [inputs](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self).data();
    for (const auto& in : inputs) accumulate(t, in, g);
  });
}

Var cross_entropy(Var logits, std::size_t target) {
  const auto& X = logits.value();
  require_rank1(X, "cross_entropy");
  if (target >= X.size()) {
    throw IndexError("cross_entropy: target " + std::to_string(target) + " outside " +
                     shape_string(X.shape()));
  }
  const double mx = *std::max_element(X.data().begin(), X.data().end());
  double z = 0.0;
  for (double v : X.data()) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  return logits.tape->push(Tensor::scalar(lse - X[target]), {logits},
                           [logits, target, lse](Tape& t, std::size_t self) {
                             const double g = t.upstream(self)[0];
                             const auto& X = t.value(logits.id);
                             auto& gl = t.grad(logits.id);
                             for (std::size_t i = 0; i < X.size(); ++i) gl[i] += g * std::exp(X[i] - lse);
                             gl[target] -= g;
                           });
}

Var elementwise(Elementwise op, std::span<const Var> args) {
  const std::size_t arity = (op == Elementwise::kAdd || op == Elementwise::kMul) ? 2 : 1;
  if (args.size() != arity) {
    throw ContractError("elementwise: expected " + std::to_string(arity) + " operands, got " +
                        std::to_string(args.size()));
  }
  switch (op) {
    case Elementwise::kAdd: return add(args[0], args[1]);
    case Elementwise::kMul: return mul(args[0], args[1]);
    case Elementwise::kTanh: return tanh(args[0]);
    case Elementwise::kSigmoid: return sigmoid(args[0]);
  }
  throw ContractError("elementwise: unknown op");
}

}  // namespace topicap
