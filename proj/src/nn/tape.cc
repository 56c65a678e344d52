#include "speechparse/nn/tape.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace speechparse::nn {

Tape::Id Tape::push(std::size_t size) {
  Node node;
  node.offset = values_.size();
  node.size = size;
  values_.resize(values_.size() + size, 0.0);
  nodes_.push_back(std::move(node));
  return static_cast<Id>(nodes_.size()) - 1;
}

void Tape::require_size(Id id, std::size_t size, const char* op) const {
  if (nodes_.at(static_cast<std::size_t>(id)).size != size) {
    throw Error(std::string("Tape::") + op + ": operand size mismatch");
  }
}

std::span<const double> Tape::value(Id id) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(id));
  return {values_.data() + n.offset, n.size};
}

Tape::Id Tape::input(std::span<const double> values) {
  const Id out = push(values.size());
  std::copy(values.begin(), values.end(), val(out));
  return out;
}

Tape::Id Tape::input(std::span<const float> values) {
  const Id out = push(values.size());
  std::copy(values.begin(), values.end(), val(out));
  return out;
}

Tape::Id Tape::parameter_row(int p, int row) {
  const Matrix& m = param(p);
  if (row < 0 || row >= m.rows()) throw Error("Tape::parameter_row: row out of range");
  const auto src = m.row(row);
  const Id out = push(src.size());
  std::copy(src.begin(), src.end(), val(out));
  nodes_.back().back = [p, row, out](Tape& t) {
    const std::size_t cols = static_cast<std::size_t>(t.param(p).cols());
    double* g = t.param_grad(p) + static_cast<std::size_t>(row) * cols;
    const double* go = t.grad(out);
    for (std::size_t c = 0; c < cols; ++c) g[c] += go[c];
  };
  return out;
}

Tape::Id Tape::compose(int w, int b, Id left, Id right) {
  const Matrix& wm = param(w);
  const std::size_t nl = size(left);
  const std::size_t nr = size(right);
  const std::size_t d = static_cast<std::size_t>(wm.rows());
  if (static_cast<std::size_t>(wm.cols()) != nl + nr || static_cast<std::size_t>(param(b).cols()) != d) {
    throw Error("Tape::compose: shape mismatch");
  }
  const Id out = push(d);
  const double* l = val(left);
  const double* r = val(right);
  const auto bias = param(b).data();
  double* y = val(out);
  for (std::size_t i = 0; i < d; ++i) {
    const auto row = wm.row(static_cast<int>(i));
    double z = bias[i];
    for (std::size_t c = 0; c < nl; ++c) z += row[c] * l[c];
    for (std::size_t c = 0; c < nr; ++c) z += row[nl + c] * r[c];
    y[i] = std::tanh(z);
  }
  nodes_.back().back = [w, b, left, right, out](Tape& t) {
    const Matrix& wm = t.param(w);
    const std::size_t d = static_cast<std::size_t>(wm.rows());
    const std::size_t nl = t.size(left);
    const std::size_t nr = t.size(right);
    const double* y = t.val(out);
    const double* go = t.grad(out);
    const double* l = t.val(left);
    const double* r = t.val(right);
    double* gl = t.grad(left);
    double* gr = t.grad(right);
    double* gw = t.param_grad(w);
    double* gb = t.param_grad(b);
    const std::size_t cols = nl + nr;
    for (std::size_t i = 0; i < d; ++i) {
      const double gz = go[i] * (1.0 - y[i] * y[i]);
      if (gz == 0.0) continue;
      gb[i] += gz;
      const auto row = wm.row(static_cast<int>(i));
      double* gwr = gw + i * cols;
      for (std::size_t c = 0; c < nl; ++c) {
        gwr[c] += gz * l[c];
        gl[c] += gz * row[c];
      }
      for (std::size_t c = 0; c < nr; ++c) {
        gwr[nl + c] += gz * r[c];
        gr[c] += gz * row[nl + c];
      }
    }
  };
  return out;
}

Tape::Id Tape::affine_tanh(int w, int b, Id x) {
  const Matrix& wm = param(w);
  const std::size_t n = size(x);
  const std::size_t d = static_cast<std::size_t>(wm.rows());
  if (static_cast<std::size_t>(wm.cols()) != n || static_cast<std::size_t>(param(b).cols()) != d) {
    throw Error("Tape::affine_tanh: shape mismatch");
  }
  const Id out = push(d);
  const double* xv = val(x);
  const auto bias = param(b).data();
  double* y = val(out);
  for (std::size_t i = 0; i < d; ++i) {
    const auto row = wm.row(static_cast<int>(i));
    double z = bias[i];
    for (std::size_t c = 0; c < n; ++c) z += row[c] * xv[c];
    y[i] = std::tanh(z);
  }
  nodes_.back().back = [w, b, x, out](Tape& t) {
    const Matrix& wm = t.param(w);
    const std::size_t d = static_cast<std::size_t>(wm.rows());
    const std::size_t n = t.size(x);
    const double* y = t.val(out);
    const double* go = t.grad(out);
    const double* xv = t.val(x);
    double* gx = t.grad(x);
    double* gw = t.param_grad(w);
    double* gb = t.param_grad(b);
    for (std::size_t i = 0; i < d; ++i) {
      const double gz = go[i] * (1.0 - y[i] * y[i]);
      if (gz == 0.0) continue;
      gb[i] += gz;
      const auto row = wm.row(static_cast<int>(i));
      double* gwr = gw + i * n;
      for (std::size_t c = 0; c < n; ++c) {
        gwr[c] += gz * xv[c];
        gx[c] += gz * row[c];
      }
    }
  };
  return out;
}

Tape::Id Tape::bilinear(Id a, Id b, int s) {
  const Matrix& sm = param(s);
  const std::size_t na = size(a);
  const std::size_t nb = size(b);
  if (static_cast<std::size_t>(sm.rows()) != na || static_cast<std::size_t>(sm.cols()) != nb) {
    throw Error("Tape::bilinear: shape mismatch");
  }
  const Id out = push(1);
  const double* av = val(a);
  const double* bv = val(b);
  double total = 0.0;
  for (std::size_t r = 0; r < na; ++r) {
    const auto row = sm.row(static_cast<int>(r));
    double inner = 0.0;
    for (std::size_t c = 0; c < nb; ++c) inner += row[c] * bv[c];
    total += av[r] * inner;
  }
  *val(out) = total;
  nodes_.back().back = [a, b, s, out](Tape& t) {
    const double g = *t.grad(out);
    if (g == 0.0) return;
    const Matrix& sm = t.param(s);
    const std::size_t na = t.size(a);
    const std::size_t nb = t.size(b);
    const double* av = t.val(a);
    const double* bv = t.val(b);
    double* ga = t.grad(a);
    double* gb = t.grad(b);
    double* gs = t.param_grad(s);
    for (std::size_t r = 0; r < na; ++r) {
      const auto row = sm.row(static_cast<int>(r));
      double inner = 0.0;
      const double gar = g * av[r];
      double* gsr = gs + r * nb;
      for (std::size_t c = 0; c < nb; ++c) {
        inner += row[c] * bv[c];
        gb[c] += gar * row[c];
        gsr[c] += gar * bv[c];
      }
      ga[r] += g * inner;
    }
  };
  return out;
}

Tape::Id Tape::dot(Id a, Id b) {
  const std::size_t n = size(a);
  require_size(b, n, "dot");
  const Id out = push(1);
  const double* av = val(a);
  const double* bv = val(b);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) total += av[k] * bv[k];
  *val(out) = total;
  nodes_.back().back = [a, b, out](Tape& t) {
    const double g = *t.grad(out);
    const std::size_t n = t.size(a);
    const double* av = t.val(a);
    const double* bv = t.val(b);
    double* ga = t.grad(a);
    double* gb = t.grad(b);
    for (std::size_t k = 0; k < n; ++k) {
      ga[k] += g * bv[k];
      gb[k] += g * av[k];
    }
  };
  return out;
}

Tape::Id Tape::sum(std::span<const Id> terms) {
  if (terms.empty()) throw Error("Tape::sum: no terms");
  const std::size_t n = size(terms[0]);
  for (Id term : terms) require_size(term, n, "sum");
  const Id out = push(n);
  double* y = val(out);
  for (Id term : terms) {
    const double* x = val(term);
    for (std::size_t k = 0; k < n; ++k) y[k] += x[k];
  }
  nodes_.back().back = [ids = std::vector<Id>(terms.begin(), terms.end()), out](Tape& t) {
    const std::size_t n = t.size(out);
    const double* go = t.grad(out);
    for (Id term : ids) {
      double* g = t.grad(term);
      for (std::size_t k = 0; k < n; ++k) g[k] += go[k];
    }
  };
  return out;
}

Tape::Id Tape::scale(Id x, double factor) {
  const std::size_t n = size(x);
  const Id out = push(n);
  const double* xv = val(x);
  double* y = val(out);
  for (std::size_t k = 0; k < n; ++k) y[k] = factor * xv[k];
  nodes_.back().back = [x, factor, out](Tape& t) {
    const std::size_t n = t.size(out);
    const double* go = t.grad(out);
    double* g = t.grad(x);
    for (std::size_t k = 0; k < n; ++k) g[k] += factor * go[k];
  };
  return out;
}

Tape::Id Tape::stack(std::span<const Id> scalars) {
  for (Id s : scalars) require_size(s, 1, "stack");
  const Id out = push(scalars.size());
  double* y = val(out);
  for (std::size_t k = 0; k < scalars.size(); ++k) y[k] = *val(scalars[k]);
  nodes_.back().back = [ids = std::vector<Id>(scalars.begin(), scalars.end()), out](Tape& t) {
    const double* go = t.grad(out);
    for (std::size_t k = 0; k < ids.size(); ++k) *t.grad(ids[k]) += go[k];
  };
  return out;
}

Tape::Id Tape::softmax(Id x) {
  const std::size_t n = size(x);
  const Id out = push(n);
  const double* xv = val(x);
  double* y = val(out);
  const double top = *std::max_element(xv, xv + n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    y[k] = std::exp(xv[k] - top);
    total += y[k];
  }
  for (std::size_t k = 0; k < n; ++k) y[k] /= total;
  nodes_.back().back = [x, out](Tape& t) {
    const std::size_t n = t.size(out);
    const double* y = t.val(out);
    const double* go = t.grad(out);
    double* g = t.grad(x);
    double inner = 0.0;
    for (std::size_t k = 0; k < n; ++k) inner += go[k] * y[k];
    for (std::size_t k = 0; k < n; ++k) g[k] += y[k] * (go[k] - inner);
  };
  return out;
}

Tape::Id Tape::weighted_sum(Id weights, std::span<const Id> vectors) {
  require_size(weights, vectors.size(), "weighted_sum");
  if (vectors.empty()) throw Error("Tape::weighted_sum: no vectors");
  const std::size_t n = size(vectors[0]);
  for (Id v : vectors) require_size(v, n, "weighted_sum");
  const Id out = push(n);
  double* y = val(out);
  const double* w = val(weights);
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    const double* v = val(vectors[k]);
    for (std::size_t c = 0; c < n; ++c) y[c] += w[k] * v[c];
  }
  nodes_.back().back = [weights, ids = std::vector<Id>(vectors.begin(), vectors.end()), out](Tape& t) {
    const std::size_t n = t.size(out);
    const double* go = t.grad(out);
    const double* w = t.val(weights);
    double* gw = t.grad(weights);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const double* v = t.val(ids[k]);
      double* gv = t.grad(ids[k]);
      double inner = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        inner += go[c] * v[c];
        gv[c] += w[k] * go[c];
      }
      gw[k] += inner;
    }
  };
  return out;
}

Tape::Id Tape::normalize(Id x) {
  const std::size_t n = size(x);
  const Id out = push(n);
  const double* xv = val(x);
  double* y = val(out);
  double sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) sq += xv[k] * xv[k];
  const double norm = std::max(std::sqrt(sq), 1e-12);
  for (std::size_t k = 0; k < n; ++k) y[k] = xv[k] / norm;
  nodes_.back().back = [x, norm, out](Tape& t) {
    const std::size_t n = t.size(out);
    const double* y = t.val(out);
    const double* go = t.grad(out);
    double* g = t.grad(x);
    double inner = 0.0;
    for (std::size_t k = 0; k < n; ++k) inner += y[k] * go[k];
    for (std::size_t k = 0; k < n; ++k) g[k] += (go[k] - y[k] * inner) / norm;
  };
  return out;
}

Tape::Id Tape::margin_loss(Id anchor, Id positive, std::span<const Id> negatives, double margin) {
  const std::size_t n = size(anchor);
  require_size(positive, n, "margin_loss");
  for (Id neg : negatives) require_size(neg, n, "margin_loss");
  const Id out = push(1);
  const double* a = val(anchor);
  const double* p = val(positive);
  double pos_score = 0.0;
  for (std::size_t k = 0; k < n; ++k) pos_score += a[k] * p[k];
  std::vector<char> active(negatives.size(), 0);
  double total = 0.0;
  for (std::size_t m = 0; m < negatives.size(); ++m) {
    const double* v = val(negatives[m]);
    double neg_score = 0.0;
    for (std::size_t k = 0; k < n; ++k) neg_score += a[k] * v[k];
    const double h = margin - pos_score + neg_score;
    if (h > 0.0) {
      total += h;
      active[m] = 1;
    }
  }
  *val(out) = total;
  nodes_.back().back = [anchor, positive, ids = std::vector<Id>(negatives.begin(), negatives.end()),
                        active = std::move(active), out](Tape& t) {
    const double g = *t.grad(out);
    if (g == 0.0) return;
    const std::size_t n = t.size(anchor);
    const double* a = t.val(anchor);
    const double* p = t.val(positive);
    double* ga = t.grad(anchor);
    double* gp = t.grad(positive);
    for (std::size_t m = 0; m < ids.size(); ++m) {
      if (!active[m]) continue;
      const double* v = t.val(ids[m]);
      double* gv = t.grad(ids[m]);
      for (std::size_t k = 0; k < n; ++k) {
        ga[k] += g * (v[k] - p[k]);
        gp[k] -= g * a[k];
        gv[k] += g * a[k];
      }
    }
  };
  return out;
}

Tape::Id Tape::attentive_pool(std::span<const float> frames, int dim, int first, int last, const Mlp2& mlp) {
  const std::size_t d = static_cast<std::size_t>(dim);
  if (dim <= 0 || frames.size() % d != 0 || first < 0 || last < first ||
      static_cast<std::size_t>(last + 1) * d > frames.size()) {
    throw Error("Tape::attentive_pool: frame range out of bounds");
  }
  const Matrix& w1 = param(mlp.w1);
  const Matrix& w2 = param(mlp.w2);
  if (w1.cols() != dim || w2.rows() != 1 || w2.cols() != w1.rows()) {
    throw Error("Tape::attentive_pool: weighting MLP shape mismatch");
  }
  const std::size_t count = static_cast<std::size_t>(last - first + 1);
  const std::size_t hidden = static_cast<std::size_t>(w1.rows());
  const auto b1 = param(mlp.b1).data();
  const double b2 = param(mlp.b2).data()[0];
  const float* base = frames.data() + static_cast<std::size_t>(first) * d;

  std::vector<double> act(count * hidden);
  std::vector<double> weights(count);
  for (std::size_t f = 0; f < count; ++f) {
    const float* x = base + f * d;
    double score = b2;
    for (std::size_t h = 0; h < hidden; ++h) {
      const auto row = w1.row(static_cast<int>(h));
      double z = b1[h];
      for (std::size_t c = 0; c < d; ++c) z += row[c] * x[c];
      const double a = std::tanh(z);
      act[f * hidden + h] = a;
      score += w2(0, static_cast<int>(h)) * a;
    }
    weights[f] = score;
  }
  const double top = *std::max_element(weights.begin(), weights.end());
  double total = 0.0;
  for (double& w : weights) {
    w = std::exp(w - top);
    total += w;
  }
  for (double& w : weights) w /= total;

  const Id out = push(d);
  double* y = val(out);
  for (std::size_t f = 0; f < count; ++f) {
    const float* x = base + f * d;
    for (std::size_t c = 0; c < d; ++c) y[c] += weights[f] * x[c];
  }
  nodes_.back().back = [base, d, count, hidden, mlp, act = std::move(act), weights = std::move(weights),
                        out](Tape& t) {
    const double* go = t.grad(out);
    const Matrix& w2 = t.param(mlp.w2);
    double* gw1 = t.param_grad(mlp.w1);
    double* gb1 = t.param_grad(mlp.b1);
    double* gw2 = t.param_grad(mlp.w2);
    double* gb2 = t.param_grad(mlp.b2);
    // d(out)/d(weight_f) = x_f; then back through the softmax.
    std::vector<double> gweight(count);
    double mean = 0.0;
    for (std::size_t f = 0; f < count; ++f) {
      const float* x = base + f * d;
      double inner = 0.0;
      for (std::size_t c = 0; c < d; ++c) inner += go[c] * x[c];
      gweight[f] = inner;
      mean += weights[f] * inner;
    }
    for (std::size_t f = 0; f < count; ++f) {
      const double gs = weights[f] * (gweight[f] - mean);
      if (gs == 0.0) continue;
      *gb2 += gs;
      const float* x = base + f * d;
      for (std::size_t h = 0; h < hidden; ++h) {
        const double a = act[f * hidden + h];
        gw2[h] += gs * a;
        const double gz = gs * w2(0, static_cast<int>(h)) * (1.0 - a * a);
        gb1[h] += gz;
        double* gw1r = gw1 + h * d;
        for (std::size_t c = 0; c < d; ++c) gw1r[c] += gz * x[c];
      }
    }
  };
  return out;
}

void Tape::backward(Id root) {
  require_size(root, 1, "backward");
  if (!grad_store_) throw Error("Tape::backward: tape was built over a read-only parameter store");
  grads_.assign(values_.size(), 0.0);
  *grad(root) = 1.0;
  for (std::size_t k = static_cast<std::size_t>(root) + 1; k-- > 0;) {
    if (nodes_[k].back) nodes_[k].back(*this);
  }
}

}  // namespace speechparse::nn
