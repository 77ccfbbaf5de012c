#include "evoloss/tape.hpp"

#include <cmath>
#include <utility>

#include "evoloss/errors.hpp"

namespace evoloss {

namespace {
constexpr double kProbEps = 1e-12;

double clamp_prob(double p) {
  if (p < kProbEps) return kProbEps;
  if (p > 1.0 - kProbEps) return 1.0 - kProbEps;
  return p;
}
}  // namespace

Tape::Tape(const ParamSet& params, bool track_gradients)
    : params_(params), track_(track_gradients) {
  nodes_.reserve(64 + params.count());
  for (const auto& [name, value] : params_) {
    Node node;
    node.external = &value;
    node.needs_grad = track_;
    leaf_index_[name] = nodes_.size();
    nodes_.push_back(std::move(node));
  }
}

Var Tape::leaf(const std::string& name) const {
  auto it = leaf_index_.find(name);
  if (it == leaf_index_.end()) {
    throw ValueError("Tape: no parameter leaf named '" + name + "'");
  }
  return Var{it->second};
}

Var Tape::constant(DenseArray value) {
  Node node;
  node.owned = std::move(value);
  node.needs_grad = false;
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::make_node(DenseArray value, bool needs_grad,
                    std::function<void(Tape&, std::size_t)> backprop) {
  Node node;
  node.owned = std::move(value);
  node.needs_grad = track_ && needs_grad;
  if (node.needs_grad) node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

void Tape::accumulate(std::size_t idx, const DenseArray& g) {
  Node& node = nodes_[idx];
  if (!node.needs_grad) return;
  if (node.grad.empty()) {
    node.grad = g;
    return;
  }
  double* dst = node.grad.data();
  const double* src = g.data();
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

void Tape::accumulate_owned(std::size_t idx, DenseArray&& g) {
  Node& node = nodes_[idx];
  if (!node.needs_grad) return;
  if (node.grad.empty()) {
    node.grad = std::move(g);
    return;
  }
  accumulate(idx, g);
}

void Tape::check_scalar(Var v, const char* op) const {
  if (value(v).size() != 1) {
    throw ShapeError(std::string(op) + ": expected a scalar, got " +
                     value(v).shape_str());
  }
}

Var Tape::matmul(Var a, Var b) {
  DenseArray y = evoloss::matmul(value(a), value(b));
  const std::size_t ai = a.idx, bi = b.idx;
  return make_node(std::move(y), needs(a) || needs(b),
                   [ai, bi](Tape& t, std::size_t self) {
                     const DenseArray& g = t.grad_of(self);
                     if (t.nodes_[ai].needs_grad) {
                       t.accumulate_owned(ai, matmul_nt(g, t.value(Var{bi})));
                     }
                     if (t.nodes_[bi].needs_grad) {
                       t.accumulate_owned(bi, matmul_tn(t.value(Var{ai}), g));
                     }
                   });
}

Var Tape::add_rowvec(Var m, Var v) {
  DenseArray y = value(m);
  add_rowvec_inplace(y, value(v));
  const std::size_t mi = m.idx, vi = v.idx;
  return make_node(std::move(y), needs(m) || needs(v),
                   [mi, vi](Tape& t, std::size_t self) {
                     const DenseArray& g = t.grad_of(self);
                     t.accumulate(mi, g);
                     if (t.nodes_[vi].needs_grad) {
                       const std::size_t rows = g.rows(), n = g.cols();
                       DenseArray gv({n});
                       for (std::size_t i = 0; i < rows; ++i) {
                         const double* row = g.data() + i * n;
                         for (std::size_t j = 0; j < n; ++j) gv[j] += row[j];
                       }
                       t.accumulate_owned(vi, std::move(gv));
                     }
                   });
}

Var Tape::matvec(Var m, Var v) {
  const DenseArray& mm = value(m);
  const DenseArray& vv = value(v);
  if (mm.rank() != 2 || vv.rank() != 1 || mm.cols() != vv.size()) {
    throw_shape_mismatch("matvec", mm, vv);
  }
  const std::size_t n = mm.rows(), k = mm.cols();
  DenseArray y({n});
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = mm.data() + i * k;
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += row[j] * vv[j];
    y[i] = s;
  }
  const std::size_t mi = m.idx, vi = v.idx;
  return make_node(std::move(y), needs(m) || needs(v),
                   [mi, vi, n, k](Tape& t, std::size_t self) {
                     const DenseArray& g = t.grad_of(self);
                     const DenseArray& mm2 = t.value(Var{mi});
                     const DenseArray& vv2 = t.value(Var{vi});
                     if (t.nodes_[mi].needs_grad) {
                       DenseArray gm({n, k});
                       for (std::size_t i = 0; i < n; ++i) {
                         double* row = gm.data() + i * k;
                         for (std::size_t j = 0; j < k; ++j) row[j] = g[i] * vv2[j];
                       }
                       t.accumulate_owned(mi, std::move(gm));
                     }
                     if (t.nodes_[vi].needs_grad) {
                       DenseArray gv({k});
                       for (std::size_t i = 0; i < n; ++i) {
                         const double* row = mm2.data() + i * k;
                         for (std::size_t j = 0; j < k; ++j) gv[j] += g[i] * row[j];
                       }
                       t.accumulate_owned(vi, std::move(gv));
                     }
                   });
}

Var Tape::relu(Var x) {
  DenseArray y = evoloss::relu(value(x));
  const std::size_t xi = x.idx;
  return make_node(std::move(y), needs(x), [xi](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad_of(self);
    const DenseArray& y2 = t.value(Var{self});
    DenseArray gx(y2.shape());
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = y2[i] > 0.0 ? g[i] : 0.0;
    t.accumulate_owned(xi, std::move(gx));
  });
}

Var Tape::logistic(Var x) {
  DenseArray y = value(x);
  for (double& v : y.values()) v = clamp_prob(1.0 / (1.0 + std::exp(-v)));
  const std::size_t xi = x.idx;
  return make_node(std::move(y), needs(x), [xi](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad_of(self);
    const DenseArray& y2 = t.value(Var{self});
    DenseArray gx(y2.shape());
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = g[i] * y2[i] * (1.0 - y2[i]);
    t.accumulate_owned(xi, std::move(gx));
  });
}

Var Tape::axpb(Var x, double a, double b) {
  DenseArray y = value(x);
  for (double& v : y.values()) v = a * v + b;
  const std::size_t xi = x.idx;
  return make_node(std::move(y), needs(x), [xi, a](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad_of(self);
    DenseArray gx(g.shape());
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = a * g[i];
    t.accumulate_owned(xi, std::move(gx));
  });
}

Var Tape::add(Var a, Var b) {
  const DenseArray& av = value(a);
  const DenseArray& bv = value(b);
  if (!av.same_shape(bv)) throw_shape_mismatch("add", av, bv);
  DenseArray y = av;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  const std::size_t ai = a.idx, bi = b.idx;
  return make_node(std::move(y), needs(a) || needs(b),
                   [ai, bi](Tape& t, std::size_t self) {
                     const DenseArray& g = t.grad_of(self);
                     t.accumulate(ai, g);
                     t.accumulate(bi, g);
                   });
}

Var Tape::add_scalar(Var v, Var s) {
  check_scalar(s, "add_scalar");
  DenseArray y = value(v);
  const double sv = value(s)[0];
  for (double& x : y.values()) x += sv;
  const std::size_t vi = v.idx, si = s.idx;
  return make_node(std::move(y), needs(v) || needs(s),
                   [vi, si](Tape& t, std::size_t self) {
                     const DenseArray& g = t.grad_of(self);
                     t.accumulate(vi, g);
                     if (t.nodes_[si].needs_grad) {
                       double sum = 0.0;
                       for (std::size_t i = 0; i < g.size(); ++i) sum += g[i];
                       t.accumulate_owned(si, DenseArray::scalar(sum));
                     }
                   });
}

Var Tape::segment_mean_rows(Var x, std::size_t segment) {
  DenseArray y = evoloss::segment_mean_rows(value(x), segment);
  const std::size_t xi = x.idx;
  return make_node(std::move(y), needs(x),
                   [xi, segment](Tape& t, std::size_t self) {
                     const DenseArray& g = t.grad_of(self);
                     const std::size_t groups = g.rows(), n = g.cols();
                     const double inv = 1.0 / static_cast<double>(segment);
                     DenseArray gx({groups * segment, n});
                     for (std::size_t r = 0; r < groups * segment; ++r) {
                       const double* grow = g.data() + (r / segment) * n;
                       double* xrow = gx.data() + r * n;
                       for (std::size_t j = 0; j < n; ++j) xrow[j] = grow[j] * inv;
                     }
                     t.accumulate_owned(xi, std::move(gx));
                   });
}

Var Tape::concat_cols(Var a, Var b) {
  const DenseArray& av = value(a);
  const DenseArray& bv = value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.rows() != bv.rows()) {
    throw_shape_mismatch("concat_cols", av, bv);
  }
  const std::size_t n = av.rows(), c1 = av.cols(), c2 = bv.cols();
  DenseArray y({n, c1 + c2});
  for (std::size_t i = 0; i < n; ++i) {
    double* row = y.data() + i * (c1 + c2);
    const double* ra = av.data() + i * c1;
    const double* rb = bv.data() + i * c2;
    for (std::size_t j = 0; j < c1; ++j) row[j] = ra[j];
    for (std::size_t j = 0; j < c2; ++j) row[c1 + j] = rb[j];
  }
  const std::size_t ai = a.idx, bi = b.idx;
  return make_node(std::move(y), needs(a) || needs(b),
                   [ai, bi, n, c1, c2](Tape& t, std::size_t self) {
                     const DenseArray& g = t.grad_of(self);
                     if (t.nodes_[ai].needs_grad) {
                       DenseArray ga({n, c1});
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t j = 0; j < c1; ++j) {
                           ga.at(i, j) = g.at(i, j);
                         }
                       }
                       t.accumulate_owned(ai, std::move(ga));
                     }
                     if (t.nodes_[bi].needs_grad) {
                       DenseArray gb({n, c2});
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t j = 0; j < c2; ++j) {
                           gb.at(i, j) = g.at(i, c1 + j);
                         }
                       }
                       t.accumulate_owned(bi, std::move(gb));
                     }
                   });
}

Var Tape::roll_rows(Var x, std::size_t shift) {
  const DenseArray& xv = value(x);
  if (xv.rank() != 2) {
    throw ShapeError("roll_rows: expected rank-2, got " + xv.shape_str());
  }
  const std::size_t n = xv.rows(), k = xv.cols();
  DenseArray y({n, k});
  for (std::size_t i = 0; i < n; ++i) {
    const double* src = xv.data() + ((i + shift) % n) * k;
    double* dst = y.data() + i * k;
    for (std::size_t j = 0; j < k; ++j) dst[j] = src[j];
  }
  const std::size_t xi = x.idx;
  return make_node(std::move(y), needs(x),
                   [xi, shift, n, k](Tape& t, std::size_t self) {
                     const DenseArray& g = t.grad_of(self);
                     DenseArray gx({n, k});
                     for (std::size_t i = 0; i < n; ++i) {
                       const double* src = g.data() + i * k;
                       double* dst = gx.data() + ((i + shift) % n) * k;
                       for (std::size_t j = 0; j < k; ++j) dst[j] += src[j];
                     }
                     t.accumulate_owned(xi, std::move(gx));
                   });
}

Var Tape::rows_l2_dist(Var a, Var b) {
  const DenseArray& av = value(a);
  const DenseArray& bv = value(b);
  if (!av.same_shape(bv) || av.rank() != 2) {
    throw_shape_mismatch("rows_l2_dist", av, bv);
  }
  const std::size_t n = av.rows(), k = av.cols();
  DenseArray y({n});
  for (std::size_t i = 0; i < n; ++i) {
    const double* ra = av.data() + i * k;
    const double* rb = bv.data() + i * k;
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double d = ra[j] - rb[j];
      s += d * d;
    }
    y[i] = std::sqrt(s);
  }
  const std::size_t ai = a.idx, bi = b.idx;
  return make_node(
      std::move(y), needs(a) || needs(b),
      [ai, bi, n, k](Tape& t, std::size_t self) {
        const DenseArray& g = t.grad_of(self);
        const DenseArray& dist = t.value(Var{self});
        const DenseArray& av2 = t.value(Var{ai});
        const DenseArray& bv2 = t.value(Var{bi});
        DenseArray ga({n, k});
        for (std::size_t i = 0; i < n; ++i) {
          if (dist[i] == 0.0) continue;  // subgradient 0 at coincident rows
          const double scale = g[i] / dist[i];
          const double* ra = av2.data() + i * k;
          const double* rb = bv2.data() + i * k;
          double* row = ga.data() + i * k;
          for (std::size_t j = 0; j < k; ++j) row[j] = scale * (ra[j] - rb[j]);
        }
        if (t.nodes_[bi].needs_grad) {
          DenseArray gb({n, k});
          for (std::size_t i = 0; i < n * k; ++i) gb[i] = -ga[i];
          t.accumulate_owned(bi, std::move(gb));
        }
        if (t.nodes_[ai].needs_grad) t.accumulate_owned(ai, std::move(ga));
      });
}

Var Tape::mean(Var x) {
  const DenseArray& xv = value(x);
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i];
  const std::size_t xi = x.idx, n = xv.size();
  return make_node(DenseArray::scalar(s / static_cast<double>(n)), needs(x),
                   [xi, n](Tape& t, std::size_t self) {
                     const double g = t.grad_of(self)[0] / static_cast<double>(n);
                     t.accumulate_owned(
                         xi, DenseArray::full(t.value(Var{xi}).shape(), g));
                   });
}

Var Tape::mse(Var a, Var b) {
  const DenseArray& av = value(a);
  const DenseArray& bv = value(b);
  if (!av.same_shape(bv)) throw_shape_mismatch("mse", av, bv);
  const std::size_t n = av.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = av[i] - bv[i];
    s += d * d;
  }
  const std::size_t ai = a.idx, bi = b.idx;
  return make_node(
      DenseArray::scalar(s / static_cast<double>(n)), needs(a) || needs(b),
      [ai, bi, n](Tape& t, std::size_t self) {
        const double g = t.grad_of(self)[0] * 2.0 / static_cast<double>(n);
        const DenseArray& av2 = t.value(Var{ai});
        const DenseArray& bv2 = t.value(Var{bi});
        if (t.nodes_[ai].needs_grad) {
          DenseArray ga(av2.shape());
          for (std::size_t i = 0; i < n; ++i) ga[i] = g * (av2[i] - bv2[i]);
          t.accumulate_owned(ai, std::move(ga));
        }
        if (t.nodes_[bi].needs_grad) {
          DenseArray gb(bv2.shape());
          for (std::size_t i = 0; i < n; ++i) gb[i] = g * (bv2[i] - av2[i]);
          t.accumulate_owned(bi, std::move(gb));
        }
      });
}

Var Tape::bce_mean(Var p, std::vector<double> labels) {
  const DenseArray& pv = value(p);
  if (pv.size() != labels.size()) {
    throw ShapeError("bce_mean: " + std::to_string(pv.size()) +
                     " probabilities vs " + std::to_string(labels.size()) +
                     " labels");
  }
  const std::size_t n = pv.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pc = clamp_prob(pv[i]);
    s -= labels[i] * std::log(pc) + (1.0 - labels[i]) * std::log(1.0 - pc);
  }
  const std::size_t pi = p.idx;
  return make_node(
      DenseArray::scalar(s / static_cast<double>(n)), needs(p),
      [pi, labels = std::move(labels), n](Tape& t, std::size_t self) {
        const double g = t.grad_of(self)[0] / static_cast<double>(n);
        const DenseArray& pv2 = t.value(Var{pi});
        DenseArray gp(pv2.shape());
        for (std::size_t i = 0; i < n; ++i) {
          const double pc = clamp_prob(pv2[i]);
          gp[i] = g * (-labels[i] / pc + (1.0 - labels[i]) / (1.0 - pc));
        }
        t.accumulate_owned(pi, std::move(gp));
      });
}

Var Tape::softmax_ce(Var logits, std::vector<int> labels) {
  const DenseArray& z = value(logits);
  if (z.rank() != 2 || z.rows() != labels.size()) {
    throw ShapeError("softmax_ce: logits " + z.shape_str() + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = z.rows(), c = z.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = z.data() + i * c;
    double mx = row[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double lse = 0.0;
    for (std::size_t j = 0; j < c; ++j) lse += std::exp(row[j] - mx);
    lse = mx + std::log(lse);
    total += lse - row[labels[i]];
  }
  const std::size_t zi = logits.idx;
  return make_node(
      DenseArray::scalar(total / static_cast<double>(n)), needs(logits),
      [zi, labels = std::move(labels), n, c](Tape& t, std::size_t self) {
        const double g = t.grad_of(self)[0] / static_cast<double>(n);
        const DenseArray& z2 = t.value(Var{zi});
        DenseArray gz({n, c});
        for (std::size_t i = 0; i < n; ++i) {
          const double* row = z2.data() + i * c;
          double mx = row[0];
          for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
          double denom = 0.0;
          for (std::size_t j = 0; j < c; ++j) denom += std::exp(row[j] - mx);
          double* grow = gz.data() + i * c;
          for (std::size_t j = 0; j < c; ++j) {
            grow[j] = g * std::exp(row[j] - mx) / denom;
          }
          grow[labels[i]] -= g;
        }
        t.accumulate_owned(zi, std::move(gz));
      });
}

Var Tape::weighted_sum(const std::vector<Var>& xs,
                       const std::vector<double>& ws) {
  if (xs.size() != ws.size()) {
    throw ValueError("weighted_sum: " + std::to_string(xs.size()) +
                     " terms vs " + std::to_string(ws.size()) + " weights");
  }
  double total = 0.0;
  bool any_grad = false;
  std::vector<std::size_t> idx(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    check_scalar(xs[i], "weighted_sum");
    total += ws[i] * value(xs[i])[0];
    any_grad = any_grad || needs(xs[i]);
    idx[i] = xs[i].idx;
  }
  return make_node(DenseArray::scalar(total), any_grad,
                   [idx = std::move(idx), ws](Tape& t, std::size_t self) {
                     const double g = t.grad_of(self)[0];
                     for (std::size_t i = 0; i < idx.size(); ++i) {
                       if (!t.nodes_[idx[i]].needs_grad) continue;
                       t.accumulate_owned(idx[i],
                                          DenseArray::scalar(g * ws[i]));
                     }
                   });
}

Var Tape::stop_gradient(Var x) { return constant(value(x)); }

GradSet Tape::backward(Var loss) {
  if (!track_) throw ValueError("backward: tape does not track gradients");
  if (backward_done_) {
    throw ValueError("backward: already called on this recording");
  }
  backward_done_ = true;
  check_scalar(loss, "backward");
  nodes_[loss.idx].grad = DenseArray::scalar(1.0);
  for (std::size_t i = loss.idx + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.grad.empty() && node.backprop) node.backprop(*this, i);
  }
  GradSet out;
  for (const auto& [name, idx] : leaf_index_) {
    Node& node = nodes_[idx];
    if (node.grad.empty()) {
      out.set(name, DenseArray::zeros(node.external->shape()));
    } else {
      out.set(name, std::move(node.grad));
    }
  }
  return out;
}

}  // namespace evoloss
