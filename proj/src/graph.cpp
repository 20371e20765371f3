#include "gift/graph.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace gift {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<EMat>;
using MapC = Eigen::Map<const EMat>;

MapC cmap(const Tensor& t) { return MapC(t.data.data(), t.rows(), t.cols()); }
MapM mmap(Tensor& t) { return MapM(t.data.data(), t.rows(), t.cols()); }

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double gauss_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }
double gauss_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                " vs " + b.shape_str());
}

}  // namespace

Graph::Id Graph::push(Tensor value, std::function<void(Graph&, Node&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size()) - 1;
}

double Graph::fault_factor(const char* op) const {
  return fault_op_ == op ? 1.5 : 1.0;
}

void Graph::reset() {
  nodes_.clear();
  param_cache_.clear();
}

Graph::Id Graph::input(Tensor t) { return push(std::move(t)); }

Graph::Id Graph::param(Parameter& p) {
  auto it = param_cache_.find(&p);
  if (it != param_cache_.end()) return it->second;
  Id id = push(p.value);
  nodes_[id].bound = &p;
  param_cache_.emplace(&p, id);
  return id;
}

Graph::Id Graph::add(Id a, Id b) {
  check_same_shape(val(a), val(b), "add");
  Tensor out = val(a);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += val(b).data[i];
  return push(std::move(out), [a, b](Graph& g, Node& self) {
    Tensor& ga = g.grad_mut(a);
    Tensor& gb = g.grad_mut(b);
    for (std::size_t i = 0; i < self.grad.data.size(); ++i) {
      ga.data[i] += self.grad.data[i];
      gb.data[i] += self.grad.data[i];
    }
  });
}

Graph::Id Graph::sub(Id a, Id b) {
  check_same_shape(val(a), val(b), "sub");
  Tensor out = val(a);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= val(b).data[i];
  return push(std::move(out), [a, b](Graph& g, Node& self) {
    Tensor& ga = g.grad_mut(a);
    Tensor& gb = g.grad_mut(b);
    for (std::size_t i = 0; i < self.grad.data.size(); ++i) {
      ga.data[i] += self.grad.data[i];
      gb.data[i] -= self.grad.data[i];
    }
  });
}

Graph::Id Graph::add_rowvec(Id x, Id v) {
  const Tensor& xv = val(x);
  const Tensor& vv = val(v);
  if (vv.rows() != 1 || vv.cols() != xv.cols())
    throw std::invalid_argument("add_rowvec: want 1x" + std::to_string(xv.cols()) +
                                ", got " + vv.shape_str());
  Tensor out = xv;
  for (int i = 0; i < xv.rows(); ++i)
    for (int j = 0; j < xv.cols(); ++j) out.at(i, j) += vv.at(0, j);
  return push(std::move(out), [x, v](Graph& g, Node& self) {
    Tensor& gx = g.grad_mut(x);
    Tensor& gv = g.grad_mut(v);
    for (std::size_t i = 0; i < self.grad.data.size(); ++i) gx.data[i] += self.grad.data[i];
    const int r = self.grad.rows(), c = self.grad.cols();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) gv.at(0, j) += self.grad.at(i, j);
  });
}

Graph::Id Graph::scale(Id a, double c) {
  Tensor out = val(a);
  for (double& v : out.data) v *= c;
  return push(std::move(out), [a, c](Graph& g, Node& self) {
    Tensor& ga = g.grad_mut(a);
    for (std::size_t i = 0; i < self.grad.data.size(); ++i)
      ga.data[i] += c * self.grad.data[i];
  });
}

Graph::Id Graph::mul(Id a, Id b) {
  check_same_shape(val(a), val(b), "mul");
  Tensor out = val(a);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= val(b).data[i];
  return push(std::move(out), [a, b](Graph& g, Node& self) {
    const Tensor& av = g.val(a);
    const Tensor& bv = g.val(b);
    Tensor& ga = g.grad_mut(a);
    Tensor& gb = g.grad_mut(b);
    for (std::size_t i = 0; i < self.grad.data.size(); ++i) {
      ga.data[i] += self.grad.data[i] * bv.data[i];
      gb.data[i] += self.grad.data[i] * av.data[i];
    }
  });
}

Graph::Id Graph::matmul(Id a, Id b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  if (av.cols() != bv.rows())
    throw std::invalid_argument("matmul: " + av.shape_str() + " x " + bv.shape_str());
  Tensor out({av.rows(), bv.cols()});
  mmap(out).noalias() = cmap(av) * cmap(bv);
  return push(std::move(out), [a, b](Graph& g, Node& self) {
    // dA += dC·Bᵀ ; dB += Aᵀ·dC
    MapC dC(self.grad.data.data(), self.grad.rows(), self.grad.cols());
    mmap(g.grad_mut(a)).noalias() += dC * cmap(g.val(b)).transpose();
    mmap(g.grad_mut(b)).noalias() += cmap(g.val(a)).transpose() * dC;
  });
}

Graph::Id Graph::matmul_nt(Id a, Id b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  if (av.cols() != bv.cols())
    throw std::invalid_argument("matmul_nt: " + av.shape_str() + " x " + bv.shape_str() + "ᵀ");
  Tensor out({av.rows(), bv.rows()});
  mmap(out).noalias() = cmap(av) * cmap(bv).transpose();
  return push(std::move(out), [a, b](Graph& g, Node& self) {
    // C = A·Bᵀ: dA += dC·B ; dB += dCᵀ·A
    MapC dC(self.grad.data.data(), self.grad.rows(), self.grad.cols());
    mmap(g.grad_mut(a)).noalias() += dC * cmap(g.val(b));
    mmap(g.grad_mut(b)).noalias() += dC.transpose() * cmap(g.val(a));
  });
}

Graph::Id Graph::slice_rows(Id a, int r0, int n) {
  const Tensor& av = val(a);
  if (r0 < 0 || n < 0 || r0 + n > av.rows())
    throw std::out_of_range("slice_rows: [" + std::to_string(r0) + "," +
                            std::to_string(r0 + n) + ") of " + av.shape_str());
  const int c = av.cols();
  Tensor out({n, c});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) = av.at(r0 + i, j);
  return push(std::move(out), [a, r0](Graph& g, Node& self) {
    Tensor& ga = g.grad_mut(a);
    for (int i = 0; i < self.grad.rows(); ++i)
      for (int j = 0; j < self.grad.cols(); ++j)
        ga.at(r0 + i, j) += self.grad.at(i, j);
  });
}

Graph::Id Graph::slice_cols(Id a, int c0, int n) {
  const Tensor& av = val(a);
  if (c0 < 0 || n < 0 || c0 + n > av.cols())
    throw std::out_of_range("slice_cols: [" + std::to_string(c0) + "," +
                            std::to_string(c0 + n) + ") of " + av.shape_str());
  Tensor out({av.rows(), n});
  for (int i = 0; i < av.rows(); ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = av.at(i, c0 + j);
  return push(std::move(out), [a, c0](Graph& g, Node& self) {
    Tensor& ga = g.grad_mut(a);
    for (int i = 0; i < self.grad.rows(); ++i)
      for (int j = 0; j < self.grad.cols(); ++j)
        ga.at(i, c0 + j) += self.grad.at(i, j);
  });
}

Graph::Id Graph::gather_rows(Id a, std::vector<int> row_index) {
  const Tensor& av = val(a);
  const int c = av.cols();
  Tensor out({static_cast<int>(row_index.size()), c});
  for (std::size_t m = 0; m < row_index.size(); ++m) {
    if (row_index[m] < 0 || row_index[m] >= av.rows())
      throw std::out_of_range("gather_rows: row index out of range");
    for (int j = 0; j < c; ++j) out.at(static_cast<int>(m), j) = av.at(row_index[m], j);
  }
  return push(std::move(out), [a, row_index = std::move(row_index)](Graph& g, Node& self) {
    Tensor& ga = g.grad_mut(a);
    for (std::size_t m = 0; m < row_index.size(); ++m)
      for (int j = 0; j < self.grad.cols(); ++j)
        ga.at(row_index[m], j) += self.grad.at(static_cast<int>(m), j);
  });
}

Graph::Id Graph::concat_cols(const std::vector<Id>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
  const int r = val(parts[0]).rows();
  int total = 0;
  for (Id p : parts) {
    if (val(p).rows() != r) throw std::invalid_argument("concat_cols: row mismatch");
    total += val(p).cols();
  }
  Tensor out({r, total});
  int off = 0;
  for (Id p : parts) {
    const Tensor& pv = val(p);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < pv.cols(); ++j) out.at(i, off + j) = pv.at(i, j);
    off += pv.cols();
  }
  return push(std::move(out), [parts](Graph& g, Node& self) {
    int off2 = 0;
    for (Id p : parts) {
      Tensor& gp = g.grad_mut(p);
      for (int i = 0; i < gp.rows(); ++i)
        for (int j = 0; j < gp.cols(); ++j) gp.at(i, j) += self.grad.at(i, off2 + j);
      off2 += gp.cols();
    }
  });
}

Graph::Id Graph::softmax_rows(Id a, const std::vector<std::uint8_t>* col_mask) {
  const Tensor& av = val(a);
  const int r = av.rows(), c = av.cols();
  std::vector<std::uint8_t> mask;
  if (col_mask) {
    if (static_cast<int>(col_mask->size()) != c)
      throw std::invalid_argument("softmax_rows: mask length mismatch");
    mask = *col_mask;
    bool any = false;
    for (auto m : mask) any = any || m;
    if (!any) throw std::domain_error("softmax_rows: all columns masked");
  } else {
    mask.assign(c, 1);
  }
  Tensor out({r, c});
  for (int i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < c; ++j)
      if (mask[j]) mx = std::max(mx, av.at(i, j));
    double z = 0.0;
    for (int j = 0; j < c; ++j)
      if (mask[j]) z += std::exp(av.at(i, j) - mx);
    for (int j = 0; j < c; ++j) out.at(i, j) = mask[j] ? std::exp(av.at(i, j) - mx) / z : 0.0;
  }
  return push(std::move(out), [a, mask](Graph& g, Node& self) {
    const double f = g.fault_factor("softmax_rows");
    Tensor& ga = g.grad_mut(a);
    const Tensor& p = self.value;
    for (int i = 0; i < p.rows(); ++i) {
      double dot = 0.0;
      for (int j = 0; j < p.cols(); ++j) dot += self.grad.at(i, j) * p.at(i, j);
      for (int j = 0; j < p.cols(); ++j)
        if (mask[j]) ga.at(i, j) += f * p.at(i, j) * (self.grad.at(i, j) - dot);
    }
  });
}

Graph::Id Graph::log_softmax_row(Id a) {
  const Tensor& av = val(a);
  if (av.rows() != 1) throw std::invalid_argument("log_softmax_row: want a single row");
  const int c = av.cols();
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < c; ++j) mx = std::max(mx, av.at(0, j));
  double z = 0.0;
  for (int j = 0; j < c; ++j) z += std::exp(av.at(0, j) - mx);
  const double lse = mx + std::log(z);
  Tensor out({1, c});
  for (int j = 0; j < c; ++j) out.at(0, j) = av.at(0, j) - lse;
  return push(std::move(out), [a](Graph& g, Node& self) {
    Tensor& ga = g.grad_mut(a);
    double gsum = 0.0;
    for (int j = 0; j < self.grad.cols(); ++j) gsum += self.grad.at(0, j);
    for (int j = 0; j < self.grad.cols(); ++j)
      ga.at(0, j) += self.grad.at(0, j) - std::exp(self.value.at(0, j)) * gsum;
  });
}

Graph::Id Graph::layer_norm(Id x, Id gain, Id bias) {
  const Tensor& xv = val(x);
  const Tensor& gv = val(gain);
  const Tensor& bv = val(bias);
  const int r = xv.rows(), c = xv.cols();
  if (gv.rows() != 1 || gv.cols() != c || bv.rows() != 1 || bv.cols() != c)
    throw std::invalid_argument("layer_norm: gain/bias must be 1x" + std::to_string(c));
  constexpr double kEps = 1e-12;
  Tensor out({r, c});
  Tensor xhat({r, c});
  std::vector<double> inv_sigma(r);
  for (int i = 0; i < r; ++i) {
    double mu = 0.0;
    for (int j = 0; j < c; ++j) mu += xv.at(i, j);
    mu /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      const double d = xv.at(i, j) - mu;
      var += d * d;
    }
    var /= c;
    const double is = 1.0 / std::sqrt(var + kEps);
    inv_sigma[i] = is;
    for (int j = 0; j < c; ++j) {
      xhat.at(i, j) = (xv.at(i, j) - mu) * is;
      out.at(i, j) = xhat.at(i, j) * gv.at(0, j) + bv.at(0, j);
    }
  }
  return push(std::move(out),
              [x, gain, bias, xhat = std::move(xhat),
               inv_sigma = std::move(inv_sigma)](Graph& g, Node& self) {
                const double f = g.fault_factor("layer_norm");
                const Tensor& gv = g.val(gain);
                Tensor& gx = g.grad_mut(x);
                Tensor& gg = g.grad_mut(gain);
                Tensor& gb = g.grad_mut(bias);
                const int r = self.grad.rows(), c = self.grad.cols();
                for (int i = 0; i < r; ++i) {
                  double m1 = 0.0, m2 = 0.0;
                  for (int j = 0; j < c; ++j) {
                    const double dxh = self.grad.at(i, j) * gv.at(0, j);
                    m1 += dxh;
                    m2 += dxh * xhat.at(i, j);
                    gg.at(0, j) += self.grad.at(i, j) * xhat.at(i, j);
                    gb.at(0, j) += self.grad.at(i, j);
                  }
                  m1 /= c;
                  m2 /= c;
                  for (int j = 0; j < c; ++j) {
                    const double dxh = self.grad.at(i, j) * gv.at(0, j);
                    gx.at(i, j) += f * inv_sigma[i] * (dxh - m1 - xhat.at(i, j) * m2);
                  }
                }
              });
}

Graph::Id Graph::gelu(Id x) {
  const Tensor& xv = val(x);
  Tensor out = xv;
  for (double& v : out.data) v = v * gauss_cdf(v);
  return push(std::move(out), [x](Graph& g, Node& self) {
    const double f = g.fault_factor("gelu");
    const Tensor& xv = g.val(x);
    Tensor& gx = g.grad_mut(x);
    for (std::size_t i = 0; i < xv.data.size(); ++i) {
      const double v = xv.data[i];
      gx.data[i] += f * self.grad.data[i] * (gauss_cdf(v) + v * gauss_pdf(v));
    }
  });
}

Graph::Id Graph::embedding_rows(Parameter& table, const std::vector<int>& ids) {
  Id t = param(table);
  const Tensor& tv = val(t);
  const int d = tv.cols();
  Tensor out({static_cast<int>(ids.size()), d});
  for (std::size_t m = 0; m < ids.size(); ++m) {
    if (ids[m] < 0 || ids[m] >= tv.rows())
      throw std::out_of_range("embedding_rows: id " + std::to_string(ids[m]) +
                              " out of range for table " + table.name + " " + tv.shape_str());
    for (int j = 0; j < d; ++j) out.at(static_cast<int>(m), j) = tv.at(ids[m], j);
  }
  return push(std::move(out), [t, ids](Graph& g, Node& self) {
    Tensor& gt = g.grad_mut(t);
    for (std::size_t m = 0; m < ids.size(); ++m)
      for (int j = 0; j < self.grad.cols(); ++j)
        gt.at(ids[m], j) += self.grad.at(static_cast<int>(m), j);
  });
}

Graph::Id Graph::gather(Id src, std::vector<int> flat_index, int rows, int cols) {
  const Tensor& sv = val(src);
  if (static_cast<std::int64_t>(flat_index.size()) != static_cast<std::int64_t>(rows) * cols)
    throw std::invalid_argument("gather: index count mismatch");
  Tensor out({rows, cols});
  for (std::size_t k = 0; k < flat_index.size(); ++k) {
    if (flat_index[k] < 0 || flat_index[k] >= static_cast<int>(sv.data.size()))
      throw std::out_of_range("gather: flat index out of range");
    out.data[k] = sv.data[flat_index[k]];
  }
  return push(std::move(out), [src, flat_index = std::move(flat_index)](Graph& g, Node& self) {
    Tensor& gs = g.grad_mut(src);
    for (std::size_t k = 0; k < flat_index.size(); ++k)
      gs.data[flat_index[k]] += self.grad.data[k];
  });
}

Graph::Id Graph::sum_all(Id a) {
  double s = 0.0;
  for (double v : val(a).data) s += v;
  return push(Tensor::scalar(s), [a](Graph& g, Node& self) {
    Tensor& ga = g.grad_mut(a);
    for (double& v : ga.data) v += self.grad.data[0];
  });
}

Graph::Id Graph::neg_sum_selected(Id a, std::vector<int> idx) {
  const Tensor& av = val(a);
  if (av.rows() != 1) throw std::invalid_argument("neg_sum_selected: want a single row");
  double s = 0.0;
  for (int j : idx) {
    if (j < 0 || j >= av.cols()) throw std::out_of_range("neg_sum_selected: index");
    s -= av.at(0, j);
  }
  return push(Tensor::scalar(s), [a, idx = std::move(idx)](Graph& g, Node& self) {
    Tensor& ga = g.grad_mut(a);
    for (int j : idx) ga.at(0, j) -= self.grad.data[0];
  });
}

Graph::Id Graph::bce_with_logits(Id z, double target) {
  const Tensor& zv = val(z);
  if (zv.numel() != 1) throw std::invalid_argument("bce_with_logits: want scalar logit");
  const double x = zv.data[0];
  // max(x,0) − x·y + log(1+exp(−|x|))
  const double loss = std::max(x, 0.0) - x * target + std::log1p(std::exp(-std::abs(x)));
  return push(Tensor::scalar(loss), [z, target](Graph& g, Node& self) {
    const double x2 = g.val(z).data[0];
    const double sig = 1.0 / (1.0 + std::exp(-x2));
    g.grad_mut(z).data[0] += self.grad.data[0] * (sig - target);
  });
}

void Graph::backward(Id loss) {
  if (loss < 0 || loss >= static_cast<Id>(nodes_.size()))
    throw std::out_of_range("backward: bad loss id");
  if (nodes_[loss].value.numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                nodes_[loss].value.shape_str());
  for (Id i = 0; i <= loss; ++i) nodes_[i].grad = Tensor::zeros(nodes_[i].value.shape);
  nodes_[loss].grad.data[0] = 1.0;
  for (Id i = loss; i >= 0; --i)
    if (nodes_[i].backprop) nodes_[i].backprop(*this, nodes_[i]);
  for (Id i = 0; i <= loss; ++i) {
    if (Parameter* p = nodes_[i].bound) {
      for (std::size_t k = 0; k < p->grad.data.size(); ++k)
        p->grad.data[k] += nodes_[i].grad.data[k];
    }
  }
}

}  // namespace gift
