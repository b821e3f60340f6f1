#ifndef ADAPTQP_TAPE_HPP
#define ADAPTQP_TAPE_HPP

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "adaptqp/errors.hpp"
#include "adaptqp/params.hpp"

namespace adaptqp {

/// Reverse-mode autodiff over dense matrices.
///
/// Each op records its output value and a pullback closure; backward() runs
/// the closures in reverse creation order (a valid topological order because
/// the graph is built dynamically) and accumulates parameter gradients back
/// into their stores. One Tape instance records one forward pass.
template <class S>
class Tape {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  struct Var {
    int id = -1;
  };

  Tape() { nodes_.reserve(256); }

  const Mat& value(Var v) const { return nodes_[check(v)].value; }
  const Mat& grad(Var v) const { return nodes_[check(v)].grad; }

  Var constant(Mat value) { return {push(std::move(value))}; }

  Var param(ParamStore<S>& store, const std::string& name) {
    const int id = push(store.value(name));
    nodes_[id].store = &store;
    nodes_[id].param_name = name;
    return {id};
  }

  Var matmul(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    if (nodes_[ia].value.cols() != nodes_[ib].value.rows())
      throw ShapeMismatch("matmul: inner dimensions differ");
    const int id = push(nodes_[ia].value * nodes_[ib].value);
    nodes_[id].back = [ia, ib, id](Tape& t) {
      t.nodes_[ia].grad.noalias() += t.nodes_[id].grad * t.nodes_[ib].value.transpose();
      t.nodes_[ib].grad.noalias() += t.nodes_[ia].value.transpose() * t.nodes_[id].grad;
    };
    return {id};
  }

  Var add(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    require_same_shape(ia, ib, "add");
    const int id = push(nodes_[ia].value + nodes_[ib].value);
    nodes_[id].back = [ia, ib, id](Tape& t) {
      t.nodes_[ia].grad += t.nodes_[id].grad;
      t.nodes_[ib].grad += t.nodes_[id].grad;
    };
    return {id};
  }

  Var sub(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    require_same_shape(ia, ib, "sub");
    const int id = push(nodes_[ia].value - nodes_[ib].value);
    nodes_[id].back = [ia, ib, id](Tape& t) {
      t.nodes_[ia].grad += t.nodes_[id].grad;
      t.nodes_[ib].grad -= t.nodes_[id].grad;
    };
    return {id};
  }

  Var mul(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    require_same_shape(ia, ib, "mul");
    const int id = push(nodes_[ia].value.cwiseProduct(nodes_[ib].value));
    nodes_[id].back = [ia, ib, id](Tape& t) {
      t.nodes_[ia].grad += t.nodes_[id].grad.cwiseProduct(t.nodes_[ib].value);
      t.nodes_[ib].grad += t.nodes_[id].grad.cwiseProduct(t.nodes_[ia].value);
    };
    return {id};
  }

  /// m + column vector b broadcast over columns
  Var add_colwise(Var m, Var bias) {
    const int im = check(m), ib = check(bias);
    if (nodes_[ib].value.cols() != 1 || nodes_[ib].value.rows() != nodes_[im].value.rows())
      throw ShapeMismatch("add_colwise: bias must be (rows x 1)");
    Mat out = nodes_[im].value;
    out.colwise() += nodes_[ib].value.col(0);
    const int id = push(std::move(out));
    nodes_[id].back = [im, ib, id](Tape& t) {
      t.nodes_[im].grad += t.nodes_[id].grad;
      t.nodes_[ib].grad.col(0) += t.nodes_[id].grad.rowwise().sum();
    };
    return {id};
  }

  /// column j of m scaled by s(0, j)
  Var colscale(Var m, Var s) {
    const int im = check(m), is = check(s);
    if (nodes_[is].value.rows() != 1 || nodes_[is].value.cols() != nodes_[im].value.cols())
      throw ShapeMismatch("colscale: scale must be (1 x cols)");
    Mat out = nodes_[im].value;
    for (int j = 0; j < out.cols(); ++j) out.col(j) *= nodes_[is].value(0, j);
    const int id = push(std::move(out));
    nodes_[id].back = [im, is, id](Tape& t) {
      const Mat& g = t.nodes_[id].grad;
      for (int j = 0; j < g.cols(); ++j) {
        t.nodes_[im].grad.col(j) += g.col(j) * t.nodes_[is].value(0, j);
        t.nodes_[is].grad(0, j) += t.nodes_[im].value.col(j).dot(g.col(j));
      }
    };
    return {id};
  }

  /// column j of m scaled by w(row, j); used for type-attention mixing
  Var colscale_row(Var m, Var w, int row) {
    const int im = check(m), iw = check(w);
    if (nodes_[iw].value.cols() != nodes_[im].value.cols() || row >= nodes_[iw].value.rows())
      throw ShapeMismatch("colscale_row: bad weight shape");
    Mat out = nodes_[im].value;
    for (int j = 0; j < out.cols(); ++j) out.col(j) *= nodes_[iw].value(row, j);
    const int id = push(std::move(out));
    nodes_[id].back = [im, iw, row, id](Tape& t) {
      const Mat& g = t.nodes_[id].grad;
      for (int j = 0; j < g.cols(); ++j) {
        t.nodes_[im].grad.col(j) += g.col(j) * t.nodes_[iw].value(row, j);
        t.nodes_[iw].grad(row, j) += t.nodes_[im].value.col(j).dot(g.col(j));
      }
    };
    return {id};
  }

  Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeMismatch("concat_rows: empty");
    std::vector<int> ids;
    int rows = 0;
    const int cols = static_cast<int>(nodes_[check(parts[0])].value.cols());
    for (Var p : parts) {
      const int ip = check(p);
      if (nodes_[ip].value.cols() != cols) throw ShapeMismatch("concat_rows: column mismatch");
      rows += static_cast<int>(nodes_[ip].value.rows());
      ids.push_back(ip);
    }
    Mat out(rows, cols);
    int at = 0;
    for (int ip : ids) {
      out.middleRows(at, nodes_[ip].value.rows()) = nodes_[ip].value;
      at += static_cast<int>(nodes_[ip].value.rows());
    }
    const int id = push(std::move(out));
    nodes_[id].back = [ids, id](Tape& t) {
      int offset = 0;
      for (int ip : ids) {
        const int r = static_cast<int>(t.nodes_[ip].value.rows());
        t.nodes_[ip].grad += t.nodes_[id].grad.middleRows(offset, r);
        offset += r;
      }
    };
    return {id};
  }

  Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeMismatch("concat_cols: empty");
    std::vector<int> ids;
    int cols = 0;
    const int rows = static_cast<int>(nodes_[check(parts[0])].value.rows());
    for (Var p : parts) {
      const int ip = check(p);
      if (nodes_[ip].value.rows() != rows) throw ShapeMismatch("concat_cols: row mismatch");
      cols += static_cast<int>(nodes_[ip].value.cols());
      ids.push_back(ip);
    }
    Mat out(rows, cols);
    int at = 0;
    for (int ip : ids) {
      out.middleCols(at, nodes_[ip].value.cols()) = nodes_[ip].value;
      at += static_cast<int>(nodes_[ip].value.cols());
    }
    const int id = push(std::move(out));
    nodes_[id].back = [ids, id](Tape& t) {
      int offset = 0;
      for (int ip : ids) {
        const int c = static_cast<int>(t.nodes_[ip].value.cols());
        t.nodes_[ip].grad += t.nodes_[id].grad.middleCols(offset, c);
        offset += c;
      }
    };
    return {id};
  }

  Var gather_cols(Var m, std::vector<int> idx) {
    const int im = check(m);
    Mat out(nodes_[im].value.rows(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(j) = nodes_[im].value.col(idx[j]);
    const int id = push(std::move(out));
    nodes_[id].back = [im, id, idx = std::move(idx)](Tape& t) {
      for (std::size_t j = 0; j < idx.size(); ++j)
        t.nodes_[im].grad.col(idx[j]) += t.nodes_[id].grad.col(j);
    };
    return {id};
  }

  /// places column j of m at column idx[j] of a (rows x total_cols) zero
  /// matrix; indices must be distinct
  Var scatter_cols(Var m, std::vector<int> idx, int total_cols) {
    const int im = check(m);
    if (static_cast<int>(idx.size()) != nodes_[im].value.cols())
      throw ShapeMismatch("scatter_cols: index count mismatch");
    Mat out = Mat::Zero(nodes_[im].value.rows(), total_cols);
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(idx[j]) = nodes_[im].value.col(j);
    const int id = push(std::move(out));
    nodes_[id].back = [im, id, idx = std::move(idx)](Tape& t) {
      for (std::size_t j = 0; j < idx.size(); ++j)
        t.nodes_[im].grad.col(j) += t.nodes_[id].grad.col(idx[j]);
    };
    return {id};
  }

  /// softmax of a (1 x E) logit row within segments; empty segments yield
  /// no output entries (the output keeps shape 1 x E)
  Var segment_softmax(Var logits, std::vector<int> seg, int nseg) {
    const int il = check(logits);
    if (nodes_[il].value.rows() != 1 ||
        static_cast<int>(seg.size()) != nodes_[il].value.cols())
      throw ShapeMismatch("segment_softmax: logits must be 1 x |seg|");
    const Mat& z = nodes_[il].value;
    const int e = static_cast<int>(seg.size());
    std::vector<S> seg_max(nseg, std::numeric_limits<S>::lowest());
    for (int j = 0; j < e; ++j) seg_max[seg[j]] = std::max(seg_max[seg[j]], z(0, j));
    Mat out(1, e);
    std::vector<S> seg_sum(nseg, S(0));
    for (int j = 0; j < e; ++j) {
      out(0, j) = std::exp(z(0, j) - seg_max[seg[j]]);
      seg_sum[seg[j]] += out(0, j);
    }
    for (int j = 0; j < e; ++j) out(0, j) /= seg_sum[seg[j]];
    const int id = push(std::move(out));
    nodes_[id].back = [il, id, nseg, seg = std::move(seg)](Tape& t) {
      const Mat& a = t.nodes_[id].value;
      const Mat& g = t.nodes_[id].grad;
      std::vector<S> seg_dot(nseg, S(0));
      for (int j = 0; j < a.cols(); ++j) seg_dot[seg[j]] += a(0, j) * g(0, j);
      for (int j = 0; j < a.cols(); ++j)
        t.nodes_[il].grad(0, j) += a(0, j) * (g(0, j) - seg_dot[seg[j]]);
    };
    return {id};
  }

  /// sums columns of m into their segment: output is (rows x nseg)
  Var segment_sum(Var m, std::vector<int> seg, int nseg) {
    const int im = check(m);
    if (static_cast<int>(seg.size()) != nodes_[im].value.cols())
      throw ShapeMismatch("segment_sum: index count mismatch");
    Mat out = Mat::Zero(nodes_[im].value.rows(), nseg);
    for (std::size_t j = 0; j < seg.size(); ++j) out.col(seg[j]) += nodes_[im].value.col(j);
    const int id = push(std::move(out));
    nodes_[id].back = [im, id, seg = std::move(seg)](Tape& t) {
      for (std::size_t j = 0; j < seg.size(); ++j)
        t.nodes_[im].grad.col(j) += t.nodes_[id].grad.col(seg[j]);
    };
    return {id};
  }

  /// per-row minimum over each segment's columns (empty segments yield 0)
  Var segment_min(Var m, const std::vector<int>& seg, int nseg) {
    return segment_extreme(m, seg, nseg, /*take_max=*/false);
  }
  Var segment_max(Var m, const std::vector<int>& seg, int nseg) {
    return segment_extreme(m, seg, nseg, /*take_max=*/true);
  }

  /// softmax over rows within each column, with masked (0) entries excluded;
  /// all-masked columns output zeros
  Var masked_row_softmax(Var logits, Mat mask) {
    const int il = check(logits);
    const Mat& z = nodes_[il].value;
    if (mask.rows() != z.rows() || mask.cols() != z.cols())
      throw ShapeMismatch("masked_row_softmax: mask shape mismatch");
    Mat out = Mat::Zero(z.rows(), z.cols());
    for (int j = 0; j < z.cols(); ++j) {
      S colmax = std::numeric_limits<S>::lowest();
      bool any = false;
      for (int k = 0; k < z.rows(); ++k) {
        if (mask(k, j) != S(0)) {
          colmax = std::max(colmax, z(k, j));
          any = true;
        }
      }
      if (!any) continue;
      S sum = S(0);
      for (int k = 0; k < z.rows(); ++k) {
        if (mask(k, j) != S(0)) {
          out(k, j) = std::exp(z(k, j) - colmax);
          sum += out(k, j);
        }
      }
      for (int k = 0; k < z.rows(); ++k) out(k, j) /= sum;
    }
    const int id = push(std::move(out));
    nodes_[id].back = [il, id, mask = std::move(mask)](Tape& t) {
      const Mat& a = t.nodes_[id].value;
      const Mat& g = t.nodes_[id].grad;
      for (int j = 0; j < a.cols(); ++j) {
        S dot = S(0);
        for (int k = 0; k < a.rows(); ++k) dot += a(k, j) * g(k, j);
        for (int k = 0; k < a.rows(); ++k) {
          if (mask(k, j) != S(0)) t.nodes_[il].grad(k, j) += a(k, j) * (g(k, j) - dot);
        }
      }
    };
    return {id};
  }

  Var leaky_relu(Var a, S slope) {
    const int ia = check(a);
    Mat out = nodes_[ia].value.unaryExpr([slope](S v) { return v > S(0) ? v : slope * v; });
    const int id = push(std::move(out));
    nodes_[id].back = [ia, id, slope](Tape& t) {
      const Mat& x = t.nodes_[ia].value;
      const Mat& g = t.nodes_[id].grad;
      t.nodes_[ia].grad += g.binaryExpr(x, [slope](S gv, S xv) { return xv > S(0) ? gv : slope * gv; });
    };
    return {id};
  }

  Var tanh_op(Var a) {
    const int ia = check(a);
    Mat out = nodes_[ia].value.array().tanh().matrix();
    const int id = push(std::move(out));
    nodes_[id].back = [ia, id](Tape& t) {
      const Mat& y = t.nodes_[id].value;
      t.nodes_[ia].grad.array() +=
          t.nodes_[id].grad.array() * (S(1) - y.array() * y.array());
    };
    return {id};
  }

  Var sigmoid(Var a) {
    const int ia = check(a);
    Mat out = nodes_[ia].value.unaryExpr([](S v) { return S(1) / (S(1) + std::exp(-v)); });
    const int id = push(std::move(out));
    nodes_[id].back = [ia, id](Tape& t) {
      const Mat& y = t.nodes_[id].value;
      t.nodes_[ia].grad.array() += t.nodes_[id].grad.array() * y.array() * (S(1) - y.array());
    };
    return {id};
  }

  Var exp_op(Var a) {
    const int ia = check(a);
    Mat out = nodes_[ia].value.array().exp().matrix();
    const int id = push(std::move(out));
    nodes_[id].back = [ia, id](Tape& t) {
      t.nodes_[ia].grad.array() += t.nodes_[id].grad.array() * t.nodes_[id].value.array();
    };
    return {id};
  }

  Var scale(Var a, S c) {
    const int ia = check(a);
    const int id = push(nodes_[ia].value * c);
    nodes_[id].back = [ia, id, c](Tape& t) { t.nodes_[ia].grad += c * t.nodes_[id].grad; };
    return {id};
  }

  Var add_scalar(Var a, S c) {
    const int ia = check(a);
    const int id = push((nodes_[ia].value.array() + c).matrix());
    nodes_[id].back = [ia, id](Tape& t) { t.nodes_[ia].grad += t.nodes_[id].grad; };
    return {id};
  }

  /// pass-through gradient strictly inside (lo, hi), zero outside
  Var clamp(Var a, S lo, S hi) {
    const int ia = check(a);
    Mat out = nodes_[ia].value.unaryExpr([lo, hi](S v) { return std::min(std::max(v, lo), hi); });
    const int id = push(std::move(out));
    nodes_[id].back = [ia, id, lo, hi](Tape& t) {
      const Mat& x = t.nodes_[ia].value;
      const Mat& g = t.nodes_[id].grad;
      t.nodes_[ia].grad += g.binaryExpr(x, [lo, hi](S gv, S xv) {
        return (xv > lo && xv < hi) ? gv : S(0);
      });
    };
    return {id};
  }

  Var sum_all(Var a) {
    const int ia = check(a);
    Mat out(1, 1);
    out(0, 0) = nodes_[ia].value.sum();
    const int id = push(std::move(out));
    nodes_[id].back = [ia, id](Tape& t) {
      t.nodes_[ia].grad.array() += t.nodes_[id].grad(0, 0);
    };
    return {id};
  }

  Var mean_all(Var a) {
    const int ia = check(a);
    const S inv = S(1) / static_cast<S>(nodes_[ia].value.size());
    Mat out(1, 1);
    out(0, 0) = nodes_[ia].value.sum() * inv;
    const int id = push(std::move(out));
    nodes_[id].back = [ia, id, inv](Tape& t) {
      t.nodes_[ia].grad.array() += t.nodes_[id].grad(0, 0) * inv;
    };
    return {id};
  }

  /// Runs the reverse sweep from a scalar loss and accumulates parameter
  /// gradients into their stores.
  void backward(Var loss) {
    const int il = check(loss);
    if (nodes_[il].value.size() != 1) throw ShapeMismatch("backward: loss must be scalar");
    if (nodes_.empty()) throw NoRecordedForward("no forward recorded");
    nodes_[il].grad(0, 0) = S(1);
    for (int i = il; i >= 0; --i) {
      if (nodes_[i].back) nodes_[i].back(*this);
    }
    for (const Node& node : nodes_) {
      if (node.store) node.store->grad(node.param_name) += node.grad;
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&)> back;
    ParamStore<S>* store = nullptr;
    std::string param_name;
  };

  int push(Mat value) {
    Node n;
    n.grad = Mat::Zero(value.rows(), value.cols());
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int check(Var v) const {
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
      throw NoRecordedForward("variable does not belong to this tape");
    return v.id;
  }

  void require_same_shape(int ia, int ib, const char* op) const {
    if (nodes_[ia].value.rows() != nodes_[ib].value.rows() ||
        nodes_[ia].value.cols() != nodes_[ib].value.cols())
      throw ShapeMismatch(std::string(op) + ": shape mismatch");
  }

  Var segment_extreme(Var m, const std::vector<int>& seg, int nseg, bool take_max) {
    const int im = check(m);
    if (static_cast<int>(seg.size()) != nodes_[im].value.cols())
      throw ShapeMismatch("segment extreme: index count mismatch");
    const Mat& x = nodes_[im].value;
    const int rows = static_cast<int>(x.rows());
    Mat out = Mat::Zero(rows, nseg);
    Eigen::MatrixXi arg = Eigen::MatrixXi::Constant(rows, nseg, -1);
    for (int j = 0; j < x.cols(); ++j) {
      const int g = seg[j];
      for (int r = 0; r < rows; ++r) {
        const bool better = arg(r, g) < 0 || (take_max ? x(r, j) > out(r, g) : x(r, j) < out(r, g));
        if (better) {
          out(r, g) = x(r, j);
          arg(r, g) = j;
        }
      }
    }
    const int id = push(std::move(out));
    nodes_[id].back = [im, id, arg = std::move(arg)](Tape& t) {
      const Mat& g = t.nodes_[id].grad;
      for (int c = 0; c < g.cols(); ++c) {
        for (int r = 0; r < g.rows(); ++r) {
          if (arg(r, c) >= 0) t.nodes_[im].grad(r, arg(r, c)) += g(r, c);
        }
      }
    };
    return {id};
  }

  std::vector<Node> nodes_;
};

}  // namespace adaptqp

#endif
