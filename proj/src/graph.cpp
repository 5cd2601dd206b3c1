#include "kidc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "kidc/errors.hpp"

namespace kidc::num {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void matmul_kernel(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t t = 0; t < k; ++t) {
            double av = a[i * k + t];
            if (av == 0.0) continue;
            const double* brow = b + t * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace

Var Graph::record(const char* op, Tensor value, std::function<void(Graph&, int)> backprop) {
    check_value(op, value);
    Node n;
    n.value = std::move(value);
    n.op = op;
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

void Graph::check_value(const char* op, const Tensor& t) const {
    if (check_finite_ && !t.all_finite()) {
        throw RunFailure(std::string("non-finite value produced by op '") + op + "'");
    }
}

Var Graph::value(Tensor t) { return record("value", std::move(t), nullptr); }

Var Graph::param(Tensor t) {
    Var v = record("param", std::move(t), nullptr);
    nodes_.back().trainable = true;
    return v;
}

const Tensor& Graph::grad(Var v) const {
    const Node& n = node(v);
    if (n.grad.size() == 0) {
        throw InvalidInput("gradient not available; run backward() over a graph reaching this node");
    }
    return n.grad;
}

Tensor& Graph::grad_buf(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) n.grad = Tensor(n.value.dims());
    return n.grad;
}

void Graph::backward(Var loss) {
    Node& top = node(loss);
    if (!top.value.is_scalar()) {
        throw InvalidInput("backward requires a scalar loss node, got shape " +
                           top.value.shape_str());
    }
    grad_buf(loss.id)[0] = 1.0;
    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.grad.size() == 0) continue;  // not reached from the loss
        if (check_finite_ && !n.grad.all_finite()) {
            throw RunFailure(std::string("non-finite gradient at op '") + n.op + "'");
        }
        if (n.backprop) n.backprop(*this, id);
    }
    // every trainable leaf reports exactly one gradient, zeros when unused
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        if (nodes_[id].trainable && nodes_[id].grad.size() == 0) {
            nodes_[id].grad = Tensor(nodes_[id].value.dims());
        }
    }
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Var Graph::add(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (!ta.same_shape(tb)) {
        throw InvalidInput("add: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    }
    Tensor out(ta.dims());
    for (std::size_t i = 0; i < ta.size(); ++i) out[i] = ta[i] + tb[i];
    int ia = a.id, ib = b.id;
    return record("add", std::move(out), [ia, ib](Graph& g, int self) {
        const Tensor& d = g.nodes_[self].grad;
        Tensor& da = g.grad_buf(ia);
        Tensor& db = g.grad_buf(ib);
        for (std::size_t i = 0; i < d.size(); ++i) {
            da[i] += d[i];
            db[i] += d[i];
        }
    });
}

Var Graph::sub(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (!ta.same_shape(tb)) {
        throw InvalidInput("sub: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    }
    Tensor out(ta.dims());
    for (std::size_t i = 0; i < ta.size(); ++i) out[i] = ta[i] - tb[i];
    int ia = a.id, ib = b.id;
    return record("sub", std::move(out), [ia, ib](Graph& g, int self) {
        const Tensor& d = g.nodes_[self].grad;
        Tensor& da = g.grad_buf(ia);
        Tensor& db = g.grad_buf(ib);
        for (std::size_t i = 0; i < d.size(); ++i) {
            da[i] += d[i];
            db[i] -= d[i];
        }
    });
}

Var Graph::mul(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (!ta.same_shape(tb)) {
        throw InvalidInput("mul: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    }
    Tensor out(ta.dims());
    for (std::size_t i = 0; i < ta.size(); ++i) out[i] = ta[i] * tb[i];
    int ia = a.id, ib = b.id;
    return record("mul", std::move(out), [ia, ib](Graph& g, int self) {
        const Tensor& d = g.nodes_[self].grad;
        const Tensor& va = g.nodes_[ia].value;
        const Tensor& vb = g.nodes_[ib].value;
        Tensor& da = g.grad_buf(ia);
        Tensor& db = g.grad_buf(ib);
        for (std::size_t i = 0; i < d.size(); ++i) {
            da[i] += d[i] * vb[i];
            db[i] += d[i] * va[i];
        }
    });
}

Var Graph::scale(Var a, double c) {
    const Tensor& ta = val(a);
    Tensor out(ta.dims());
    for (std::size_t i = 0; i < ta.size(); ++i) out[i] = ta[i] * c;
    int ia = a.id;
    return record("scale", std::move(out), [ia, c](Graph& g, int self) {
        const Tensor& d = g.nodes_[self].grad;
        Tensor& da = g.grad_buf(ia);
        for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * c;
    });
}

Var Graph::add_row(Var m, Var row_vec) {
    const Tensor& tm = val(m);
    const Tensor& tv = val(row_vec);
    if (tm.rank() != 2 || tv.rank() != 1 || tm.cols() != tv.dim(0)) {
        throw InvalidInput("add_row: shape mismatch " + tm.shape_str() + " vs " + tv.shape_str());
    }
    Tensor out(tm.dims());
    for (std::size_t r = 0; r < tm.rows(); ++r) {
        for (std::size_t c = 0; c < tm.cols(); ++c) out.at(r, c) = tm.at(r, c) + tv[c];
    }
    int im = m.id, iv = row_vec.id;
    return record("add_row", std::move(out), [im, iv](Graph& g, int self) {
        const Tensor& d = g.nodes_[self].grad;
        Tensor& dm = g.grad_buf(im);
        Tensor& dv = g.grad_buf(iv);
        std::size_t rows = d.rows(), cols = d.cols();
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                dm.at(r, c) += d.at(r, c);
                dv[c] += d.at(r, c);
            }
        }
    });
}

Var Graph::relu(Var a) {
    const Tensor& ta = val(a);
    Tensor out(ta.dims());
    for (std::size_t i = 0; i < ta.size(); ++i) out[i] = ta[i] > 0.0 ? ta[i] : 0.0;
    int ia = a.id;
    return record("relu", std::move(out), [ia](Graph& g, int self) {
        const Tensor& d = g.nodes_[self].grad;
        const Tensor& va = g.nodes_[ia].value;
        Tensor& da = g.grad_buf(ia);
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (va[i] > 0.0) da[i] += d[i];
        }
    });
}

Var Graph::gelu(Var a) {
    const Tensor& ta = val(a);
    Tensor out(ta.dims());
    for (std::size_t i = 0; i < ta.size(); ++i) {
        out[i] = 0.5 * ta[i] * (1.0 + std::erf(ta[i] * kInvSqrt2));
    }
    int ia = a.id;
    return record("gelu", std::move(out), [ia](Graph& g, int self) {
        const Tensor& d = g.nodes_[self].grad;
        const Tensor& va = g.nodes_[ia].value;
        Tensor& da = g.grad_buf(ia);
        for (std::size_t i = 0; i < d.size(); ++i) {
            double x = va[i];
            double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
            da[i] += d[i] * (cdf + x * pdf);
        }
    });
}

Var Graph::sigmoid(Var a) {
    const Tensor& ta = val(a);
    Tensor out(ta.dims());
    for (std::size_t i = 0; i < ta.size(); ++i) {
        double x = ta[i];
        out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    int ia = a.id;
    return record("sigmoid", std::move(out), [ia](Graph& g, int self) {
        const Tensor& d = g.nodes_[self].grad;
        const Tensor& y = g.nodes_[self].value;
        Tensor& da = g.grad_buf(ia);
        for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * y[i] * (1.0 - y[i]);
    });
}

Var Graph::tanh(Var a) {
    const Tensor& ta = val(a);
    Tensor out(ta.dims());
    for (std::size_t i = 0; i < ta.size(); ++i) out[i] = std::tanh(ta[i]);
    int ia = a.id;
    return record("tanh", std::move(out), [ia](Graph& g, int self) {
        const Tensor& d = g.nodes_[self].grad;
        const Tensor& y = g.nodes_[self].value;
        Tensor& da = g.grad_buf(ia);
        for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * (1.0 - y[i] * y[i]);
    });
}

Var Graph::sum(Var a) {
    const Tensor& ta = val(a);
    double s = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) s += ta[i];
    int ia = a.id;
    return record("sum", Tensor::scalar(s), [ia](Graph& g, int self) {
        double d = g.nodes_[self].grad[0];
        Tensor& da = g.grad_buf(ia);
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += d;
    });
}

Var Graph::mean(Var a) {
    const Tensor& ta = val(a);
    double s = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) s += ta[i];
    double inv = 1.0 / static_cast<double>(ta.size());
    int ia = a.id;
    return record("mean", Tensor::scalar(s * inv), [ia, inv](Graph& g, int self) {
        double d = g.nodes_[self].grad[0] * inv;
        Tensor& da = g.grad_buf(ia);
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += d;
    });
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Var Graph::matmul(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (ta.rank() != 2 || tb.rank() != 2 || ta.cols() != tb.rows()) {
        throw InvalidInput("matmul: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    }
    std::size_t m = ta.rows(), k = ta.cols(), n = tb.cols();
    Tensor out({m, n});
    matmul_kernel(ta.data(), tb.data(), out.data(), m, k, n);
    int ia = a.id, ib = b.id;
    return record("matmul", std::move(out), [ia, ib, m, k, n](Graph& g, int self) {
        const double* d = g.nodes_[self].grad.data();
        const double* av = g.nodes_[ia].value.data();
        const double* bv = g.nodes_[ib].value.data();
        double* da = g.grad_buf(ia).data();
        double* db = g.grad_buf(ib).data();
        // dA += dC · B^T   (row-dot-row form)
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t t = 0; t < k; ++t) {
                const double* drow = d + i * n;
                const double* brow = bv + t * n;
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += drow[j] * brow[j];
                da[i * k + t] += acc;
            }
        }
        // dB += A^T · dC
        for (std::size_t i = 0; i < m; ++i) {
            const double* drow = d + i * n;
            for (std::size_t t = 0; t < k; ++t) {
                double av_it = av[i * k + t];
                if (av_it == 0.0) continue;
                double* dbrow = db + t * n;
                for (std::size_t j = 0; j < n; ++j) dbrow[j] += av_it * drow[j];
            }
        }
    });
}

Var Graph::transpose(Var a) {
    const Tensor& ta = val(a);
    if (ta.rank() != 2) throw InvalidInput("transpose: expected rank-2, got " + ta.shape_str());
    std::size_t m = ta.rows(), n = ta.cols();
    Tensor out({n, m});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out.at(j, i) = ta.at(i, j);
    }
    int ia = a.id;
    return record("transpose", std::move(out), [ia, m, n](Graph& g, int self) {
        const Tensor& d = g.nodes_[self].grad;
        Tensor& da = g.grad_buf(ia);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) da.at(i, j) += d.at(j, i);
        }
    });
}

Var Graph::vecmat(Var v, Var m) {
    const Tensor& tv = val(v);
    const Tensor& tm = val(m);
    if (tv.rank() != 1 || tm.rank() != 2 || tv.dim(0) != tm.rows()) {
        throw InvalidInput("vecmat: shape mismatch " + tv.shape_str() + " vs " + tm.shape_str());
    }
    std::size_t k = tm.rows(), n = tm.cols();
    Tensor out({n});
    matmul_kernel(tv.data(), tm.data(), out.data(), 1, k, n);
    int iv = v.id, im = m.id;
    return record("vecmat", std::move(out), [iv, im, k, n](Graph& g, int self) {
        const double* d = g.nodes_[self].grad.data();
        const double* vv = g.nodes_[iv].value.data();
        const double* mv = g.nodes_[im].value.data();
        double* dv = g.grad_buf(iv).data();
        double* dm = g.grad_buf(im).data();
        for (std::size_t t = 0; t < k; ++t) {
            const double* mrow = mv + t * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += d[j] * mrow[j];
            dv[t] += acc;
            double vt = vv[t];
            if (vt == 0.0) continue;
            double* dmrow = dm + t * n;
            for (std::size_t j = 0; j < n; ++j) dmrow[j] += vt * d[j];
        }
    });
}

Var Graph::matvec(Var m, Var v) {
    const Tensor& tm = val(m);
    const Tensor& tv = val(v);
    if (tm.rank() != 2 || tv.rank() != 1 || tm.cols() != tv.dim(0)) {
        throw InvalidInput("matvec: shape mismatch " + tm.shape_str() + " vs " + tv.shape_str());
    }
    std::size_t r = tm.rows(), k = tm.cols();
    Tensor out({r});
    for (std::size_t i = 0; i < r; ++i) {
        const double* mrow = tm.data() + i * k;
        double acc = 0.0;
        for (std::size_t t = 0; t < k; ++t) acc += mrow[t] * tv[t];
        out[i] = acc;
    }
    int im = m.id, iv = v.id;
    return record("matvec", std::move(out), [im, iv, r, k](Graph& g, int self) {
        const double* d = g.nodes_[self].grad.data();
        const double* mv = g.nodes_[im].value.data();
        const double* vv = g.nodes_[iv].value.data();
        double* dm = g.grad_buf(im).data();
        double* dv = g.grad_buf(iv).data();
        for (std::size_t i = 0; i < r; ++i) {
            double di = d[i];
            if (di == 0.0) continue;
            const double* mrow = mv + i * k;
            double* dmrow = dm + i * k;
            for (std::size_t t = 0; t < k; ++t) {
                dmrow[t] += di * vv[t];
                dv[t] += di * mrow[t];
            }
        }
    });
}

// ---------------------------------------------------------------------------
// structure
// ---------------------------------------------------------------------------

Var Graph::row(Var m, std::size_t r) {
    const Tensor& tm = val(m);
    if (tm.rank() != 2 || r >= tm.rows()) {
        throw InvalidInput("row: index " + std::to_string(r) + " out of range for " +
                           tm.shape_str());
    }
    std::size_t c = tm.cols();
    Tensor out({c});
    for (std::size_t j = 0; j < c; ++j) out[j] = tm.at(r, j);
    int im = m.id;
    return record("row", std::move(out), [im, r, c](Graph& g, int self) {
        const Tensor& d = g.nodes_[self].grad;
        Tensor& dm = g.grad_buf(im);
        for (std::size_t j = 0; j < c; ++j) dm.at(r, j) += d[j];
    });
}

Var Graph::slice_cols(Var m, std::size_t start, std::size_t count) {
    const Tensor& tm = val(m);
    if (tm.rank() != 2 || start + count > tm.cols() || count == 0) {
        throw InvalidInput("slice_cols: [" + std::to_string(start) + "," +
                           std::to_string(start + count) + ") out of range for " + tm.shape_str());
    }
    std::size_t rows = tm.rows();
    Tensor out({rows, count});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < count; ++j) out.at(r, j) = tm.at(r, start + j);
    }
    int im = m.id;
    return record("slice_cols", std::move(out), [im, start, count, rows](Graph& g, int self) {
        const Tensor& d = g.nodes_[self].grad;
        Tensor& dm = g.grad_buf(im);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < count; ++j) dm.at(r, start + j) += d.at(r, j);
        }
    });
}

Var Graph::slice_vec(Var v, std::size_t start, std::size_t count) {
    const Tensor& tv = val(v);
    if (tv.rank() != 1 || start + count > tv.dim(0) || count == 0) {
        throw InvalidInput("slice_vec: [" + std::to_string(start) + "," +
                           std::to_string(start + count) + ") out of range for " + tv.shape_str());
    }
    Tensor out({count});
    for (std::size_t j = 0; j < count; ++j) out[j] = tv[start + j];
    int iv = v.id;
    return record("slice_vec", std::move(out), [iv, start, count](Graph& g, int self) {
        const Tensor& d = g.nodes_[self].grad;
        Tensor& dv = g.grad_buf(iv);
        for (std::size_t j = 0; j < count; ++j) dv[start + j] += d[j];
    });
}

Var Graph::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw InvalidInput("concat_cols: no inputs");
    std::size_t rows = val(parts[0]).rows();
    std::size_t total = 0;
    for (Var p : parts) {
        const Tensor& t = val(p);
        if (t.rank() != 2 || t.rows() != rows) {
            throw InvalidInput("concat_cols: row mismatch " + val(parts[0]).shape_str() + " vs " +
                               t.shape_str());
        }
        total += t.cols();
    }
    Tensor out({rows, total});
    std::vector<int> ids;
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (Var p : parts) {
        const Tensor& t = val(p);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < t.cols(); ++j) out.at(r, off + j) = t.at(r, j);
        }
        ids.push_back(p.id);
        offsets.push_back(off);
        off += t.cols();
    }
    return record("concat_cols", std::move(out),
                  [ids, offsets, rows](Graph& g, int self) {
                      const Tensor& d = g.nodes_[self].grad;
                      for (std::size_t p = 0; p < ids.size(); ++p) {
                          Tensor& dp = g.grad_buf(ids[p]);
                          std::size_t cols = dp.cols();
                          for (std::size_t r = 0; r < rows; ++r) {
                              for (std::size_t j = 0; j < cols; ++j) {
                                  dp.at(r, j) += d.at(r, offsets[p] + j);
                              }
                          }
                      }
                  });
}

Var Graph::stack_rows(const std::vector<Var>& row_vecs) {
    if (row_vecs.empty()) throw InvalidInput("stack_rows: no inputs");
    std::size_t cols = val(row_vecs[0]).dim(0);
    std::vector<int> ids;
    for (Var v : row_vecs) {
        const Tensor& t = val(v);
        if (t.rank() != 1 || t.dim(0) != cols) {
            throw InvalidInput("stack_rows: shape mismatch " + val(row_vecs[0]).shape_str() +
                               " vs " + t.shape_str());
        }
        ids.push_back(v.id);
    }
    Tensor out({row_vecs.size(), cols});
    for (std::size_t r = 0; r < row_vecs.size(); ++r) {
        const Tensor& t = val(row_vecs[r]);
        for (std::size_t j = 0; j < cols; ++j) out.at(r, j) = t[j];
    }
    return record("stack_rows", std::move(out), [ids, cols](Graph& g, int self) {
        const Tensor& d = g.nodes_[self].grad;
        for (std::size_t r = 0; r < ids.size(); ++r) {
            Tensor& dv = g.grad_buf(ids[r]);
            for (std::size_t j = 0; j < cols; ++j) dv[j] += d.at(r, j);
        }
    });
}

// ---------------------------------------------------------------------------
// neural kernels
// ---------------------------------------------------------------------------

Var Graph::embedding(Var table, const std::vector<int>& ids) {
    const Tensor& tt = val(table);
    if (tt.rank() != 2) throw InvalidInput("embedding: table must be rank-2, got " + tt.shape_str());
    if (ids.empty()) throw InvalidInput("embedding: empty id sequence");
    std::size_t v = tt.rows(), d = tt.cols();
    for (std::size_t t = 0; t < ids.size(); ++t) {
        if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= v) {
            throw InvalidInput("embedding: id " + std::to_string(ids[t]) + " at position " +
                               std::to_string(t) + " out of range [0," + std::to_string(v) + ")");
        }
    }
    Tensor out({ids.size(), d});
    for (std::size_t t = 0; t < ids.size(); ++t) {
        const double* src = tt.data() + static_cast<std::size_t>(ids[t]) * d;
        double* dst = out.data() + t * d;
        std::copy(src, src + d, dst);
    }
    int it = table.id;
    return record("embedding", std::move(out), [it, ids, d](Graph& g, int self) {
        const Tensor& grad_out = g.nodes_[self].grad;
        Tensor& dt = g.grad_buf(it);
        for (std::size_t t = 0; t < ids.size(); ++t) {
            double* dst = dt.data() + static_cast<std::size_t>(ids[t]) * d;
            const double* src = grad_out.data() + t * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
        }
    });
}

namespace {

// Shared row-wise masked softmax. mask == nullptr means all positions live.
void softmax_rows(const Tensor& in, const Tensor* mask, Tensor& out) {
    std::size_t n = in.rank() == 1 ? in.dim(0) : in.cols();
    std::size_t rows = in.size() / n;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = in.data() + r * n;
        const double* m = mask ? mask->data() + r * n : nullptr;
        double* y = out.data() + r * n;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (m && m[j] == 0.0) continue;
            mx = std::max(mx, x[j]);
        }
        if (mx == -std::numeric_limits<double>::infinity()) {
            throw InvalidInput("softmax: fully masked row " + std::to_string(r));
        }
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (m && m[j] == 0.0) {
                y[j] = 0.0;
            } else {
                y[j] = std::exp(x[j] - mx);
                z += y[j];
            }
        }
        for (std::size_t j = 0; j < n; ++j) y[j] /= z;
    }
}

void check_mask(const Tensor& logits, const Tensor& mask) {
    if (!logits.same_shape(mask)) {
        throw InvalidInput("softmax: mask shape " + mask.shape_str() + " does not match logits " +
                           logits.shape_str());
    }
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] != 0.0 && mask[i] != 1.0) {
            throw InvalidInput("softmax: mask entries must be 0 or 1");
        }
    }
}

}  // namespace

Var Graph::softmax(Var logits) {
    const Tensor& tl = val(logits);
    if (tl.rank() < 1 || tl.rank() > 2) {
        throw InvalidInput("softmax: expected rank 1 or 2, got " + tl.shape_str());
    }
    Tensor out(tl.dims());
    softmax_rows(tl, nullptr, out);
    int il = logits.id;
    return record("softmax", std::move(out), [il](Graph& g, int self) {
        const Tensor& y = g.nodes_[self].value;
        const Tensor& d = g.nodes_[self].grad;
        Tensor& dl = g.grad_buf(il);
        std::size_t n = y.rank() == 1 ? y.dim(0) : y.cols();
        std::size_t rows = y.size() / n;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* yr = y.data() + r * n;
            const double* dr = d.data() + r * n;
            double* dlr = dl.data() + r * n;
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += dr[j] * yr[j];
            for (std::size_t j = 0; j < n; ++j) dlr[j] += yr[j] * (dr[j] - dot);
        }
    });
}

Var Graph::softmax_masked(Var logits, const Tensor& mask) {
    const Tensor& tl = val(logits);
    if (tl.rank() < 1 || tl.rank() > 2) {
        throw InvalidInput("softmax: expected rank 1 or 2, got " + tl.shape_str());
    }
    check_mask(tl, mask);
    Tensor out(tl.dims());
    softmax_rows(tl, &mask, out);
    int il = logits.id;
    // masked positions hold y == 0, so the unmasked-row jacobian formula
    // already contributes nothing there
    return record("softmax_masked", std::move(out), [il](Graph& g, int self) {
        const Tensor& y = g.nodes_[self].value;
        const Tensor& d = g.nodes_[self].grad;
        Tensor& dl = g.grad_buf(il);
        std::size_t n = y.rank() == 1 ? y.dim(0) : y.cols();
        std::size_t rows = y.size() / n;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* yr = y.data() + r * n;
            const double* dr = d.data() + r * n;
            double* dlr = dl.data() + r * n;
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += dr[j] * yr[j];
            for (std::size_t j = 0; j < n; ++j) dlr[j] += yr[j] * (dr[j] - dot);
        }
    });
}

Var Graph::layer_norm(Var x, Var gain, Var bias, double eps) {
    const Tensor& tx = val(x);
    const Tensor& tg = val(gain);
    const Tensor& tb = val(bias);
    if (tx.rank() != 2 || tg.rank() != 1 || tb.rank() != 1 || tg.dim(0) != tx.cols() ||
        tb.dim(0) != tx.cols()) {
        throw InvalidInput("layer_norm: shape mismatch " + tx.shape_str() + " gain " +
                           tg.shape_str() + " bias " + tb.shape_str());
    }
    std::size_t rows = tx.rows(), n = tx.cols();
    Tensor out({rows, n});
    Tensor xhat({rows, n});
    std::vector<double> inv_std(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = tx.data() + r * n;
        double mu = 0.0;
        for (std::size_t j = 0; j < n; ++j) mu += xr[j];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<double>(n);
        double is = 1.0 / std::sqrt(var + eps);
        inv_std[r] = is;
        for (std::size_t j = 0; j < n; ++j) {
            double xh = (xr[j] - mu) * is;
            xhat.at(r, j) = xh;
            out.at(r, j) = xh * tg[j] + tb[j];
        }
    }
    int ix = x.id, ig = gain.id, ib = bias.id;
    return record(
        "layer_norm", std::move(out),
        [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& g, int self) {
            const Tensor& d = g.nodes_[self].grad;
            const Tensor& tg = g.nodes_[ig].value;
            Tensor& dx = g.grad_buf(ix);
            Tensor& dg = g.grad_buf(ig);
            Tensor& db = g.grad_buf(ib);
            std::size_t rows = d.rows(), n = d.cols();
            double invn = 1.0 / static_cast<double>(n);
            for (std::size_t r = 0; r < rows; ++r) {
                const double* dr = d.data() + r * n;
                const double* xh = xhat.data() + r * n;
                double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    double dxh = dr[j] * tg[j];
                    sum_dxhat += dxh;
                    sum_dxhat_xhat += dxh * xh[j];
                    dg[j] += dr[j] * xh[j];
                    db[j] += dr[j];
                }
                double is = inv_std[r];
                double* dxr = dx.data() + r * n;
                for (std::size_t j = 0; j < n; ++j) {
                    double dxh = dr[j] * tg[j];
                    dxr[j] += is * (dxh - invn * sum_dxhat - xh[j] * invn * sum_dxhat_xhat);
                }
            }
        });
}

Var Graph::conv1d(Var input, Var kernels, ConvPadding padding) {
    const Tensor& ti = val(input);
    const Tensor& tk = val(kernels);
    if (ti.rank() != 2 || tk.rank() != 3) {
        throw InvalidInput("conv1d: expected input len×d_in and kernels w×d_in×d_out, got " +
                           ti.shape_str() + " and " + tk.shape_str());
    }
    std::size_t len = ti.rows(), din = ti.cols();
    std::size_t w = tk.dim(0), kin = tk.dim(1), dout = tk.dim(2);
    if (kin != din) {
        throw InvalidInput("conv1d: input channels " + ti.shape_str() + " do not match kernels " +
                           tk.shape_str());
    }
    std::size_t out_len = 0;
    std::size_t pad = 0;
    if (padding == ConvPadding::same) {
        if (w % 2 == 0) throw InvalidInput("conv1d: same-padding requires odd width, got " +
                                           std::to_string(w));
        pad = w / 2;
        out_len = len;
    } else {
        if (len < w) {
            throw InvalidInput("conv1d: input length " + std::to_string(len) +
                               " shorter than kernel width " + std::to_string(w));
        }
        out_len = len - w + 1;
    }
    Tensor out({out_len, dout});
    for (std::size_t t = 0; t < out_len; ++t) {
        double* orow = out.data() + t * dout;
        for (std::size_t a = 0; a < w; ++a) {
            std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + a) - static_cast<std::ptrdiff_t>(pad);
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
            const double* irow = ti.data() + static_cast<std::size_t>(src) * din;
            const double* kplane = tk.data() + a * din * dout;
            for (std::size_t i = 0; i < din; ++i) {
                double x = irow[i];
                if (x == 0.0) continue;
                const double* krow = kplane + i * dout;
                for (std::size_t o = 0; o < dout; ++o) orow[o] += x * krow[o];
            }
        }
    }
    int ii = input.id, ik = kernels.id;
    return record("conv1d", std::move(out),
                  [ii, ik, len, din, w, dout, pad, out_len](Graph& g, int self) {
                      const Tensor& d = g.nodes_[self].grad;
                      const Tensor& ti = g.nodes_[ii].value;
                      const Tensor& tk = g.nodes_[ik].value;
                      Tensor& di = g.grad_buf(ii);
                      Tensor& dk = g.grad_buf(ik);
                      for (std::size_t t = 0; t < out_len; ++t) {
                          const double* drow = d.data() + t * dout;
                          for (std::size_t a = 0; a < w; ++a) {
                              std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + a) -
                                                   static_cast<std::ptrdiff_t>(pad);
                              if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                              const double* irow = ti.data() + static_cast<std::size_t>(src) * din;
                              double* dirow = di.data() + static_cast<std::size_t>(src) * din;
                              const double* kplane = tk.data() + a * din * dout;
                              double* dkplane = dk.data() + a * din * dout;
                              for (std::size_t i = 0; i < din; ++i) {
                                  const double* krow = kplane + i * dout;
                                  double* dkrow = dkplane + i * dout;
                                  double acc = 0.0;
                                  double x = irow[i];
                                  for (std::size_t o = 0; o < dout; ++o) {
                                      acc += drow[o] * krow[o];
                                      dkrow[o] += x * drow[o];
                                  }
                                  dirow[i] += acc;
                              }
                          }
                      }
                  });
}

Var Graph::max_pool_rows(Var x) {
    const Tensor& tx = val(x);
    if (tx.rank() != 2) throw InvalidInput("max_pool_rows: expected rank-2, got " + tx.shape_str());
    std::size_t rows = tx.rows(), n = tx.cols();
    Tensor out({n});
    std::vector<std::size_t> argmax(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        double best = tx.at(0, j);
        std::size_t best_r = 0;
        for (std::size_t r = 1; r < rows; ++r) {
            // strict > keeps the earliest position on ties, deterministically
            if (tx.at(r, j) > best) {
                best = tx.at(r, j);
                best_r = r;
            }
        }
        out[j] = best;
        argmax[j] = best_r;
    }
    int ix = x.id;
    return record("max_pool_rows", std::move(out),
                  [ix, argmax = std::move(argmax), n](Graph& g, int self) {
                      const Tensor& d = g.nodes_[self].grad;
                      Tensor& dx = g.grad_buf(ix);
                      for (std::size_t j = 0; j < n; ++j) dx.at(argmax[j], j) += d[j];
                  });
}

Var Graph::cross_entropy(Var logits, const std::vector<int>& targets) {
    const Tensor& tl = val(logits);
    if (tl.rank() != 2) throw InvalidInput("cross_entropy: logits must be batch×C, got " +
                                           tl.shape_str());
    std::size_t batch = tl.rows(), classes = tl.cols();
    if (targets.size() != batch) {
        throw InvalidInput("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                           std::to_string(batch) + " logit rows");
    }
    for (std::size_t i = 0; i < batch; ++i) {
        if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= classes) {
            throw InvalidInput("cross_entropy: target " + std::to_string(targets[i]) +
                               " at batch index " + std::to_string(i) + " out of range [0," +
                               std::to_string(classes) + ")");
        }
    }
    // mean over batch of -log softmax(logits)[target], max-shifted log-sum-exp
    Tensor probs({batch, classes});
    softmax_rows(tl, nullptr, probs);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const double* x = tl.data() + i * classes;
        double mx = *std::max_element(x, x + classes);
        double z = 0.0;
        for (std::size_t c = 0; c < classes; ++c) z += std::exp(x[c] - mx);
        loss += std::log(z) - (x[static_cast<std::size_t>(targets[i])] - mx);
    }
    loss /= static_cast<double>(batch);
    int il = logits.id;
    return record("cross_entropy", Tensor::scalar(loss),
                  [il, targets, probs = std::move(probs)](Graph& g, int self) {
                      double d = g.nodes_[self].grad[0];
                      Tensor& dl = g.grad_buf(il);
                      std::size_t batch = probs.rows(), classes = probs.cols();
                      double invb = d / static_cast<double>(batch);
                      for (std::size_t i = 0; i < batch; ++i) {
                          for (std::size_t c = 0; c < classes; ++c) {
                              double delta = (static_cast<std::size_t>(targets[i]) == c) ? 1.0 : 0.0;
                              dl.at(i, c) += invb * (probs.at(i, c) - delta);
                          }
                      }
                  });
}

Var Graph::dropout(Var x, double rate, Rng& rng, bool train_mode) {
    if (rate < 0.0 || rate >= 1.0) {
        throw InvalidInput("dropout: rate must be in [0,1), got " + std::to_string(rate));
    }
    if (!train_mode || rate == 0.0) return x;
    const Tensor& tx = val(x);
    double keep_scale = 1.0 / (1.0 - rate);
    std::vector<char> kept(tx.size());
    Tensor out(tx.dims());
    for (std::size_t i = 0; i < tx.size(); ++i) {
        kept[i] = rng.uniform() >= rate ? 1 : 0;
        out[i] = kept[i] ? tx[i] * keep_scale : 0.0;
    }
    int ix = x.id;
    return record("dropout", std::move(out),
                  [ix, kept = std::move(kept), keep_scale](Graph& g, int self) {
                      const Tensor& d = g.nodes_[self].grad;
                      Tensor& dx = g.grad_buf(ix);
                      for (std::size_t i = 0; i < d.size(); ++i) {
                          if (kept[i]) dx[i] += d[i] * keep_scale;
                      }
                  });
}

// ---------------------------------------------------------------------------
// composed cells
// ---------------------------------------------------------------------------

LstmState lstm_cell(Graph& g, Var x, Var h_prev, Var c_prev, Var w, Var u, Var b) {
    const Tensor& tw = g.val(w);
    const Tensor& tu = g.val(u);
    const Tensor& tb = g.val(b);
    const Tensor& th = g.val(h_prev);
    const Tensor& tc = g.val(c_prev);
    const Tensor& txx = g.val(x);
    if (tw.rank() != 2 || tu.rank() != 2 || tb.rank() != 1 || tw.cols() != tu.cols() ||
        tw.cols() != tb.dim(0) || tw.cols() % 4 != 0) {
        throw InvalidInput("lstm_cell: inconsistent gate shapes w " + tw.shape_str() + " u " +
                           tu.shape_str() + " b " + tb.shape_str());
    }
    std::size_t hidden = tw.cols() / 4;
    if (txx.rank() != 1 || txx.dim(0) != tw.rows() || th.rank() != 1 || th.dim(0) != hidden ||
        th.dim(0) != tu.rows() || !th.same_shape(tc)) {
        throw InvalidInput("lstm_cell: state shapes x " + txx.shape_str() + " h " + th.shape_str() +
                           " c " + tc.shape_str() + " do not match params w " + tw.shape_str());
    }
    Var gates = g.add(g.add(g.vecmat(x, w), g.vecmat(h_prev, u)), b);
    Var in_gate = g.sigmoid(g.slice_vec(gates, 0, hidden));
    Var forget_gate = g.sigmoid(g.slice_vec(gates, hidden, hidden));
    Var candidate = g.tanh(g.slice_vec(gates, 2 * hidden, hidden));
    Var out_gate = g.sigmoid(g.slice_vec(gates, 3 * hidden, hidden));
    Var c = g.add(g.mul(forget_gate, c_prev), g.mul(in_gate, candidate));
    Var h = g.mul(out_gate, g.tanh(c));
    return {h, c};
}

Var attention_pool(Graph& g, Var states, Var w, Var v, const Tensor* mask) {
    {
        // references into the tape go stale once ops are added, so all
        // validation happens up front
        const Tensor& ts = g.val(states);
        const Tensor& twt = g.val(w);
        const Tensor& tv = g.val(v);
        if (ts.rank() != 2 || twt.rank() != 2 || tv.rank() != 1 || ts.cols() != twt.rows() ||
            twt.cols() != tv.dim(0)) {
            throw InvalidInput("attention_pool: shape mismatch states " + ts.shape_str() + " w " +
                               twt.shape_str() + " v " + tv.shape_str());
        }
        if (mask && (mask->rank() != 1 || mask->dim(0) != ts.rows())) {
            throw InvalidInput("attention_pool: mask shape " + mask->shape_str() +
                               " does not match states " + ts.shape_str());
        }
    }
    Var scores = g.matvec(g.tanh(g.matmul(states, w)), v);  // len
    Var weights = mask ? g.softmax_masked(scores, *mask) : g.softmax(scores);
    return g.vecmat(weights, states);
}

}  // namespace kidc::num
