#include "galmad/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "galmad/error.hpp"
#include "galmad/kernels.hpp"

namespace galmad::ad {

// ---- Parameter / Var ------------------------------------------------------

const Tensor& Parameter::grad() const {
    if (!has_grad_) throw GradientStateError("parameter '" + name_ + "' has no gradient");
    return grad_;
}

void Parameter::zero_grad() {
    has_grad_ = false;
    grad_ = Tensor();
}

const Tensor& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

// ---- Tape -----------------------------------------------------------------

Var Tape::constant(Tensor value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = mode_ == GradMode::Enabled;
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
    if (auto it = param_ids_.find(&p); it != param_ids_.end()) return Var(this, it->second);
    Node n;
    n.value = p.value();
    if (mode_ == GradMode::Enabled) {
        n.requires_grad = true;
        n.param = &p;
    }
    nodes_.push_back(std::move(n));
    const std::size_t id = nodes_.size() - 1;
    param_ids_.emplace(&p, id);
    return Var(this, id);
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    if (mode_ == GradMode::Enabled) {
        for (const Var& v : inputs) {
            if (v.tape_ != this) throw Error("op mixes variables from different tapes");
            n.requires_grad = n.requires_grad || nodes_[v.id_].requires_grad;
        }
        if (n.requires_grad) {
            n.inputs.reserve(inputs.size());
            for (const Var& v : inputs) n.inputs.push_back(v.id_);
            n.backward = std::move(fn);
        }
    }
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_slot(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.has_grad) {
        n.grad = Tensor(n.value.shape(), 0.0);
        n.has_grad = true;
    }
    return n.grad;
}

std::size_t Tape::backward(Var loss, bool accumulate) {
    if (mode_ != GradMode::Enabled) throw GradientStateError("backward() on a tape recorded without gradients");
    if (loss.tape_ != this) throw Error("loss belongs to a different tape");
    if (loss.value().size() != 1) {
        throw RankError("backward() needs a scalar loss, got shape " + to_string(loss.value().shape()));
    }
    if (consumed_) throw GradientStateError("backward() already ran on this tape");

    for (const auto& [p, id] : param_ids_) {
        (void)id;
        if (p->has_grad_ && !accumulate) {
            throw GradientStateError("gradient of parameter '" + p->name_ +
                                     "' was not reset before backward(); call zero_grad() or pass accumulate");
        }
    }
    consumed_ = true;

    if (!nodes_[loss.id_].requires_grad) return 0;
    grad_slot(loss.id_).fill(1.0);

    std::size_t visited = 0;
    for (std::size_t id = loss.id_ + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.has_grad) continue;
        if (n.backward) {
            BackwardContext ctx(*this, id);
            n.backward(ctx);
            ++visited;
        }
    }

    for (const auto& [cp, id] : param_ids_) {
        Parameter* p = const_cast<Parameter*>(cp);
        Node& n = nodes_[id];
        if (!p->has_grad_) {
            p->grad_ = Tensor(p->value_.shape(), 0.0);
            p->has_grad_ = true;
        }
        if (n.has_grad) {
            kernels::active().axpy(n.grad.size(), 1.0, n.grad.data().data(), p->grad_.data().data());
        }
    }
    return visited;
}

const Tensor& Tape::grad(Var v) const {
    const Node& n = nodes_[v.id_];
    if (!n.has_grad) throw GradientStateError("no gradient recorded for variable");
    return n.grad;
}

// ---- helpers --------------------------------------------------------------

namespace {

std::string shapes(const char* op, const Var& a, const Var& b) {
    return std::string(op) + ": incompatible shapes " + to_string(a.shape()) + " and " + to_string(b.shape());
}

bool is_scalar(const Tensor& t) { return t.size() == 1; }

bool is_row_vector_for(const Tensor& b, const Tensor& a) {
    if (a.rank() < 1) return false;
    const std::size_t q = a.cols();
    if (b.rank() == 1) return b.dim(0) == q;
    if (b.rank() == 2) return b.dim(0) == 1 && b.dim(1) == q && a.shape() != b.shape();
    return false;
}

double sum_of(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
}

template <class Fwd, class Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
    const Tensor& x = a.value();
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = fwd(x[i]);
    return a.tape().record(std::move(out), {a}, [deriv](BackwardContext& ctx) {
        const Tensor& x = ctx.input(0);
        const Tensor& y = ctx.output();
        const Tensor& g = ctx.grad_out();
        Tensor& gi = ctx.grad_in(0);
        for (std::size_t i = 0; i < x.size(); ++i) gi[i] += g[i] * deriv(x[i], y[i]);
    });
}

}  // namespace

// ---- linear algebra ---------------------------------------------------------

Var matmul(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0)) throw DimensionError(shapes("matmul", a, b));
    const std::size_t m = A.dim(0), p = A.dim(1), q = B.dim(1);
    Tensor out({m, q}, 0.0);
    kernels::active().gemm_nn(m, q, p, A.data().data(), B.data().data(), out.data().data());
    return a.tape().record(std::move(out), {a, b}, [m, p, q](BackwardContext& ctx) {
        const Tensor& g = ctx.grad_out();
        const auto& k = kernels::active();
        if (ctx.needs(0)) {
            // dA = dC * B^T
            k.gemm_nt(m, p, q, g.data().data(), ctx.input(1).data().data(), ctx.grad_in(0).data().data());
        }
        if (ctx.needs(1)) {
            // dB = A^T * dC
            k.gemm_tn(p, q, m, ctx.input(0).data().data(), g.data().data(), ctx.grad_in(1).data().data());
        }
    });
}

Var add(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.shape() == B.shape()) {
        Tensor out = A;
        kernels::active().axpy(B.size(), 1.0, B.data().data(), out.data().data());
        return a.tape().record(std::move(out), {a, b}, [](BackwardContext& ctx) {
            const Tensor& g = ctx.grad_out();
            for (std::size_t i = 0; i < 2; ++i) {
                if (ctx.needs(i)) kernels::active().axpy(g.size(), 1.0, g.data().data(), ctx.grad_in(i).data().data());
            }
        });
    }
    if (is_scalar(B)) {
        Tensor out = A;
        const double s = B[0];
        for (double& v : out.data()) v += s;
        return a.tape().record(std::move(out), {a, b}, [](BackwardContext& ctx) {
            const Tensor& g = ctx.grad_out();
            if (ctx.needs(0)) kernels::active().axpy(g.size(), 1.0, g.data().data(), ctx.grad_in(0).data().data());
            if (ctx.needs(1)) ctx.grad_in(1)[0] += sum_of(g.data());
        });
    }
    if (is_row_vector_for(B, A)) {
        Tensor out = A;
        const std::size_t rows = A.rows(), q = A.cols();
        for (std::size_t r = 0; r < rows; ++r) {
            kernels::active().axpy(q, 1.0, B.data().data(), out.data().data() + r * q);
        }
        return a.tape().record(std::move(out), {a, b}, [rows, q](BackwardContext& ctx) {
            const Tensor& g = ctx.grad_out();
            if (ctx.needs(0)) kernels::active().axpy(g.size(), 1.0, g.data().data(), ctx.grad_in(0).data().data());
            if (ctx.needs(1)) {
                double* gb = ctx.grad_in(1).data().data();
                for (std::size_t r = 0; r < rows; ++r) kernels::active().axpy(q, 1.0, g.data().data() + r * q, gb);
            }
        });
    }
    throw DimensionError(shapes("add", a, b));
}

Var sub(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.shape() == B.shape()) {
        Tensor out = A;
        kernels::active().axpy(B.size(), -1.0, B.data().data(), out.data().data());
        return a.tape().record(std::move(out), {a, b}, [](BackwardContext& ctx) {
            const Tensor& g = ctx.grad_out();
            if (ctx.needs(0)) kernels::active().axpy(g.size(), 1.0, g.data().data(), ctx.grad_in(0).data().data());
            if (ctx.needs(1)) kernels::active().axpy(g.size(), -1.0, g.data().data(), ctx.grad_in(1).data().data());
        });
    }
    if (is_scalar(B)) {
        Tensor out = A;
        const double s = B[0];
        for (double& v : out.data()) v -= s;
        return a.tape().record(std::move(out), {a, b}, [](BackwardContext& ctx) {
            const Tensor& g = ctx.grad_out();
            if (ctx.needs(0)) kernels::active().axpy(g.size(), 1.0, g.data().data(), ctx.grad_in(0).data().data());
            if (ctx.needs(1)) ctx.grad_in(1)[0] -= sum_of(g.data());
        });
    }
    throw DimensionError(shapes("sub", a, b));
}

Var mul(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.shape() == B.shape()) {
        Tensor out(A.shape());
        kernels::active().mul(A.size(), A.data().data(), B.data().data(), out.data().data());
        return a.tape().record(std::move(out), {a, b}, [](BackwardContext& ctx) {
            const Tensor& g = ctx.grad_out();
            const auto& k = kernels::active();
            if (ctx.needs(0)) k.mul_acc(g.size(), g.data().data(), ctx.input(1).data().data(), ctx.grad_in(0).data().data());
            if (ctx.needs(1)) k.mul_acc(g.size(), g.data().data(), ctx.input(0).data().data(), ctx.grad_in(1).data().data());
        });
    }
    if (is_scalar(B)) {
        Tensor out = A;
        const double s = B[0];
        for (double& v : out.data()) v *= s;
        return a.tape().record(std::move(out), {a, b}, [](BackwardContext& ctx) {
            const Tensor& g = ctx.grad_out();
            if (ctx.needs(0)) kernels::active().axpy(g.size(), ctx.input(1)[0], g.data().data(), ctx.grad_in(0).data().data());
            if (ctx.needs(1)) ctx.grad_in(1)[0] += kernels::active().dot(g.size(), g.data().data(), ctx.input(0).data().data());
        });
    }
    throw DimensionError(shapes("mul", a, b));
}

Var scale(Var a, double factor) {
    Tensor out = a.value();
    for (double& v : out.data()) v *= factor;
    return a.tape().record(std::move(out), {a}, [factor](BackwardContext& ctx) {
        const Tensor& g = ctx.grad_out();
        kernels::active().axpy(g.size(), factor, g.data().data(), ctx.grad_in(0).data().data());
    });
}

// ---- pointwise nonlinearities ---------------------------------------------

Var sigmoid(Var a) {
    const Tensor& x = a.value();
    Tensor out(x.shape());
    kernels::active().sigmoid(x.size(), x.data().data(), out.data().data());
    return a.tape().record(std::move(out), {a}, [](BackwardContext& ctx) {
        const Tensor& y = ctx.output();
        const Tensor& g = ctx.grad_out();
        Tensor& gi = ctx.grad_in(0);
        for (std::size_t i = 0; i < y.size(); ++i) gi[i] += g[i] * y[i] * (1.0 - y[i]);
    });
}

Var tanh(Var a) {
    const Tensor& x = a.value();
    Tensor out(x.shape());
    kernels::active().tanh(x.size(), x.data().data(), out.data().data());
    return a.tape().record(std::move(out), {a}, [](BackwardContext& ctx) {
        const Tensor& y = ctx.output();
        const Tensor& g = ctx.grad_out();
        Tensor& gi = ctx.grad_in(0);
        for (std::size_t i = 0; i < y.size(); ++i) gi[i] += g[i] * (1.0 - y[i] * y[i]);
    });
}

Var leaky_relu(Var a, double negative_slope) {
    return unary(
        a, [negative_slope](double x) { return x >= 0.0 ? x : negative_slope * x; },
        [negative_slope](double x, double) { return x >= 0.0 ? 1.0 : negative_slope; });
}

Var elu(Var a, double alpha) {
    return unary(
        a, [alpha](double x) { return x > 0.0 ? x : alpha * std::expm1(x); },
        [alpha](double x, double y) { return x > 0.0 ? 1.0 : y + alpha; });
}

// ---- softmax ----------------------------------------------------------------

Var masked_softmax(Var logits, const std::vector<std::uint8_t>& mask) {
    const Tensor& x = logits.value();
    const std::size_t cols = x.cols();
    const std::size_t rows = x.rows();
    if (cols == 0 || mask.empty() || mask.size() % cols != 0) {
        throw DimensionError("masked_softmax: mask of " + std::to_string(mask.size()) +
                             " entries does not fit logits " + to_string(x.shape()));
    }
    const std::size_t mask_rows = mask.size() / cols;
    if (rows % mask_rows != 0) {
        throw DimensionError("masked_softmax: " + std::to_string(rows) + " logit rows are not a multiple of " +
                             std::to_string(mask_rows) + " mask rows");
    }

    Tensor out(x.shape(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::uint8_t* m = mask.data() + (r % mask_rows) * cols;
        const double* xi = x.data().data() + r * cols;
        double* yi = out.data().data() + r * cols;
        double mx = -INFINITY;
        bool admitted = false;
        for (std::size_t j = 0; j < cols; ++j) {
            if (m[j]) {
                // Non-finite logits propagate as NaN rather than masquerading as an empty row.
                mx = admitted ? std::max(mx, xi[j]) : xi[j];
                admitted = true;
            }
        }
        if (!admitted) {
            throw DegenerateMaskError("masked_softmax: row " + std::to_string(r) + " has no admitted entry");
        }
        double z = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            if (m[j]) {
                yi[j] = std::exp(xi[j] - mx);
                z += yi[j];
            }
        }
        const double inv = 1.0 / z;
        for (std::size_t j = 0; j < cols; ++j) yi[j] *= inv;
    }
    return logits.tape().record(std::move(out), {logits}, [rows, cols](BackwardContext& ctx) {
        const Tensor& y = ctx.output();
        const Tensor& g = ctx.grad_out();
        Tensor& gi = ctx.grad_in(0);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* yr = y.data().data() + r * cols;
            const double* gr = g.data().data() + r * cols;
            double* out = gi.data().data() + r * cols;
            double s = 0.0;
            for (std::size_t j = 0; j < cols; ++j) s += yr[j] * gr[j];
            for (std::size_t j = 0; j < cols; ++j) out[j] += yr[j] * (gr[j] - s);
        }
    });
}

// ---- reductions -------------------------------------------------------------

Var mse(Var pred, Var target) {
    const Tensor& p = pred.value();
    const Tensor& t = target.value();
    if (p.shape() != t.shape()) throw DimensionError(shapes("mse", pred, target));
    if (p.size() == 0) throw EmptyInputError("mse of empty tensors");
    const double n = static_cast<double>(p.size());
    const double v = kernels::active().sum_sq_diff(p.size(), p.data().data(), t.data().data()) / n;
    return pred.tape().record(Tensor::scalar(v), {pred, target}, [n](BackwardContext& ctx) {
        const double g = ctx.grad_out()[0] * 2.0 / n;
        const Tensor& p = ctx.input(0);
        const Tensor& t = ctx.input(1);
        const auto& k = kernels::active();
        if (ctx.needs(0)) {
            double* gp = ctx.grad_in(0).data().data();
            k.axpy(p.size(), g, p.data().data(), gp);
            k.axpy(p.size(), -g, t.data().data(), gp);
        }
        if (ctx.needs(1)) {
            double* gt = ctx.grad_in(1).data().data();
            k.axpy(p.size(), -g, p.data().data(), gt);
            k.axpy(p.size(), g, t.data().data(), gt);
        }
    });
}

Var sum(Var a) {
    return a.tape().record(Tensor::scalar(sum_of(a.value().data())), {a}, [](BackwardContext& ctx) {
        const double g = ctx.grad_out()[0];
        for (double& v : ctx.grad_in(0).data()) v += g;
    });
}

Var mean(Var a) {
    const std::size_t n = a.value().size();
    if (n == 0) throw EmptyInputError("mean of empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

// ---- shape ops --------------------------------------------------------------

Var reshape(Var a, Shape shape) {
    Tensor out = a.value().reshaped(std::move(shape));
    return a.tape().record(std::move(out), {a}, [](BackwardContext& ctx) {
        const Tensor& g = ctx.grad_out();
        kernels::active().axpy(g.size(), 1.0, g.data().data(), ctx.grad_in(0).data().data());
    });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
    const Tensor& x = a.value();
    if (x.rank() != 2 || begin > end || end > x.dim(0)) {
        throw DimensionError("slice_rows [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " +
                             to_string(x.shape()));
    }
    const std::size_t q = x.dim(1);
    std::vector<double> data(x.data().begin() + begin * q, x.data().begin() + end * q);
    return a.tape().record(Tensor({end - begin, q}, std::move(data)), {a}, [begin, q](BackwardContext& ctx) {
        const Tensor& g = ctx.grad_out();
        kernels::active().axpy(g.size(), 1.0, g.data().data(), ctx.grad_in(0).data().data() + begin * q);
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw EmptyInputError("concat_rows of nothing");
    const std::size_t q = parts[0].value().cols();
    std::size_t rows = 0;
    for (const Var& p : parts) {
        if (p.value().rank() != 2 || p.value().cols() != q) throw DimensionError(shapes("concat_rows", parts[0], p));
        rows += p.value().dim(0);
    }
    std::vector<double> data;
    data.reserve(rows * q);
    for (const Var& p : parts) data.insert(data.end(), p.value().data().begin(), p.value().data().end());
    const std::size_t count = parts.size();
    return parts[0].tape().record(Tensor({rows, q}, std::move(data)), parts, [count](BackwardContext& ctx) {
        const Tensor& g = ctx.grad_out();
        std::size_t offset = 0;
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t n = ctx.input(i).size();
            if (ctx.needs(i)) kernels::active().axpy(n, 1.0, g.data().data() + offset, ctx.grad_in(i).data().data());
            offset += n;
        }
    });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
    const Tensor& x = a.value();
    if (x.rank() != 2 || begin > end || end > x.dim(1)) {
        throw DimensionError("slice_cols [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " +
                             to_string(x.shape()));
    }
    const std::size_t rows = x.dim(0), q = x.dim(1), w = end - begin;
    Tensor out({rows, w});
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(x.data().data() + r * q + begin, w, out.data().data() + r * w);
    }
    return a.tape().record(std::move(out), {a}, [rows, q, w, begin](BackwardContext& ctx) {
        const Tensor& g = ctx.grad_out();
        double* gi = ctx.grad_in(0).data().data();
        for (std::size_t r = 0; r < rows; ++r) {
            kernels::active().axpy(w, 1.0, g.data().data() + r * w, gi + r * q + begin);
        }
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw EmptyInputError("concat_cols of nothing");
    const std::size_t rows = parts[0].value().rows();
    std::size_t q = 0;
    std::vector<std::size_t> widths;
    for (const Var& p : parts) {
        if (p.value().rank() != 2 || p.value().rows() != rows) throw DimensionError(shapes("concat_cols", parts[0], p));
        widths.push_back(p.value().cols());
        q += widths.back();
    }
    Tensor out({rows, q});
    std::size_t offset = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const double* src = parts[i].value().data().data();
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(src + r * widths[i], widths[i], out.data().data() + r * q + offset);
        }
        offset += widths[i];
    }
    return parts[0].tape().record(std::move(out), parts, [rows, q, widths](BackwardContext& ctx) {
        const Tensor& g = ctx.grad_out();
        std::size_t offset = 0;
        for (std::size_t i = 0; i < widths.size(); ++i) {
            if (ctx.needs(i)) {
                double* gi = ctx.grad_in(i).data().data();
                for (std::size_t r = 0; r < rows; ++r) {
                    kernels::active().axpy(widths[i], 1.0, g.data().data() + r * q + offset, gi + r * widths[i]);
                }
            }
            offset += widths[i];
        }
    });
}

// ---- graph attention helpers -----------------------------------------------

Var pair_sum(Var left, Var right, std::size_t n) {
    const Tensor& l = left.value();
    const Tensor& r = right.value();
    if (n == 0 || l.size() != r.size() || l.size() % n != 0 || l.cols() != (l.rank() == 1 ? l.size() : 1)) {
        throw DimensionError(shapes("pair_sum", left, right));
    }
    const std::size_t g = l.size() / n;
    Tensor out({g, n, n});
    for (std::size_t b = 0; b < g; ++b)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) out[(b * n + i) * n + j] = l[b * n + i] + r[b * n + j];
    return left.tape().record(std::move(out), {left, right}, [g, n](BackwardContext& ctx) {
        const Tensor& gr = ctx.grad_out();
        if (ctx.needs(0)) {
            Tensor& gl = ctx.grad_in(0);
            for (std::size_t b = 0; b < g; ++b)
                for (std::size_t i = 0; i < n; ++i) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += gr[(b * n + i) * n + j];
                    gl[b * n + i] += s;
                }
        }
        if (ctx.needs(1)) {
            Tensor& grr = ctx.grad_in(1);
            for (std::size_t b = 0; b < g; ++b)
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j) grr[b * n + j] += gr[(b * n + i) * n + j];
        }
    });
}

Var batched_matmul(Var att, Var values) {
    const Tensor& A = att.value();
    const Tensor& V = values.value();
    if (A.rank() != 3 || A.dim(1) != A.dim(2) || V.rank() != 2 || V.dim(0) != A.dim(0) * A.dim(1)) {
        throw DimensionError(shapes("batched_matmul", att, values));
    }
    const std::size_t g = A.dim(0), n = A.dim(1), d = V.dim(1);
    Tensor out({g * n, d}, 0.0);
    const auto& k = kernels::active();
    for (std::size_t b = 0; b < g; ++b) {
        k.gemm_nn(n, d, n, A.data().data() + b * n * n, V.data().data() + b * n * d, out.data().data() + b * n * d);
    }
    return att.tape().record(std::move(out), {att, values}, [g, n, d](BackwardContext& ctx) {
        const Tensor& gr = ctx.grad_out();
        const auto& k = kernels::active();
        if (ctx.needs(0)) {
            double* ga = ctx.grad_in(0).data().data();
            const double* v = ctx.input(1).data().data();
            for (std::size_t b = 0; b < g; ++b) {
                k.gemm_nt(n, n, d, gr.data().data() + b * n * d, v + b * n * d, ga + b * n * n);
            }
        }
        if (ctx.needs(1)) {
            double* gv = ctx.grad_in(1).data().data();
            const double* a = ctx.input(0).data().data();
            for (std::size_t b = 0; b < g; ++b) {
                k.gemm_tn(n, d, n, a + b * n * n, gr.data().data() + b * n * d, gv + b * n * d);
            }
        }
    });
}

}  // namespace galmad::ad
