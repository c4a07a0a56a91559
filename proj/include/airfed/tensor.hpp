#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "airfed/common.hpp"
#include "airfed/rng.hpp"

namespace airfed::nn {

using Mat = Eigen::MatrixXd;

// Learnable tensor: value plus paired gradient storage.
struct Param {
    Mat w;
    Mat g;

    Param() = default;
    Param(int rows, int cols) : w(Mat::Zero(rows, cols)), g(Mat::Zero(rows, cols)) {}

    void zero_grad() { g.setZero(); }
    long size() const { return w.size(); }
};

inline void init_glorot(Param& p, Rng& rng) {
    double fan_in = static_cast<double>(p.w.rows());
    double fan_out = static_cast<double>(p.w.cols());
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (long i = 0; i < p.w.rows(); ++i)
        for (long j = 0; j < p.w.cols(); ++j) p.w(i, j) = rng.uniform(-bound, bound);
    p.g.setZero();
}

// Dynamic reverse-mode tape over dense matrices. Nodes are appended in
// topological order during the forward pass; backward() walks the arena in
// reverse. Parameter nodes alias external Param storage (no copies) and
// deposit gradients into Param::g.
class Tape {
public:
    struct Node {
        Mat value;                       // owned value (unused for param nodes)
        const Mat* external = nullptr;   // set for param/external nodes
        Mat grad;
        Param* param = nullptr;
        std::function<void(Tape&, const Node&)> back;  // pull-from-this into parents
        const char* op = "";
    };

    int size() const { return static_cast<int>(nodes_.size()); }
    void clear() { nodes_.clear(); }
    void reserve(size_t n) { nodes_.reserve(n); }

    const Mat& val(int i) const {
        const Node& n = nodes_[static_cast<size_t>(i)];
        return n.external ? *n.external : n.value;
    }
    Mat& grad(int i) { return nodes_[static_cast<size_t>(i)].grad; }
    const Node& node(int i) const { return nodes_[static_cast<size_t>(i)]; }

    int emplace(Node&& n) {
        const Mat& v = n.external ? *n.external : n.value;
        if (!v.allFinite())
            throw SimError(std::string("non-finite values produced by op '") + n.op + "'");
        n.grad = Mat::Zero(v.rows(), v.cols());
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    // Seeds d(loss)/d(loss) = 1 and propagates to every parameter used.
    void backward(int loss) {
        Node& ln = nodes_[static_cast<size_t>(loss)];
        if (ln.grad.rows() != 1 || ln.grad.cols() != 1)
            throw SimError("backward: loss must be a scalar node");
        ln.grad(0, 0) = 1.0;
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
            Node& n = nodes_[static_cast<size_t>(i)];
            if (n.back) n.back(*this, n);
            if (n.param) n.param->g += n.grad;
        }
    }

private:
    std::vector<Node> nodes_;
};

struct Var {
    Tape* tape = nullptr;
    int idx = -1;

    const Mat& val() const { return tape->val(idx); }
    long rows() const { return val().rows(); }
    long cols() const { return val().cols(); }
};

inline Var constant(Tape& t, Mat v, const char* op = "constant") {
    Tape::Node n;
    n.value = std::move(v);
    n.op = op;
    return {&t, t.emplace(std::move(n))};
}

inline Var scalar(Tape& t, double v) { return constant(t, Mat::Constant(1, 1, v), "scalar"); }

inline Var param(Tape& t, Param& p) {
    Tape::Node n;
    n.external = &p.w;
    n.param = &p;
    n.op = "param";
    return {&t, t.emplace(std::move(n))};
}

namespace detail {

inline Tape& same_tape(const Var& a, const Var& b) {
    if (a.tape != b.tape) throw SimError("ops require vars from the same tape");
    return *a.tape;
}

}  // namespace detail

inline Var matmul(const Var& a, const Var& b, const char* op = "matmul") {
    Tape& t = detail::same_tape(a, b);
    Tape::Node n;
    n.value = a.val() * b.val();
    n.op = op;
    int ia = a.idx, ib = b.idx;
    n.back = [ia, ib](Tape& tp, const Tape::Node& self) {
        tp.grad(ia) += self.grad * tp.val(ib).transpose();
        tp.grad(ib) += tp.val(ia).transpose() * self.grad;
    };
    return {&t, t.emplace(std::move(n))};
}

// a * b^T without materializing the transpose on the tape.
inline Var matmul_nt(const Var& a, const Var& b, const char* op = "matmul_nt") {
    Tape& t = detail::same_tape(a, b);
    Tape::Node n;
    n.value = a.val() * b.val().transpose();
    n.op = op;
    int ia = a.idx, ib = b.idx;
    n.back = [ia, ib](Tape& tp, const Tape::Node& self) {
        tp.grad(ia) += self.grad * tp.val(ib);
        tp.grad(ib) += self.grad.transpose() * tp.val(ia);
    };
    return {&t, t.emplace(std::move(n))};
}

inline Var add(const Var& a, const Var& b, const char* op = "add") {
    Tape& t = detail::same_tape(a, b);
    Tape::Node n;
    n.value = a.val() + b.val();
    n.op = op;
    int ia = a.idx, ib = b.idx;
    n.back = [ia, ib](Tape& tp, const Tape::Node& self) {
        tp.grad(ia) += self.grad;
        tp.grad(ib) += self.grad;
    };
    return {&t, t.emplace(std::move(n))};
}

inline Var sub(const Var& a, const Var& b, const char* op = "sub") {
    Tape& t = detail::same_tape(a, b);
    Tape::Node n;
    n.value = a.val() - b.val();
    n.op = op;
    int ia = a.idx, ib = b.idx;
    n.back = [ia, ib](Tape& tp, const Tape::Node& self) {
        tp.grad(ia) += self.grad;
        tp.grad(ib) -= self.grad;
    };
    return {&t, t.emplace(std::move(n))};
}

// Broadcasts a 1xC row vector over the rows of a.
inline Var add_rowvec(const Var& a, const Var& row, const char* op = "add_rowvec") {
    Tape& t = detail::same_tape(a, row);
    Tape::Node n;
    n.value = a.val().rowwise() + Eigen::RowVectorXd(row.val().row(0));
    n.op = op;
    int ia = a.idx, ir = row.idx;
    n.back = [ia, ir](Tape& tp, const Tape::Node& self) {
        tp.grad(ia) += self.grad;
        tp.grad(ir).row(0) += self.grad.colwise().sum();
    };
    return {&t, t.emplace(std::move(n))};
}

inline Var hadamard(const Var& a, const Var& b, const char* op = "hadamard") {
    Tape& t = detail::same_tape(a, b);
    Tape::Node n;
    n.value = a.val().cwiseProduct(b.val());
    n.op = op;
    int ia = a.idx, ib = b.idx;
    n.back = [ia, ib](Tape& tp, const Tape::Node& self) {
        tp.grad(ia) += self.grad.cwiseProduct(tp.val(ib));
        tp.grad(ib) += self.grad.cwiseProduct(tp.val(ia));
    };
    return {&t, t.emplace(std::move(n))};
}

inline Var divide(const Var& a, const Var& b, const char* op = "divide") {
    Tape& t = detail::same_tape(a, b);
    Tape::Node n;
    n.value = a.val().cwiseQuotient(b.val());
    n.op = op;
    int ia = a.idx, ib = b.idx;
    n.back = [ia, ib](Tape& tp, const Tape::Node& self) {
        tp.grad(ia) += self.grad.cwiseQuotient(tp.val(ib));
        tp.grad(ib) -= self.grad.cwiseProduct(tp.val(ia))
                           .cwiseQuotient(tp.val(ib).cwiseProduct(tp.val(ib)));
    };
    return {&t, t.emplace(std::move(n))};
}

inline Var scale(const Var& a, double s, const char* op = "scale") {
    Tape& t = *a.tape;
    Tape::Node n;
    n.value = a.val() * s;
    n.op = op;
    int ia = a.idx;
    n.back = [ia, s](Tape& tp, const Tape::Node& self) { tp.grad(ia) += self.grad * s; };
    return {&t, t.emplace(std::move(n))};
}

inline Var add_scalar(const Var& a, double s, const char* op = "add_scalar") {
    Tape& t = *a.tape;
    Tape::Node n;
    n.value = a.val().array() + s;
    n.op = op;
    int ia = a.idx;
    n.back = [ia](Tape& tp, const Tape::Node& self) { tp.grad(ia) += self.grad; };
    return {&t, t.emplace(std::move(n))};
}

inline Var relu(const Var& a, const char* op = "relu") {
    Tape& t = *a.tape;
    Tape::Node n;
    n.value = a.val().cwiseMax(0.0);
    n.op = op;
    int ia = a.idx;
    n.back = [ia](Tape& tp, const Tape::Node& self) {
        tp.grad(ia) += self.grad.cwiseProduct(
            (tp.val(ia).array() > 0.0).cast<double>().matrix());
    };
    return {&t, t.emplace(std::move(n))};
}

inline Var tanh_act(const Var& a, const char* op = "tanh") {
    Tape& t = *a.tape;
    Tape::Node n;
    n.value = a.val().array().tanh();
    n.op = op;
    int ia = a.idx;
    Mat out = n.value;
    n.back = [ia, out](Tape& tp, const Tape::Node& self) {
        tp.grad(ia) += self.grad.cwiseProduct((1.0 - out.array().square()).matrix());
    };
    return {&t, t.emplace(std::move(n))};
}

inline Var sigmoid(const Var& a, const char* op = "sigmoid") {
    Tape& t = *a.tape;
    Tape::Node n;
    n.value = (1.0 / (1.0 + (-a.val().array()).exp())).matrix();
    n.op = op;
    int ia = a.idx;
    Mat out = n.value;
    n.back = [ia, out](Tape& tp, const Tape::Node& self) {
        tp.grad(ia) += self.grad.cwiseProduct((out.array() * (1.0 - out.array())).matrix());
    };
    return {&t, t.emplace(std::move(n))};
}

inline Var exp_elem(const Var& a, const char* op = "exp") {
    Tape& t = *a.tape;
    Tape::Node n;
    n.value = a.val().array().exp();
    n.op = op;
    int ia = a.idx;
    Mat out = n.value;
    n.back = [ia, out](Tape& tp, const Tape::Node& self) {
        tp.grad(ia) += self.grad.cwiseProduct(out);
    };
    return {&t, t.emplace(std::move(n))};
}

inline Var log_elem(const Var& a, const char* op = "log") {
    Tape& t = *a.tape;
    Tape::Node n;
    n.value = a.val().array().log();
    n.op = op;
    int ia = a.idx;
    n.back = [ia](Tape& tp, const Tape::Node& self) {
        tp.grad(ia) += self.grad.cwiseQuotient(tp.val(ia));
    };
    return {&t, t.emplace(std::move(n))};
}

// Identity inside [lo, hi], gradient blocked outside (straight-through at
// the boundary). Used for the log-sigma clamp of the velocity actor.
inline Var clamp_pass(const Var& a, double lo, double hi, const char* op = "clamp") {
    Tape& t = *a.tape;
    Tape::Node n;
    n.value = a.val().cwiseMax(lo).cwiseMin(hi);
    n.op = op;
    int ia = a.idx;
    n.back = [ia, lo, hi](Tape& tp, const Tape::Node& self) {
        const Mat& v = tp.val(ia);
        tp.grad(ia) += self.grad.cwiseProduct(
            ((v.array() >= lo) && (v.array() <= hi)).cast<double>().matrix());
    };
    return {&t, t.emplace(std::move(n))};
}

inline Var sum(const Var& a, const char* op = "sum") {
    Tape& t = *a.tape;
    Tape::Node n;
    n.value = Mat::Constant(1, 1, a.val().sum());
    n.op = op;
    int ia = a.idx;
    n.back = [ia](Tape& tp, const Tape::Node& self) {
        tp.grad(ia).array() += self.grad(0, 0);
    };
    return {&t, t.emplace(std::move(n))};
}

inline Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.val().size()), "mean"); }

inline Var concat_cols(const Var& a, const Var& b, const char* op = "concat_cols") {
    Tape& t = detail::same_tape(a, b);
    Tape::Node n;
    n.value.resize(a.rows(), a.cols() + b.cols());
    n.value << a.val(), b.val();
    n.op = op;
    int ia = a.idx, ib = b.idx;
    long ca = a.cols();
    n.back = [ia, ib, ca](Tape& tp, const Tape::Node& self) {
        tp.grad(ia) += self.grad.leftCols(ca);
        tp.grad(ib) += self.grad.rightCols(self.grad.cols() - ca);
    };
    return {&t, t.emplace(std::move(n))};
}

inline Var slice_cols(const Var& a, long start, long count, const char* op = "slice_cols") {
    Tape& t = *a.tape;
    Tape::Node n;
    n.value = a.val().middleCols(start, count);
    n.op = op;
    int ia = a.idx;
    n.back = [ia, start, count](Tape& tp, const Tape::Node& self) {
        tp.grad(ia).middleCols(start, count) += self.grad;
    };
    return {&t, t.emplace(std::move(n))};
}

inline Var row(const Var& a, long r, const char* op = "row") {
    Tape& t = *a.tape;
    Tape::Node n;
    n.value = a.val().row(r);
    n.op = op;
    int ia = a.idx;
    n.back = [ia, r](Tape& tp, const Tape::Node& self) { tp.grad(ia).row(r) += self.grad.row(0); };
    return {&t, t.emplace(std::move(n))};
}

inline Var select(const Var& a, long r, long c, const char* op = "select") {
    Tape& t = *a.tape;
    Tape::Node n;
    n.value = Mat::Constant(1, 1, a.val()(r, c));
    n.op = op;
    int ia = a.idx;
    n.back = [ia, r, c](Tape& tp, const Tape::Node& self) { tp.grad(ia)(r, c) += self.grad(0, 0); };
    return {&t, t.emplace(std::move(n))};
}

// Row-wise softmax restricted to mask==1 entries; masked-out entries get
// probability exactly zero. Rows with an empty mask stay all-zero.
inline Var masked_softmax_rows(const Var& scores, const Mat& mask,
                               const char* op = "masked_softmax") {
    Tape& t = *scores.tape;
    const Mat& s = scores.val();
    Mat out = Mat::Zero(s.rows(), s.cols());
    for (long i = 0; i < s.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (long j = 0; j < s.cols(); ++j)
            if (mask(i, j) > 0.5 && s(i, j) > mx) mx = s(i, j);
        if (!std::isfinite(mx)) continue;
        double denom = 0.0;
        for (long j = 0; j < s.cols(); ++j)
            if (mask(i, j) > 0.5) denom += std::exp(s(i, j) - mx);
        for (long j = 0; j < s.cols(); ++j)
            if (mask(i, j) > 0.5) out(i, j) = std::exp(s(i, j) - mx) / denom;
    }
    Tape::Node n;
    n.value = std::move(out);
    n.op = op;
    int is = scores.idx;
    Mat p = n.value;
    n.back = [is, p](Tape& tp, const Tape::Node& self) {
        // dS = P o (dP - rowdot(dP, P))
        Mat& gs = tp.grad(is);
        for (long i = 0; i < p.rows(); ++i) {
            auto pi = p.row(i).array();
            auto di = self.grad.row(i).array();
            double dot = (pi * di).sum();
            gs.row(i) += (pi * (di - dot)).matrix();
        }
    };
    return {&t, t.emplace(std::move(n))};
}

// out(i, j) = Q.row(i) . M.row(i*N + j) -- the per-query edge-key term of
// the attention score.
inline Var edge_dot(const Var& q, const Var& m, long N, const char* op = "edge_dot") {
    Tape& t = detail::same_tape(q, m);
    const Mat& Q = q.val();
    const Mat& M = m.val();
    Mat out(N, N);
    for (long i = 0; i < N; ++i)
        for (long j = 0; j < N; ++j) out(i, j) = Q.row(i).dot(M.row(i * N + j));
    Tape::Node n;
    n.value = std::move(out);
    n.op = op;
    int iq = q.idx, im = m.idx;
    n.back = [iq, im, N](Tape& tp, const Tape::Node& self) {
        const Mat& Q = tp.val(iq);
        const Mat& M = tp.val(im);
        Mat& gq = tp.grad(iq);
        Mat& gm = tp.grad(im);
        for (long i = 0; i < N; ++i)
            for (long j = 0; j < N; ++j) {
                double g = self.grad(i, j);
                if (g == 0.0) continue;
                gq.row(i) += g * M.row(i * N + j);
                gm.row(i * N + j) += g * Q.row(i);
            }
    };
    return {&t, t.emplace(std::move(n))};
}

// --- Adam ----------------------------------------------------------------------

class Adam {
public:
    explicit Adam(double lr, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8)
        : lr_(lr), b1_(b1), b2_(b2), eps_(eps) {}

    void step(const std::vector<Param*>& params) {
        if (m_.empty()) {
            for (auto* p : params) {
                m_.push_back(Mat::Zero(p->w.rows(), p->w.cols()));
                v_.push_back(Mat::Zero(p->w.rows(), p->w.cols()));
            }
        }
        ++t_;
        double bc1 = 1.0 - std::pow(b1_, t_);
        double bc2 = 1.0 - std::pow(b2_, t_);
        for (size_t i = 0; i < params.size(); ++i) {
            Param& p = *params[i];
            m_[i] = b1_ * m_[i] + (1.0 - b1_) * p.g;
            v_[i] = b2_ * v_[i] + (1.0 - b2_) * p.g.cwiseProduct(p.g);
            Mat mhat = m_[i] / bc1;
            Mat vhat = v_[i] / bc2;
            p.w -= lr_ * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
        }
    }

    double lr() const { return lr_; }

private:
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<Mat> m_, v_;
};

}  // namespace airfed::nn
