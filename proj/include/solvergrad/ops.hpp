// ops.hpp - differentiable tensor operations on a Tape
//
// Shape contracts (no broadcasting anywhere):
//   add/sub/mul            a, b same shape            -> same shape
//   scale/add_scalar       any                        -> same shape
//   matmul                 [m,k] x [k,n]              -> [m,n]
//   add_bias               [m,n] + [n]                -> [m,n]
//   relu/softplus/sigmoid/exp/log/square   elementwise
//   sum/mean               any                        -> scalar
//   l1_loss/l2_loss/bce    pred, target same shape    -> scalar (mean reduction)
//   pairwise_sqdist        [m,d]                      -> [m,m]
//   pairwise_distance      [m,d]                      -> [m,m], zero diagonal
//   normalize_rows         [m,d]                      -> [m,d], unit rows
//   gather                 any, flat indices          -> [len]
//   gather_rows            [m,n], row indices         -> [len,n]
//   reshape                any, new shape             -> same element count

#pragma once

#include "solvergrad/tape.hpp"
#include "solvergrad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <cstddef>
#include <string>
#include <vector>

namespace solvergrad {

namespace detail {

inline void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape != b.shape) {
        throw shape_error(std::string(op) + ": shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    }
}

inline void require_matrix(const char* op, const Tensor& a) {
    if (!a.is_matrix()) throw shape_error(std::string(op) + ": expected a matrix, got " + shape_str(a.shape));
}

template <class F, class DF>
Var unary(const Var& a, F f, DF df) {
    const Tensor& av = a.value();
    Tensor out = Tensor::zeros(av.shape);
    for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = f(av.data[i]);
    return a.tape()->push(std::move(out), {a}, [a, df](Tape& t, const Tensor& adj) {
        const Tensor& x = a.value();
        Tensor g = Tensor::zeros(x.shape);
        for (std::size_t i = 0; i < x.size(); ++i) g.data[i] = adj.data[i] * df(x.data[i]);
        t.accumulate(a, g);
    });
}

inline double stable_softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double stable_sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace detail

inline Var add(const Var& a, const Var& b) {
    detail::require_same_shape("add", a.value(), b.value());
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.value().data[i];
    return a.tape()->push(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& adj) {
        t.accumulate(a, adj);
        t.accumulate(b, adj);
    });
}

inline Var sub(const Var& a, const Var& b) {
    detail::require_same_shape("sub", a.value(), b.value());
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.value().data[i];
    return a.tape()->push(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& adj) {
        t.accumulate(a, adj);
        Tensor neg = adj;
        for (auto& v : neg.data) v = -v;
        t.accumulate(b, neg);
    });
}

inline Var mul(const Var& a, const Var& b) {
    detail::require_same_shape("mul", a.value(), b.value());
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.value().data[i];
    return a.tape()->push(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& adj) {
        const Tensor& av = a.value();
        const Tensor& bv = b.value();
        Tensor ga = Tensor::zeros(av.shape);
        Tensor gb = Tensor::zeros(bv.shape);
        for (std::size_t i = 0; i < av.size(); ++i) {
            ga.data[i] = adj.data[i] * bv.data[i];
            gb.data[i] = adj.data[i] * av.data[i];
        }
        t.accumulate(a, ga);
        t.accumulate(b, gb);
    });
}

inline Var scale(const Var& a, double c) {
    return detail::unary(a, [c](double x) { return c * x; }, [c](double) { return c; });
}

inline Var add_scalar(const Var& a, double c) {
    return detail::unary(a, [c](double x) { return x + c; }, [](double) { return 1.0; });
}

inline Var relu(const Var& a) {
    return detail::unary(a, [](double x) { return x > 0 ? x : 0.0; }, [](double x) { return x > 0 ? 1.0 : 0.0; });
}

inline Var softplus(const Var& a) {
    return detail::unary(a, detail::stable_softplus, detail::stable_sigmoid);
}

inline Var sigmoid(const Var& a) {
    return detail::unary(a, detail::stable_sigmoid, [](double x) {
        const double s = detail::stable_sigmoid(x);
        return s * (1.0 - s);
    });
}

inline Var exp(const Var& a) {
    return detail::unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

// Natural log; inputs must be strictly positive.
inline Var log(const Var& a) {
    for (double x : a.value().data) {
        if (!(x > 0)) throw std::domain_error("log: non-positive input " + std::to_string(x));
    }
    return detail::unary(a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

inline Var square(const Var& a) {
    return detail::unary(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

inline Var sum(const Var& a) {
    double s = 0;
    for (double x : a.value().data) s += x;
    return a.tape()->push(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor& adj) {
        Tensor g = Tensor::zeros(a.value().shape);
        for (auto& v : g.data) v = adj.data[0];
        t.accumulate(a, g);
    });
}

inline Var mean(const Var& a) {
    const double n = static_cast<double>(a.size());
    return scale(sum(a), 1.0 / n);
}

inline Var matmul(const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    detail::require_matrix("matmul", av);
    detail::require_matrix("matmul", bv);
    if (av.cols() != bv.rows()) {
        throw shape_error("matmul: inner dimensions differ " + shape_str(av.shape) + " x " + shape_str(bv.shape));
    }
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av(i, p);
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out(i, j) += aip * bv(p, j);
        }
    return a.tape()->push(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, const Tensor& adj) {
        const Tensor& av = a.value();
        const Tensor& bv = b.value();
        Tensor ga = Tensor::zeros(av.shape);
        Tensor gb = Tensor::zeros(bv.shape);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
                double acc = 0;
                for (std::size_t j = 0; j < n; ++j) acc += adj.data[i * n + j] * bv(p, j);
                ga(i, p) = acc;
            }
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t i = 0; i < m; ++i) {
                const double aip = av(i, p);
                if (aip == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j) gb(p, j) += aip * adj.data[i * n + j];
            }
        t.accumulate(a, ga);
        t.accumulate(b, gb);
    });
}

inline Var add_bias(const Var& x, const Var& bias) {
    const Tensor& xv = x.value();
    const Tensor& bv = bias.value();
    detail::require_matrix("add_bias", xv);
    if (!bv.is_vector() || bv.size() != xv.cols()) {
        throw shape_error("add_bias: bias " + shape_str(bv.shape) + " does not match columns of " + shape_str(xv.shape));
    }
    Tensor out = xv;
    const std::size_t m = xv.rows(), n = xv.cols();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) += bv[j];
    return x.tape()->push(std::move(out), {x, bias}, [x, bias, m, n](Tape& t, const Tensor& adj) {
        t.accumulate(x, adj);
        Tensor gb = Tensor::zeros({n});
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gb[j] += adj.data[i * n + j];
        t.accumulate(bias, gb);
    });
}

inline Var reshape(const Var& a, Shape shape) {
    if (numel(shape) != a.size()) {
        throw shape_error("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    }
    Tensor out(std::move(shape), a.value().data);
    return a.tape()->push(std::move(out), {a}, [a](Tape& t, const Tensor& adj) {
        t.accumulate(a, Tensor(a.value().shape, adj.data));
    });
}

inline Var flatten(const Var& a) { return reshape(a, {a.size()}); }

inline Var gather(const Var& a, std::vector<std::size_t> indices) {
    const Tensor& av = a.value();
    Tensor out = Tensor::zeros({indices.size()});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= av.size()) throw shape_error("gather: index out of range");
        out[i] = av.data[indices[i]];
    }
    return a.tape()->push(std::move(out), {a}, [a, indices = std::move(indices)](Tape& t, const Tensor& adj) {
        for (std::size_t i = 0; i < indices.size(); ++i) t.accumulate(a, indices[i], adj.data[i]);
    });
}

inline Var gather_rows(const Var& a, std::vector<std::size_t> rows) {
    const Tensor& av = a.value();
    detail::require_matrix("gather_rows", av);
    const std::size_t n = av.cols();
    Tensor out = Tensor::zeros({rows.size(), n});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= av.rows()) throw shape_error("gather_rows: row index out of range");
        for (std::size_t j = 0; j < n; ++j) out(i, j) = av(rows[i], j);
    }
    return a.tape()->push(std::move(out), {a}, [a, rows = std::move(rows), n](Tape& t, const Tensor& adj) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < n; ++j) t.accumulate(a, rows[i] * n + j, adj.data[i * n + j]);
    });
}

inline Var l1_loss(const Var& pred, const Var& target) {
    detail::require_same_shape("l1_loss", pred.value(), target.value());
    const std::size_t n = pred.size();
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(pred.value().data[i] - target.value().data[i]);
    return pred.tape()->push(Tensor::scalar(s / n), {pred, target}, [pred, target, n](Tape& t, const Tensor& adj) {
        Tensor gp = Tensor::zeros(pred.value().shape);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = pred.value().data[i] - target.value().data[i];
            gp.data[i] = adj.data[0] * ((d > 0) - (d < 0)) / static_cast<double>(n);
        }
        t.accumulate(pred, gp);
        for (auto& v : gp.data) v = -v;
        t.accumulate(target, gp);
    });
}

// Mean squared error.
inline Var l2_loss(const Var& pred, const Var& target) { return mean(square(sub(pred, target))); }

// Binary cross-entropy on probabilities, clamped away from {0, 1}.
inline Var bce(const Var& prob, const Var& target) {
    detail::require_same_shape("bce", prob.value(), target.value());
    static constexpr double eps = 1e-12;
    const std::size_t n = prob.size();
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = std::clamp(prob.value().data[i], eps, 1.0 - eps);
        const double y = target.value().data[i];
        s -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
    return prob.tape()->push(Tensor::scalar(s / n), {prob}, [prob, target, n](Tape& t, const Tensor& adj) {
        Tensor g = Tensor::zeros(prob.value().shape);
        for (std::size_t i = 0; i < n; ++i) {
            const double p = std::clamp(prob.value().data[i], eps, 1.0 - eps);
            const double y = target.value().data[i];
            g.data[i] = adj.data[0] * (-(y / p) + (1.0 - y) / (1.0 - p)) / static_cast<double>(n);
        }
        t.accumulate(prob, g);
    });
}

inline Var pairwise_sqdist(const Var& x) {
    const Tensor& xv = x.value();
    detail::require_matrix("pairwise_sqdist", xv);
    const std::size_t m = xv.rows(), d = xv.cols();
    Tensor out = Tensor::zeros({m, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = xv(i, c) - xv(j, c);
                s += diff * diff;
            }
            out(i, j) = s;
        }
    return x.tape()->push(std::move(out), {x}, [x, m, d](Tape& t, const Tensor& adj) {
        const Tensor& xv = x.value();
        Tensor g = Tensor::zeros(xv.shape);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                const double a = adj.data[i * m + j];
                if (a == 0.0 || i == j) continue;
                for (std::size_t c = 0; c < d; ++c) {
                    const double diff = 2.0 * a * (xv(i, c) - xv(j, c));
                    g(i, c) += diff;
                    g(j, c) -= diff;
                }
            }
        t.accumulate(x, g);
    });
}

// Euclidean distance matrix. Coincident points get distance 0 and a zero
// local derivative (the true derivative does not exist there).
inline Var pairwise_distance(const Var& x) {
    const Tensor& xv = x.value();
    detail::require_matrix("pairwise_distance", xv);
    const std::size_t m = xv.rows(), d = xv.cols();
    Tensor out = Tensor::zeros({m, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            double s = 0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = xv(i, c) - xv(j, c);
                s += diff * diff;
            }
            out(i, j) = out(j, i) = std::sqrt(s);
        }
    Tensor dist = out;
    return x.tape()->push(std::move(out), {x}, [x, m, d, dist = std::move(dist)](Tape& t, const Tensor& adj) {
        const Tensor& xv = x.value();
        Tensor g = Tensor::zeros(xv.shape);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                const double a = adj.data[i * m + j];
                const double r = dist(i, j);
                if (a == 0.0 || i == j || r == 0.0) continue;
                for (std::size_t c = 0; c < d; ++c) {
                    const double diff = a * (xv(i, c) - xv(j, c)) / r;
                    g(i, c) += diff;
                    g(j, c) -= diff;
                }
            }
        t.accumulate(x, g);
    });
}

inline Var normalize_rows(const Var& x) {
    const Tensor& xv = x.value();
    detail::require_matrix("normalize_rows", xv);
    const std::size_t m = xv.rows(), d = xv.cols();
    Tensor out = xv;
    std::vector<double> norms(m);
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0;
        for (std::size_t c = 0; c < d; ++c) s += xv(i, c) * xv(i, c);
        norms[i] = std::sqrt(s);
        if (!(norms[i] > 0)) throw std::domain_error("normalize_rows: zero row");
        for (std::size_t c = 0; c < d; ++c) out(i, c) /= norms[i];
    }
    return x.tape()->push(std::move(out), {x}, [x, m, d, norms = std::move(norms)](Tape& t, const Tensor& adj) {
        const Tensor& xv = x.value();
        Tensor g = Tensor::zeros(xv.shape);
        for (std::size_t i = 0; i < m; ++i) {
            const double r = norms[i];
            double dot = 0;
            for (std::size_t c = 0; c < d; ++c) dot += xv(i, c) * adj.data[i * d + c];
            for (std::size_t c = 0; c < d; ++c) g(i, c) = adj.data[i * d + c] / r - xv(i, c) * dot / (r * r * r);
        }
        t.accumulate(x, g);
    });
}

}  // namespace solvergrad
