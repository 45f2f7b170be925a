// nn.hpp - small MLP backbones and first-order optimizers

#pragma once

#include "solvergrad/ops.hpp"
#include "solvergrad/tape.hpp"

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace solvergrad {

// Fully connected network with ReLU between layers and a linear output.
// Parameters are stored as W0, b0, W1, b1, ... with W_i of shape [in, out].
struct Mlp {
    std::vector<std::size_t> sizes;
    std::vector<Tensor> params;

    static Mlp init(std::vector<std::size_t> sizes, std::mt19937_64& rng) {
        if (sizes.size() < 2) throw std::invalid_argument("mlp needs at least input and output sizes");
        Mlp m;
        m.sizes = std::move(sizes);
        for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
            const std::size_t in = m.sizes[l], out = m.sizes[l + 1];
            const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
            std::uniform_real_distribution<double> u(-bound, bound);
            Tensor w = Tensor::zeros({in, out});
            for (auto& v : w.data) v = u(rng);
            m.params.push_back(std::move(w));
            m.params.push_back(Tensor::zeros({out}));
        }
        return m;
    }

    std::vector<Var> bind(Tape& tape) const {
        std::vector<Var> vars;
        vars.reserve(params.size());
        for (const auto& p : params) vars.push_back(tape.variable(p));
        return vars;
    }

    // x has shape [batch, sizes.front()].
    Var forward(std::span<const Var> vars, Var x) const {
        const std::size_t layers = sizes.size() - 1;
        for (std::size_t l = 0; l < layers; ++l) {
            x = add_bias(matmul(x, vars[2 * l]), vars[2 * l + 1]);
            if (l + 1 < layers) x = relu(x);
        }
        return x;
    }
};

enum class OptimizerKind { adam, sgd };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double momentum = 0.0;
    std::size_t batch_size = 50;
    // Step schedule: the rate is multiplied by decay_factor at the start of
    // each listed epoch (0-based).
    std::vector<int> decay_epochs;
    double decay_factor = 0.1;

    double rate_at(int epoch) const {
        double lr = learning_rate;
        for (int e : decay_epochs)
            if (epoch >= e) lr *= decay_factor;
        return lr;
    }
};

class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

    void step(std::vector<Tensor*> params, const std::vector<Tensor>& grads) {
        if (params.size() != grads.size()) throw std::invalid_argument("optimizer: parameter/gradient count mismatch");
        if (first_.empty()) {
            for (auto* p : params) {
                first_.push_back(Tensor::zeros(p->shape));
                second_.push_back(Tensor::zeros(p->shape));
            }
        }
        ++t_;
        const double lr = cfg_.learning_rate;
        for (std::size_t k = 0; k < params.size(); ++k) {
            Tensor& p = *params[k];
            const Tensor& g = grads[k];
            Tensor& m = first_[k];
            Tensor& v = second_[k];
            if (cfg_.kind == OptimizerKind::sgd) {
                for (std::size_t i = 0; i < p.size(); ++i) {
                    m.data[i] = cfg_.momentum * m.data[i] + g.data[i];
                    p.data[i] -= lr * m.data[i];
                }
                continue;
            }
            const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
            const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
            for (std::size_t i = 0; i < p.size(); ++i) {
                m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g.data[i];
                v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
                p.data[i] -= lr * (m.data[i] / c1) / (std::sqrt(v.data[i] / c2) + cfg_.epsilon);
            }
        }
    }

    void set_learning_rate(double lr) { cfg_.learning_rate = lr; }

    const OptimizerConfig& config() const { return cfg_; }

private:
    OptimizerConfig cfg_;
    std::vector<Tensor> first_, second_;
    long t_ = 0;
};

}  // namespace solvergrad
