// tape.hpp - define-by-run reverse-mode differentiation
//
// A Tape owns every node created during one forward pass. Nodes are appended
// in creation order, so creation order is a topological order and the
// backward sweep simply walks the node list in reverse.
//
// A tape is meant to live for one training step and be confined to one
// thread. Var is a cheap handle (tape pointer plus node index).

#pragma once

#include "solvergrad/tensor.hpp"

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace solvergrad {

class Tape;

class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Tensor& value() const;
    const Tensor& grad() const;
    const Shape& shape() const { return value().shape; }
    std::size_t size() const { return value().size(); }

    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    // Receives the adjoint of the node and accumulates into its parents
    // through Tape::accumulate.
    using BackwardFn = std::function<void(Tape&, const Tensor& adjoint)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Differentiable leaf (network weight, input we want gradients for).
    Var variable(Tensor value) { return push(std::move(value), {}, nullptr, true); }

    // Leaf that never receives an adjoint (targets, data).
    Var constant(Tensor value) { return push(std::move(value), {}, nullptr, false); }

    Var push(Tensor value, std::vector<Var> parents, BackwardFn backward, bool leaf = false) {
        Node node;
        node.value = std::move(value);
        node.leaf = leaf;
        node.backward = std::move(backward);
        node.parents.reserve(parents.size());
        for (const auto& p : parents) {
            if (p.tape() != this) throw std::invalid_argument("operand belongs to a different tape");
            node.parents.push_back(p.id());
        }
        nodes_.push_back(std::move(node));
        return Var(this, nodes_.size() - 1);
    }

    // Reverse sweep from a scalar root. Adjoints of all nodes are reset
    // first, so calling backward twice does not double-count.
    void backward(const Var& root) {
        if (root.tape() != this) throw std::invalid_argument("root belongs to a different tape");
        const Tensor& rv = nodes_[root.id()].value;
        if (!rv.is_scalar()) {
            throw shape_error("backward requires a scalar root, got shape " + shape_str(rv.shape));
        }
        for (auto& n : nodes_) n.grad = Tensor::zeros(n.value.shape);
        nodes_[root.id()].grad.data[0] = 1.0;
        for (std::size_t i = root.id() + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.backward) continue;
            // Copy: the callback may grow the node vector (it does not today,
            // but solver nodes call arbitrary user code).
            const Tensor adjoint = n.grad;
            n.backward(*this, adjoint);
        }
        swept_ = true;
    }

    void accumulate(const Var& v, const Tensor& adjoint) {
        Node& n = nodes_[v.id()];
        if (adjoint.size() != n.value.size()) {
            throw shape_error("adjoint shape " + shape_str(adjoint.shape) + " does not match node shape " +
                              shape_str(n.value.shape));
        }
        if (n.grad.size() != n.value.size()) n.grad = Tensor::zeros(n.value.shape);
        for (std::size_t i = 0; i < adjoint.size(); ++i) n.grad.data[i] += adjoint.data[i];
    }

    void accumulate(const Var& v, std::size_t index, double adjoint) {
        Node& n = nodes_[v.id()];
        if (n.grad.size() != n.value.size()) n.grad = Tensor::zeros(n.value.shape);
        n.grad.data[index] += adjoint;
    }

    const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }

    const Tensor& grad(std::size_t id) const {
        const Node& n = nodes_.at(id);
        if (!swept_) throw std::logic_error("grad() requested before backward()");
        return n.grad;
    }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        bool leaf = false;
    };

    std::vector<Node> nodes_;
    bool swept_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }
inline const Tensor& Var::grad() const { return tape_->grad(id_); }

}  // namespace solvergrad
