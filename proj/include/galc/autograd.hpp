#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "galc/tensor.hpp"

namespace galc {

template <class T>
class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while its tape lives.
template <class T>
class Var {
   public:
    Var() = default;
    Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

    std::size_t id() const { return id_; }
    Tape<T>& tape() const { return *tape_; }
    const BasicTensor<T>& value() const { return tape_->value(id_); }
    const Shape& shape() const { return value().shape(); }
    bool requires_grad() const { return tape_->requires_grad(id_); }

   private:
    Tape<T>* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Gradients of a scalar with respect to tape nodes, indexed by node id.
template <class T>
class Gradients {
   public:
    explicit Gradients(std::vector<std::optional<BasicTensor<T>>> slots) : slots_(std::move(slots)) {}

    bool has(std::size_t id) const { return id < slots_.size() && slots_[id].has_value(); }
    bool has(const Var<T>& v) const { return has(v.id()); }

    const BasicTensor<T>& operator[](std::size_t id) const {
        if (!has(id)) fail(Errc::shape_mismatch, "no gradient recorded for node " + std::to_string(id));
        return *slots_[id];
    }
    const BasicTensor<T>& operator[](const Var<T>& v) const { return (*this)[v.id()]; }

    /// Gradient for `v`, or zeros of its shape when the loss does not depend on it.
    BasicTensor<T> get_or_zero(const Var<T>& v) const {
        return has(v) ? *slots_[v.id()] : BasicTensor<T>(v.shape());
    }

    std::size_t size() const { return slots_.size(); }

   private:
    std::vector<std::optional<BasicTensor<T>>> slots_;
};

/// Linear record of operations. Nodes are appended after their parents, so the
/// id order is a topological order and backward walks it in reverse.
template <class T>
class Tape {
   public:
    /// Fills `out[i]` with the gradient for parent i when `needs[i]` is set.
    using BackwardFn = std::function<void(const BasicTensor<T>& grad_out, std::span<const bool> needs,
                                          std::span<BasicTensor<T>> out)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var<T> leaf(BasicTensor<T> value) {
        const bool rg = value.requires_grad();
        nodes_.push_back(Node{std::move(value), {}, nullptr, rg});
        return Var<T>(this, nodes_.size() - 1);
    }

    Var<T> constant(BasicTensor<T> value) {
        value.set_requires_grad(false);
        return leaf(std::move(value));
    }

    Var<T> record(BasicTensor<T> value, std::vector<std::size_t> parents, BackwardFn fn) {
        bool rg = false;
        for (auto p : parents) rg = rg || nodes_.at(p).requires_grad;
        if (!rg) {
            fn = nullptr;
            parents.clear();
        }
        value.set_requires_grad(rg);
        nodes_.push_back(Node{std::move(value), std::move(parents), std::move(fn), rg});
        return Var<T>(this, nodes_.size() - 1);
    }

    const BasicTensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<std::size_t>& parents(std::size_t id) const { return nodes_.at(id).parents; }

    /// Reverse-mode sweep from a single-element `loss`. Fan-out contributions
    /// are summed.
    Gradients<T> backward(const Var<T>& loss) const {
        if (&loss.tape() != this) fail(Errc::shape_mismatch, "loss is not on this tape");
        if (loss.value().size() != 1)
            fail(Errc::not_scalar, "backward needs a scalar loss, got " + shape_string(loss.shape()));

        std::vector<std::optional<BasicTensor<T>>> grads(nodes_.size());
        grads[loss.id()] = BasicTensor<T>(loss.shape(), T{1});

        for (std::size_t id = loss.id() + 1; id-- > 0;) {
            const Node& node = nodes_[id];
            if (!grads[id] || !node.backward) continue;
            const std::size_t np = node.parents.size();
            auto needs = std::make_unique<bool[]>(np);
            bool any = false;
            for (std::size_t i = 0; i < np; ++i) {
                needs[i] = nodes_[node.parents[i]].requires_grad;
                any = any || needs[i];
            }
            if (!any) continue;
            std::vector<BasicTensor<T>> out(np);
            node.backward(*grads[id], std::span<const bool>(needs.get(), np), out);
            for (std::size_t i = 0; i < np; ++i) {
                if (!needs[i]) continue;
                const std::size_t pid = node.parents[i];
                auto& slot = grads[pid];
                if (!slot) {
                    slot = std::move(out[i]);
                } else {
                    auto dst = slot->data();
                    auto src = out[i].data();
                    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
                }
            }
        }
        return Gradients<T>(std::move(grads));
    }

   private:
    struct Node {
        BasicTensor<T> value;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        bool requires_grad = false;
    };
    std::deque<Node> nodes_;  // stable references across push_back
};

/// Free-function form of Tape::backward.
template <class T>
Gradients<T> backward(const Var<T>& loss) {
    return loss.tape().backward(loss);
}

}  // namespace galc
