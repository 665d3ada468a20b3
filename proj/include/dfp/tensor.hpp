#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dfp/check.hpp"
#include "dfp/rng.hpp"

namespace dfp {

using Shape = std::vector<int>;

inline int64_t shape_numel(const Shape& shape) {
    int64_t n = 1;
    for (int d : shape) {
        DFP_CHECK(d >= 0, "negative dimension in ", shape_str(shape));
        n *= d;
    }
    return n;
}

// Dense row-major float tensor participating in reverse-mode autodiff.
// A Tensor is a cheap shared handle; copies alias the same storage. The
// gradient buffer is allocated lazily on the first backward pass that
// touches the tensor.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape) {
        Tensor t;
        t.s_ = std::make_shared<Storage>();
        t.s_->shape = std::move(shape);
        t.s_->v.assign(static_cast<size_t>(shape_numel(t.s_->shape)), T(0));
        return t;
    }

    static Tensor full(Shape shape, T value) {
        Tensor t = zeros(std::move(shape));
        for (T& x : t.s_->v) x = value;
        return t;
    }

    static Tensor from(Shape shape, std::vector<T> data) {
        Tensor t;
        t.s_ = std::make_shared<Storage>();
        DFP_CHECK(shape_numel(shape) == static_cast<int64_t>(data.size()),
                  "data size ", data.size(), " does not match shape ", shape_str(shape));
        t.s_->shape = std::move(shape);
        t.s_->v = std::move(data);
        return t;
    }

    static Tensor scalar(T value) { return from({1}, {value}); }

    static Tensor randn(Shape shape, Rng& rng, T stddev = T(1)) {
        Tensor t = zeros(std::move(shape));
        for (T& x : t.s_->v) x = static_cast<T>(rng.normal()) * stddev;
        return t;
    }

    static Tensor uniform(Shape shape, Rng& rng, T lo, T hi) {
        Tensor t = zeros(std::move(shape));
        for (T& x : t.s_->v) x = static_cast<T>(rng.uniform(lo, hi));
        return t;
    }

    bool defined() const { return static_cast<bool>(s_); }
    const Shape& shape() const { return s_->shape; }
    int ndim() const { return static_cast<int>(s_->shape.size()); }
    int dim(int i) const { return s_->shape[static_cast<size_t>(i)]; }
    int64_t numel() const { return static_cast<int64_t>(s_->v.size()); }

    std::span<T> values() { return {s_->v.data(), s_->v.size()}; }
    std::span<const T> values() const { return {s_->v.data(), s_->v.size()}; }
    T* data() { return s_->v.data(); }
    const T* data() const { return s_->v.data(); }

    T item() const {
        DFP_CHECK(numel() == 1, "item() on non-scalar tensor of shape ", shape_str(shape()));
        return s_->v[0];
    }

    bool requires_grad() const { return s_->requires_grad; }
    Tensor& set_requires_grad(bool b) {
        s_->requires_grad = b;
        return *this;
    }

    bool has_grad() const { return !s_->g.empty(); }
    void ensure_grad() {
        if (s_->g.empty()) s_->g.assign(s_->v.size(), T(0));
    }
    void zero_grad() {
        for (T& x : s_->g) x = T(0);
    }
    std::span<T> grad() {
        ensure_grad();
        return {s_->g.data(), s_->g.size()};
    }
    std::span<const T> grad() const {
        DFP_CHECK(!s_->g.empty(), "gradient not populated");
        return {s_->g.data(), s_->g.size()};
    }

    // Identity of the underlying storage, for graph bookkeeping.
    const void* id() const { return s_.get(); }

private:
    struct Storage {
        Shape shape;
        std::vector<T> v;
        std::vector<T> g;
        bool requires_grad = false;
    };
    std::shared_ptr<Storage> s_;
};

// Define-by-run tape. Ops executed while a Graph is alive (and touching at
// least one requires_grad tensor) append themselves in execution order,
// which is a topological order by construction; backward() replays the
// record exactly once, in reverse. Recording and backward are
// single-threaded; kernels may parallelize internally.
template <typename T>
class Graph {
public:
    Graph() {
        prev_ = current_;
        current_ = this;
    }
    ~Graph() { current_ = prev_; }
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    static Graph* current() { return current_; }

    void record(const char* name, std::vector<Tensor<T>> inputs, Tensor<T> output,
                std::function<void()> backward_fn) {
        ops_.push_back(Op{name, std::move(inputs), std::move(output), std::move(backward_fn)});
    }

    size_t size() const { return ops_.size(); }

    // Populates grad for every requires_grad tensor reachable from `loss`.
    void backward(const Tensor<T>& loss) {
        DFP_CHECK(loss.numel() == 1, "backward requires a scalar loss, got shape ",
                  shape_str(loss.shape()));
        DFP_CHECK(!consumed_, "backward may run once per recorded graph");
        consumed_ = true;
        for (auto& op : ops_) {
            op.output.ensure_grad();
            for (auto& in : op.inputs) in.ensure_grad();
        }
        Tensor<T> l = loss;
        l.ensure_grad();
        l.grad()[0] = T(1);
        if (std::getenv("DFP_PROFILE_BACKWARD")) {
            // per-op-name wall time, printed to stderr, for kernel tuning
            std::map<std::string, std::pair<double, int64_t>> acc;
            for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
                auto t0 = std::chrono::steady_clock::now();
                it->backward_fn();
                auto t1 = std::chrono::steady_clock::now();
                auto& slot = acc[it->name];
                slot.first += std::chrono::duration<double>(t1 - t0).count();
                slot.second += it->output.numel();
            }
            std::vector<std::pair<double, std::string>> rows;
            for (auto& [k, v] : acc) rows.emplace_back(v.first, k);
            std::sort(rows.rbegin(), rows.rend());
            for (auto& [v, k] : rows)
                std::fprintf(stderr, "backward %-18s %8.2f ms  %10lld out elems\n", k.c_str(),
                             v * 1e3, static_cast<long long>(acc[k].second));
            return;
        }
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) it->backward_fn();
    }

private:
    struct Op {
        const char* name;
        std::vector<Tensor<T>> inputs;
        Tensor<T> output;
        std::function<void()> backward_fn;
    };
    std::vector<Op> ops_;
    bool consumed_ = false;
    Graph* prev_ = nullptr;
    static thread_local Graph* current_;
};

template <typename T>
thread_local Graph<T>* Graph<T>::current_ = nullptr;

// True when the op should be recorded: a graph is live and grads can flow.
template <typename T>
bool tracing(std::initializer_list<const Tensor<T>*> inputs) {
    if (Graph<T>::current() == nullptr) return false;
    for (const Tensor<T>* t : inputs)
        if (t->defined() && t->requires_grad()) return true;
    return false;
}

// Appends an op to the live graph and marks the output differentiable so
// downstream ops keep recording.
template <typename T>
void record(const char* name, std::vector<Tensor<T>> inputs, Tensor<T>& output,
            std::function<void()> backward_fn) {
    output.set_requires_grad(true);
    Graph<T>::current()->record(name, std::move(inputs), output, std::move(backward_fn));
}

}  // namespace dfp
