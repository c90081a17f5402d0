#pragma once

/// Dense feedforward nets with ReLU hidden layers, a softmax or scalar
/// head, manual backpropagation and RMSProp. Small enough to stay on raw
/// vectors; no external math dependency.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "tsprl/errors.hpp"
#include "tsprl/rng.hpp"

namespace tsprl {

/// Row-major dense matrix.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

enum class Head {
    Softmax,     ///< probability vector per row
    LinearScalar ///< one real per row
};

/// Per-layer parameter blocks; also the shape of gradients and RMSProp
/// accumulators.
struct ParamBlocks {
    std::vector<std::vector<double>> weights; ///< layer l: fan_in x fan_out, row-major
    std::vector<std::vector<double>> biases;  ///< layer l: fan_out
};

class DenseNet {
  public:
    /// Zero-initialized net. `widths` runs input first, output last.
    DenseNet(std::vector<int> widths, Head head) : widths_(std::move(widths)), head_(head) {
        if (widths_.size() < 2)
            throw ParameterError("net needs at least input and output widths");
        for (int w : widths_)
            if (w < 1)
                throw ParameterError("layer widths must be positive");
        if (head_ == Head::Softmax && widths_.back() < 2)
            throw ParameterError("softmax head needs output width >= 2");
        if (head_ == Head::LinearScalar && widths_.back() != 1)
            throw ParameterError("linear-scalar head needs output width 1");
        const std::size_t layers = widths_.size() - 1;
        params_.weights.resize(layers);
        params_.biases.resize(layers);
        for (std::size_t l = 0; l < layers; ++l) {
            params_.weights[l].assign(
                static_cast<std::size_t>(widths_[l]) * static_cast<std::size_t>(widths_[l + 1]),
                0.0);
            params_.biases[l].assign(static_cast<std::size_t>(widths_[l + 1]), 0.0);
        }
    }

    int input_width() const { return widths_.front(); }
    int output_width() const { return widths_.back(); }
    int layer_count() const { return static_cast<int>(widths_.size()) - 1; }
    const std::vector<int>& widths() const { return widths_; }
    Head head() const { return head_; }

    ParamBlocks& params() { return params_; }
    const ParamBlocks& params() const { return params_; }

  private:
    std::vector<int> widths_;
    Head head_;
    ParamBlocks params_;
};

/// Glorot-uniform initialization: weights uniform in
/// +-sqrt(6/(fan_in+fan_out)), biases zero. Deterministic per seed.
inline DenseNet init_net(const std::vector<int>& widths, Head head, std::uint64_t seed) {
    DenseNet net(widths, head);
    Rng rng(derive_seed(seed, 0x9e7));
    for (int l = 0; l < net.layer_count(); ++l) {
        const double fan_in = widths[static_cast<std::size_t>(l)];
        const double fan_out = widths[static_cast<std::size_t>(l) + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& w : net.params().weights[static_cast<std::size_t>(l)])
            w = rng.next_double(-bound, bound);
    }
    return net;
}

/// Everything backward() needs from the matching forward() call.
struct ForwardTrace {
    int batch = 0;
    Matrix input;
    std::vector<Matrix> pre; ///< per layer: pre-activations
    std::vector<Matrix> act; ///< per layer: activations (last entry: head output)
};

namespace detail {

// additive smoothing inside the softmax keeps every probability strictly
// positive; backward() differentiates this exact formula
constexpr double kSoftmaxFloor = 1e-12;

inline void softmax_row(const double* z, double* out, int n) {
    double m = z[0];
    for (int i = 1; i < n; ++i)
        m = std::max(m, z[i]);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        out[i] = std::exp(z[i] - m);
        sum += out[i];
    }
    const double denom = sum + n * kSoftmaxFloor;
    for (int i = 0; i < n; ++i)
        out[i] = (out[i] + kSoftmaxFloor) / denom;
}

} // namespace detail

/// Forward pass over a batch of input rows. Returns the head output and the
/// trace needed for backpropagation.
inline Matrix forward(const DenseNet& net, const Matrix& batch, ForwardTrace* trace = nullptr) {
    if (batch.cols != net.input_width())
        throw ShapeError("input width " + std::to_string(batch.cols) + ", net expects " +
                         std::to_string(net.input_width()));
    for (double x : batch.v)
        if (!std::isfinite(x))
            throw NumericError("non-finite input to forward()");

    const int b = batch.rows;
    if (trace) {
        trace->batch = b;
        trace->input = batch;
        trace->pre.clear();
        trace->act.clear();
    }

    Matrix a = batch;
    for (int l = 0; l < net.layer_count(); ++l) {
        const int in_w = net.widths()[static_cast<std::size_t>(l)];
        const int out_w = net.widths()[static_cast<std::size_t>(l) + 1];
        const auto& w = net.params().weights[static_cast<std::size_t>(l)];
        const auto& bias = net.params().biases[static_cast<std::size_t>(l)];

        Matrix z(b, out_w);
        for (int r = 0; r < b; ++r) {
            const double* arow = &a.v[static_cast<std::size_t>(r) * in_w];
            double* zrow = &z.v[static_cast<std::size_t>(r) * out_w];
            for (int j = 0; j < out_w; ++j)
                zrow[j] = bias[static_cast<std::size_t>(j)];
            for (int i = 0; i < in_w; ++i) {
                const double ai = arow[i];
                if (ai == 0.0)
                    continue;
                const double* wrow = &w[static_cast<std::size_t>(i) * out_w];
                for (int j = 0; j < out_w; ++j)
                    zrow[j] += ai * wrow[j];
            }
        }
        if (trace)
            trace->pre.push_back(z);

        Matrix out(b, out_w);
        const bool last = l == net.layer_count() - 1;
        if (!last) {
            for (std::size_t i = 0; i < z.v.size(); ++i)
                out.v[i] = z.v[i] > 0.0 ? z.v[i] : 0.0;
        } else if (net.head() == Head::Softmax) {
            for (int r = 0; r < b; ++r)
                detail::softmax_row(&z.v[static_cast<std::size_t>(r) * out_w],
                                    &out.v[static_cast<std::size_t>(r) * out_w], out_w);
        } else {
            out.v = z.v;
        }
        if (trace)
            trace->act.push_back(out);
        a = std::move(out);
    }
    return a;
}

/// Gradients of the scalar loss implied by `output_grad` (= dL/d(head
/// output), one row per batch row) with respect to every weight and bias.
/// Contributions are summed over the batch; any 1/B factor belongs to the
/// caller's loss definition.
inline ParamBlocks backward(const DenseNet& net, const ForwardTrace& trace,
                            const Matrix& output_grad) {
    const int layers = net.layer_count();
    if (static_cast<int>(trace.pre.size()) != layers || trace.batch != output_grad.rows ||
        output_grad.cols != net.output_width())
        throw ShapeError("output_grad/trace shape does not match net");

    const int b = trace.batch;
    ParamBlocks grads;
    grads.weights.resize(static_cast<std::size_t>(layers));
    grads.biases.resize(static_cast<std::size_t>(layers));

    // head backward: delta = dL/dz for the final layer
    const int out_w = net.output_width();
    Matrix delta(b, out_w);
    if (net.head() == Head::Softmax) {
        const Matrix& z = trace.pre.back();
        const Matrix& p = trace.act.back();
        std::vector<double> e(static_cast<std::size_t>(out_w));
        for (int r = 0; r < b; ++r) {
            const double* zrow = &z.v[static_cast<std::size_t>(r) * out_w];
            const double* prow = &p.v[static_cast<std::size_t>(r) * out_w];
            const double* grow = &output_grad.v[static_cast<std::size_t>(r) * out_w];
            double m = zrow[0];
            for (int i = 1; i < out_w; ++i)
                m = std::max(m, zrow[i]);
            double sum = 0.0;
            for (int i = 0; i < out_w; ++i) {
                e[static_cast<std::size_t>(i)] = std::exp(zrow[i] - m);
                sum += e[static_cast<std::size_t>(i)];
            }
            const double denom = sum + out_w * detail::kSoftmaxFloor;
            double dot = 0.0;
            for (int i = 0; i < out_w; ++i)
                dot += grow[i] * prow[i];
            for (int k = 0; k < out_w; ++k)
                delta.at(r, k) = e[static_cast<std::size_t>(k)] / denom * (grow[k] - dot);
        }
    } else {
        delta = output_grad;
    }

    for (int l = layers - 1; l >= 0; --l) {
        const int in_w = net.widths()[static_cast<std::size_t>(l)];
        const int w_out = net.widths()[static_cast<std::size_t>(l) + 1];
        const Matrix& a_prev = l == 0 ? trace.input : trace.act[static_cast<std::size_t>(l) - 1];

        auto& gw = grads.weights[static_cast<std::size_t>(l)];
        auto& gb = grads.biases[static_cast<std::size_t>(l)];
        gw.assign(static_cast<std::size_t>(in_w) * static_cast<std::size_t>(w_out), 0.0);
        gb.assign(static_cast<std::size_t>(w_out), 0.0);

        for (int r = 0; r < b; ++r) {
            const double* arow = &a_prev.v[static_cast<std::size_t>(r) * in_w];
            const double* drow = &delta.v[static_cast<std::size_t>(r) * w_out];
            for (int j = 0; j < w_out; ++j)
                gb[static_cast<std::size_t>(j)] += drow[j];
            for (int i = 0; i < in_w; ++i) {
                const double ai = arow[i];
                if (ai == 0.0)
                    continue;
                double* gwrow = &gw[static_cast<std::size_t>(i) * w_out];
                for (int j = 0; j < w_out; ++j)
                    gwrow[j] += ai * drow[j];
            }
        }

        if (l > 0) {
            const auto& w = net.params().weights[static_cast<std::size_t>(l)];
            const Matrix& z_prev = trace.pre[static_cast<std::size_t>(l) - 1];
            Matrix next(b, in_w);
            for (int r = 0; r < b; ++r) {
                const double* drow = &delta.v[static_cast<std::size_t>(r) * w_out];
                const double* zrow = &z_prev.v[static_cast<std::size_t>(r) * in_w];
                double* nrow = &next.v[static_cast<std::size_t>(r) * in_w];
                for (int i = 0; i < in_w; ++i) {
                    if (zrow[i] <= 0.0) {
                        nrow[i] = 0.0;
                        continue;
                    }
                    const double* wrow = &w[static_cast<std::size_t>(i) * w_out];
                    double s = 0.0;
                    for (int j = 0; j < w_out; ++j)
                        s += wrow[j] * drow[j];
                    nrow[i] = s;
                }
            }
            delta = std::move(next);
        }
    }
    return grads;
}

/// RMSProp optimizer state: running mean of squared gradients plus
/// hyperparameters.
struct OptimizerState {
    ParamBlocks accum;
    double learning_rate = 3e-4;
    double decay = 0.96;
    double epsilon = 1e-6;

    static OptimizerState for_net(const DenseNet& net, double lr, double decay = 0.96,
                                  double eps = 1e-6) {
        OptimizerState s;
        s.learning_rate = lr;
        s.decay = decay;
        s.epsilon = eps;
        s.accum.weights.resize(net.params().weights.size());
        s.accum.biases.resize(net.params().biases.size());
        for (std::size_t l = 0; l < net.params().weights.size(); ++l) {
            s.accum.weights[l].assign(net.params().weights[l].size(), 0.0);
            s.accum.biases[l].assign(net.params().biases[l].size(), 0.0);
        }
        return s;
    }
};

namespace detail {

inline void rmsprop_block(std::vector<double>& params, std::vector<double>& accum,
                          const std::vector<double>& grads, double lr, double decay, double eps) {
    if (params.size() != grads.size() || params.size() != accum.size())
        throw ShapeError("rmsprop: parameter/gradient shape mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        if (!std::isfinite(g))
            throw NumericError("non-finite gradient in rmsprop_step");
        accum[i] = decay * accum[i] + (1.0 - decay) * g * g;
        params[i] -= lr * g / std::sqrt(accum[i] + eps);
    }
}

} // namespace detail

/// One RMSProp step:
///   a <- decay*a + (1-decay)*g^2,  p <- p - lr*g/sqrt(a+eps)
inline void rmsprop_step(OptimizerState& state, DenseNet& net, const ParamBlocks& grads) {
    if (grads.weights.size() != net.params().weights.size())
        throw ShapeError("rmsprop: gradient layer count mismatch");
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        detail::rmsprop_block(net.params().weights[l], state.accum.weights[l], grads.weights[l],
                              state.learning_rate, state.decay, state.epsilon);
        detail::rmsprop_block(net.params().biases[l], state.accum.biases[l], grads.biases[l],
                              state.learning_rate, state.decay, state.epsilon);
    }
}

/// Versioned text checkpoint; parameters at 17 significant digits so a
/// load reproduces the net bit-exactly.
inline std::string save_net(const DenseNet& net) {
    std::string out = "densenet 1\nwidths";
    for (int w : net.widths())
        out += " " + std::to_string(w);
    out += "\nhead ";
    out += net.head() == Head::Softmax ? "softmax" : "linear";
    out += "\n";
    char buf[64];
    const auto emit = [&](const std::vector<double>& block, const char* tag, int layer) {
        out += tag;
        out += " " + std::to_string(layer);
        for (double x : block) {
            std::snprintf(buf, sizeof(buf), " %.17g", x);
            out += buf;
        }
        out += "\n";
    };
    for (int l = 0; l < net.layer_count(); ++l) {
        emit(net.params().weights[static_cast<std::size_t>(l)], "w", l);
        emit(net.params().biases[static_cast<std::size_t>(l)], "b", l);
    }
    return out;
}

inline DenseNet load_net(std::istream& in) {
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != "densenet" || version != 1)
        throw ParseError("not a densenet checkpoint (expected 'densenet 1')");
    if (!(in >> tag) || tag != "widths")
        throw ParseError("checkpoint missing widths");
    std::vector<int> widths;
    {
        std::string rest;
        std::getline(in, rest);
        std::istringstream ws(rest);
        int w = 0;
        while (ws >> w)
            widths.push_back(w);
    }
    std::string head_name;
    if (!(in >> tag >> head_name) || tag != "head")
        throw ParseError("checkpoint missing head");
    Head head;
    if (head_name == "softmax")
        head = Head::Softmax;
    else if (head_name == "linear")
        head = Head::LinearScalar;
    else
        throw ParseError("unknown head '" + head_name + "'");

    DenseNet net(widths, head);
    for (int l = 0; l < net.layer_count(); ++l) {
        for (const char* expect : {"w", "b"}) {
            int layer = -1;
            if (!(in >> tag >> layer) || tag != expect || layer != l)
                throw ParseError("checkpoint truncated at layer " + std::to_string(l));
            auto& block = tag == std::string("w") ? net.params().weights[static_cast<std::size_t>(l)]
                                                  : net.params().biases[static_cast<std::size_t>(l)];
            for (double& x : block)
                if (!(in >> x))
                    throw ParseError("checkpoint truncated in layer " + std::to_string(l));
        }
    }
    return net;
}

inline DenseNet load_net(const std::string& text) {
    std::istringstream in(text);
    return load_net(in);
}

} // namespace tsprl
