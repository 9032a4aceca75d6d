// Minimal dense-network substrate: batched forward/backward and SGD/Adam.
// Deliberately framework-free; everything is double precision and seeded.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tse/common.hpp"

namespace tse::nn {

// Row-major matrix of doubles.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(size_t r, size_t c) { return data[r * cols + c]; }
    double at(size_t r, size_t c) const { return data[r * cols + c]; }
    double* row(size_t r) { return data.data() + r * cols; }
    const double* row(size_t r) const { return data.data() + r * cols; }
    size_t size() const { return data.size(); }
};

enum class Activation { relu, identity };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct Layer {
    size_t in = 0;
    size_t out = 0;
    std::vector<double> weights;  // [out x in], row-major
    std::vector<double> bias;     // [out]
    Activation act = Activation::identity;
};

struct DenseNet {
    std::vector<Layer> layers;
    uint64_t revision = 0;  // bumped on every parameter update; stamps tapes

    size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    size_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
    size_t layer_count() const { return layers.size(); }
    size_t parameter_count() const;

    // Throws ConfigError if consecutive layer dims do not chain or params are non-finite.
    void validate() const;
};

// dims = {in, h1, ..., out}; one activation per layer. Glorot-uniform init from seed.
DenseNet make_mlp(const std::vector<size_t>& dims, const std::vector<Activation>& acts,
                  uint64_t seed);

struct Tape {
    uint64_t revision = 0;
    size_t first_layer = 0;
    size_t last_layer = 0;                  // exclusive
    std::vector<Matrix> inputs;             // input to each layer in the range
    std::vector<Matrix> preactivations;     // z = W x + b per layer
};

struct Gradients {
    std::vector<Matrix> weight_grads;  // matches layer shapes [out x in]
    std::vector<Matrix> bias_grads;    // [1 x out]
    Matrix input_grad;                 // [batch x in]
};

struct ForwardResult {
    Matrix output;
    Tape tape;
};

// Forward over layers [first_layer, last_layer); defaults to the whole net.
// The tape suffices for an exact backward pass over the same range.
ForwardResult forward(const DenseNet& net, const Matrix& x, size_t first_layer = 0,
                      size_t last_layer = SIZE_MAX);

// Gradients of sum(upstream .* output) w.r.t. the range's parameters and input.
// Entries of weight/bias grads outside the range are zero-shaped placeholders.
Gradients backward(const DenseNet& net, const Tape& tape, const Matrix& upstream);

enum class OptimizerKind { sgd, adam };

struct Optimizer {
    OptimizerKind kind = OptimizerKind::sgd;
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t step_count = 0;
    std::vector<Matrix> m_weights, v_weights, m_bias, v_bias;  // adam moments

    Optimizer() = default;
    Optimizer(OptimizerKind k, double lr) : kind(k), learning_rate(lr) {
        if (lr <= 0.0) throw ConfigError("learning rate must be > 0");
    }
};

// Applies one update in place. Throws NumericError naming the layer on a
// non-finite gradient, DimensionError on shape mismatch.
void step(Optimizer& opt, DenseNet& net, const Gradients& grads);

// Checkpoint format: JSON with layer dims, activation names, row-major arrays.
std::string to_json(const DenseNet& net);
DenseNet net_from_json(const std::string& text);
void save_net(const DenseNet& net, const std::string& path);
DenseNet load_net(const std::string& path);

}  // namespace tse::nn
