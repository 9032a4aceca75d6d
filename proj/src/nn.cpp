#include "tse/nn.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace tse::nn {

std::string activation_name(Activation a) {
    return a == Activation::relu ? "relu" : "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "identity") return Activation::identity;
    throw ParseError("unknown activation '" + name + "'");
}

size_t DenseNet::parameter_count() const {
    size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

void DenseNet::validate() const {
    for (size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        if (l.weights.size() != l.in * l.out || l.bias.size() != l.out) {
            throw ConfigError("layer " + std::to_string(i) + " parameter shapes are inconsistent");
        }
        if (i > 0 && layers[i - 1].out != l.in) {
            throw ConfigError("layer " + std::to_string(i) + " input dim " + std::to_string(l.in) +
                              " does not chain with previous output dim " +
                              std::to_string(layers[i - 1].out));
        }
        for (double w : l.weights) {
            if (!std::isfinite(w)) throw ConfigError("layer " + std::to_string(i) + " has non-finite weights");
        }
        for (double b : l.bias) {
            if (!std::isfinite(b)) throw ConfigError("layer " + std::to_string(i) + " has non-finite bias");
        }
    }
}

DenseNet make_mlp(const std::vector<size_t>& dims, const std::vector<Activation>& acts,
                  uint64_t seed) {
    if (dims.size() < 2) throw ConfigError("make_mlp needs at least input and output dims");
    if (acts.size() != dims.size() - 1) {
        throw ConfigError("make_mlp needs one activation per layer (" +
                          std::to_string(dims.size() - 1) + " layers, " +
                          std::to_string(acts.size()) + " activations)");
    }
    Rng rng(seed);
    DenseNet net;
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        Layer l;
        l.in = dims[i];
        l.out = dims[i + 1];
        l.act = acts[i];
        const double a = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
        l.weights.resize(l.in * l.out);
        for (double& w : l.weights) w = rng.uniform(-a, a);
        l.bias.assign(l.out, 0.0);
        net.layers.push_back(std::move(l));
    }
    return net;
}

ForwardResult forward(const DenseNet& net, const Matrix& x, size_t first_layer,
                      size_t last_layer) {
    if (last_layer == SIZE_MAX) last_layer = net.layers.size();
    if (first_layer > last_layer || last_layer > net.layers.size()) {
        throw ConfigError("forward: invalid layer range");
    }
    const size_t expect = first_layer < net.layers.size() ? net.layers[first_layer].in
                                                          : net.output_dim();
    if (x.cols != expect) {
        throw DimensionError("forward: input has " + std::to_string(x.cols) +
                             " columns but layer " + std::to_string(first_layer) + " expects " +
                             std::to_string(expect));
    }

    ForwardResult res;
    res.tape.revision = net.revision;
    res.tape.first_layer = first_layer;
    res.tape.last_layer = last_layer;

    Matrix cur = x;
    for (size_t li = first_layer; li < last_layer; ++li) {
        const Layer& l = net.layers[li];
        res.tape.inputs.push_back(cur);
        Matrix z(cur.rows, l.out);
        for (size_t r = 0; r < cur.rows; ++r) {
            const double* in = cur.row(r);
            double* out = z.row(r);
            for (size_t o = 0; o < l.out; ++o) {
                const double* w = l.weights.data() + o * l.in;
                double acc = l.bias[o];
                for (size_t c = 0; c < l.in; ++c) acc += w[c] * in[c];
                out[o] = acc;
            }
        }
        res.tape.preactivations.push_back(z);
        if (l.act == Activation::relu) {
            for (double& v : z.data) v = v > 0.0 ? v : 0.0;
        }
        cur = std::move(z);
    }
    res.output = std::move(cur);
    return res;
}

Gradients backward(const DenseNet& net, const Tape& tape, const Matrix& upstream) {
    if (tape.revision != net.revision) {
        throw ContractError("backward: tape is stale (network parameters changed since forward)");
    }
    const size_t n_layers = tape.last_layer - tape.first_layer;
    if (n_layers == 0) throw ConfigError("backward: empty tape");
    const Layer& last = net.layers[tape.last_layer - 1];
    if (upstream.cols != last.out || upstream.rows != tape.inputs.back().rows) {
        throw DimensionError("backward: upstream gradient is " + std::to_string(upstream.rows) +
                             "x" + std::to_string(upstream.cols) + " but the output is " +
                             std::to_string(tape.inputs.back().rows) + "x" +
                             std::to_string(last.out));
    }

    Gradients g;
    g.weight_grads.resize(net.layers.size());
    g.bias_grads.resize(net.layers.size());

    Matrix delta = upstream;  // d(loss)/d(post-activation)
    for (size_t li = tape.last_layer; li-- > tape.first_layer;) {
        const Layer& l = net.layers[li];
        const Matrix& z = tape.preactivations[li - tape.first_layer];
        const Matrix& in = tape.inputs[li - tape.first_layer];

        if (l.act == Activation::relu) {
            for (size_t i = 0; i < delta.data.size(); ++i) {
                if (z.data[i] <= 0.0) delta.data[i] = 0.0;
            }
        }

        Matrix dw(l.out, l.in);
        Matrix db(1, l.out);
        for (size_t r = 0; r < delta.rows; ++r) {
            const double* d = delta.row(r);
            const double* x = in.row(r);
            for (size_t o = 0; o < l.out; ++o) {
                const double dv = d[o];
                if (dv == 0.0) continue;
                db.data[o] += dv;
                double* wrow = dw.row(o);
                for (size_t c = 0; c < l.in; ++c) wrow[c] += dv * x[c];
            }
        }
        g.weight_grads[li] = std::move(dw);
        g.bias_grads[li] = std::move(db);

        // d(loss)/d(input of this layer)
        Matrix prev(delta.rows, l.in);
        for (size_t r = 0; r < delta.rows; ++r) {
            const double* d = delta.row(r);
            double* p = prev.row(r);
            for (size_t o = 0; o < l.out; ++o) {
                const double dv = d[o];
                if (dv == 0.0) continue;
                const double* w = l.weights.data() + o * l.in;
                for (size_t c = 0; c < l.in; ++c) p[c] += dv * w[c];
            }
        }
        delta = std::move(prev);
    }
    g.input_grad = std::move(delta);
    return g;
}

namespace {

void ensure_adam_state(Optimizer& opt, const DenseNet& net) {
    if (!opt.m_weights.empty()) return;
    for (const auto& l : net.layers) {
        opt.m_weights.emplace_back(l.out, l.in);
        opt.v_weights.emplace_back(l.out, l.in);
        opt.m_bias.emplace_back(1, l.out);
        opt.v_bias.emplace_back(1, l.out);
    }
}

void check_finite(const Matrix& m, size_t layer, const char* what) {
    for (double v : m.data) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite ") + what + " gradient in layer " +
                               std::to_string(layer));
        }
    }
}

void adam_update(Matrix& p_m, Matrix& p_v, std::vector<double>& params, const Matrix& grad,
                 const Optimizer& opt, double bc1, double bc2) {
    for (size_t i = 0; i < params.size(); ++i) {
        const double gi = grad.data[i];
        p_m.data[i] = opt.beta1 * p_m.data[i] + (1.0 - opt.beta1) * gi;
        p_v.data[i] = opt.beta2 * p_v.data[i] + (1.0 - opt.beta2) * gi * gi;
        const double mhat = p_m.data[i] / bc1;
        const double vhat = p_v.data[i] / bc2;
        params[i] -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.eps);
    }
}

}  // namespace

void step(Optimizer& opt, DenseNet& net, const Gradients& grads) {
    if (grads.weight_grads.size() != net.layers.size()) {
        throw DimensionError("step: gradient layer count " +
                             std::to_string(grads.weight_grads.size()) + " does not match net " +
                             std::to_string(net.layers.size()));
    }
    for (size_t li = 0; li < net.layers.size(); ++li) {
        Layer& l = net.layers[li];
        const Matrix& gw = grads.weight_grads[li];
        const Matrix& gb = grads.bias_grads[li];
        if (gw.size() == 0 && gb.size() == 0) continue;  // layer outside the taped range
        if (gw.size() != l.weights.size() || gb.size() != l.bias.size()) {
            throw DimensionError("step: layer " + std::to_string(li) + " gradient shape mismatch");
        }
        check_finite(gw, li, "weight");
        check_finite(gb, li, "bias");
    }

    if (opt.kind == OptimizerKind::sgd) {
        for (size_t li = 0; li < net.layers.size(); ++li) {
            Layer& l = net.layers[li];
            const Matrix& gw = grads.weight_grads[li];
            if (gw.size() == 0) continue;
            const Matrix& gb = grads.bias_grads[li];
            for (size_t i = 0; i < l.weights.size(); ++i) l.weights[i] -= opt.learning_rate * gw.data[i];
            for (size_t i = 0; i < l.bias.size(); ++i) l.bias[i] -= opt.learning_rate * gb.data[i];
        }
    } else {
        ensure_adam_state(opt, net);
        opt.step_count += 1;
        const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step_count));
        const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step_count));
        for (size_t li = 0; li < net.layers.size(); ++li) {
            Layer& l = net.layers[li];
            const Matrix& gw = grads.weight_grads[li];
            if (gw.size() == 0) continue;
            const Matrix& gb = grads.bias_grads[li];
            adam_update(opt.m_weights[li], opt.v_weights[li], l.weights, gw, opt, bc1, bc2);
            adam_update(opt.m_bias[li], opt.v_bias[li], l.bias, gb, opt, bc1, bc2);
        }
    }
    net.revision += 1;
}

std::string to_json(const DenseNet& net) {
    nlohmann::json j;
    j["layers"] = nlohmann::json::array();
    for (const auto& l : net.layers) {
        nlohmann::json jl;
        jl["in"] = l.in;
        jl["out"] = l.out;
        jl["activation"] = activation_name(l.act);
        jl["weights"] = l.weights;
        jl["bias"] = l.bias;
        j["layers"].push_back(std::move(jl));
    }
    return j.dump(2);
}

DenseNet net_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("network checkpoint: ") + e.what());
    }
    DenseNet net;
    for (const auto& jl : j.at("layers")) {
        Layer l;
        l.in = jl.at("in").get<size_t>();
        l.out = jl.at("out").get<size_t>();
        l.act = activation_from_name(jl.at("activation").get<std::string>());
        l.weights = jl.at("weights").get<std::vector<double>>();
        l.bias = jl.at("bias").get<std::vector<double>>();
        net.layers.push_back(std::move(l));
    }
    net.validate();
    return net;
}

void save_net(const DenseNet& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << to_json(net) << "\n";
}

DenseNet load_net(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return net_from_json(ss.str());
}

}  // namespace tse::nn
