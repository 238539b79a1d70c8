#pragma once

// Small feedforward networks (affine + ReLU layers) with a JSON weight
// format, plus the margin reduction that turns a multi-output property
// into a single signed score. Downstream code only ever sees labels.

#include <cmath>
#include <fstream>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "preforest/box.hpp"

namespace preforest {

enum class Activation { relu, linear };

inline std::string activation_name(Activation a) {
    return a == Activation::relu ? "relu" : "linear";
}

inline Activation activation_from_name(const std::string& name, std::size_t layer_index) {
    if (name == "relu") return Activation::relu;
    if (name == "linear") return Activation::linear;
    throw std::runtime_error("layer " + std::to_string(layer_index) +
                             ": unknown activation '" + name + "'");
}

struct Layer {
    // Row-major: weights[i*in_dim + j] multiplies input j into output i.
    std::vector<double> weights;
    std::vector<double> bias;
    Activation activation = Activation::linear;
    std::size_t out_dim = 0;
    std::size_t in_dim = 0;
};

class Network {
public:
    Network(std::vector<Layer> layers, std::size_t input_dim) : layers_(std::move(layers)) {
        if (layers_.empty()) throw std::runtime_error("network has no layers");
        std::size_t in = input_dim;
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            const Layer& l = layers_[li];
            if (l.in_dim != in)
                throw std::runtime_error("layer " + std::to_string(li) + ": expects " +
                                         std::to_string(l.in_dim) + " inputs but receives " +
                                         std::to_string(in));
            if (l.weights.size() != l.out_dim * l.in_dim)
                throw std::runtime_error("layer " + std::to_string(li) + ": weight matrix is " +
                                         std::to_string(l.weights.size()) + " entries, expected " +
                                         std::to_string(l.out_dim * l.in_dim));
            if (l.bias.size() != l.out_dim)
                throw std::runtime_error("layer " + std::to_string(li) + ": bias size mismatch");
            in = l.out_dim;
        }
        if (layers_.back().activation != Activation::linear)
            throw std::runtime_error("last layer must have linear activation");
        input_dim_ = input_dim;
        output_dim_ = layers_.back().out_dim;
    }

    std::size_t input_dim() const { return input_dim_; }
    std::size_t output_dim() const { return output_dim_; }
    const std::vector<Layer>& layers() const { return layers_; }

    std::vector<double> forward(std::span<const double> x) const {
        if (x.size() != input_dim_)
            throw std::invalid_argument("forward: input has " + std::to_string(x.size()) +
                                        " entries, network expects " + std::to_string(input_dim_));
        for (double v : x)
            if (!std::isfinite(v)) throw std::invalid_argument("forward: non-finite input");

        std::vector<double> cur(x.begin(), x.end());
        std::vector<double> next;
        for (const Layer& l : layers_) {
            next.assign(l.out_dim, 0.0);
            for (std::size_t i = 0; i < l.out_dim; ++i) {
                double acc = l.bias[i];
                const double* row = l.weights.data() + i * l.in_dim;
                for (std::size_t j = 0; j < l.in_dim; ++j) acc += row[j] * cur[j];
                next[i] = l.activation == Activation::relu ? std::max(0.0, acc) : acc;
            }
            cur.swap(next);
        }
        return cur;
    }

private:
    std::vector<Layer> layers_;
    std::size_t input_dim_ = 0;
    std::size_t output_dim_ = 0;
};

struct LinearConstraint {
    std::vector<double> coeffs;
    double offset = 0.0;
};

/// Conjunction of half-space constraints on the network output:
/// every row must satisfy coeffs · y - offset >= 0.
struct OutputProperty {
    std::vector<LinearConstraint> constraints;

    void validate(std::size_t output_dim) const {
        if (constraints.empty()) throw std::runtime_error("property has no constraints");
        for (std::size_t i = 0; i < constraints.size(); ++i)
            if (constraints[i].coeffs.size() != output_dim)
                throw std::runtime_error("constraint " + std::to_string(i) + ": has " +
                                         std::to_string(constraints[i].coeffs.size()) +
                                         " coefficients, output dim is " +
                                         std::to_string(output_dim));
    }
};

/// Black-box binary labeler: label(x) = 1 iff margin(x) >= 0, where the
/// margin is the worst (minimum) constraint score at f(x). A margin of
/// exactly zero labels positive.
class MarginLabeler {
public:
    MarginLabeler(Network net, OutputProperty prop)
        : network_(std::move(net)), property_(std::move(prop)) {
        property_.validate(network_.output_dim());
    }

    const Network& network() const { return network_; }
    const OutputProperty& property() const { return property_; }

    double margin(std::span<const double> x) const {
        const std::vector<double> y = network_.forward(x);
        double m = std::numeric_limits<double>::infinity();
        for (const auto& c : property_.constraints) {
            double s = -c.offset;
            for (std::size_t j = 0; j < y.size(); ++j) s += c.coeffs[j] * y[j];
            m = std::min(m, s);
        }
        return m;
    }

    int label(std::span<const double> x) const { return margin(x) >= 0.0 ? 1 : 0; }

    std::vector<int> label_batch(const std::vector<Point>& xs) const {
        std::vector<int> out;
        out.reserve(xs.size());
        for (const auto& x : xs) out.push_back(label(x));
        return out;
    }

private:
    Network network_;
    OutputProperty property_;
};

// ---------------------------------------------------------------------------
// JSON weight format
//
//   {"input_dim": N,
//    "layers": [{"weights": [[...], ...], "bias": [...],
//                "activation": "relu"|"linear"}, ...]}
//
// weights[i][j] multiplies input j into output i.
// ---------------------------------------------------------------------------

inline Network network_from_json(const nlohmann::json& j) {
    if (!j.contains("input_dim") || !j.contains("layers"))
        throw std::runtime_error("network json: missing 'input_dim' or 'layers'");
    const auto input_dim = j.at("input_dim").get<std::size_t>();
    std::vector<Layer> layers;
    std::size_t li = 0;
    for (const auto& lj : j.at("layers")) {
        Layer l;
        const auto& w = lj.at("weights");
        if (!w.is_array() || w.empty())
            throw std::runtime_error("layer " + std::to_string(li) +
                                     ": weights must be a non-empty array of rows");
        l.out_dim = w.size();
        l.in_dim = w.at(0).size();
        l.weights.reserve(l.out_dim * l.in_dim);
        for (const auto& row : w) {
            if (row.size() != l.in_dim)
                throw std::runtime_error("layer " + std::to_string(li) + ": ragged weight matrix");
            for (const auto& v : row) l.weights.push_back(v.get<double>());
        }
        l.bias = lj.at("bias").get<std::vector<double>>();
        l.activation = activation_from_name(lj.at("activation").get<std::string>(), li);
        layers.push_back(std::move(l));
        ++li;
    }
    return Network(std::move(layers), input_dim);
}

inline nlohmann::json network_to_json(const Network& net) {
    nlohmann::json j;
    j["input_dim"] = net.input_dim();
    j["layers"] = nlohmann::json::array();
    for (const Layer& l : net.layers()) {
        nlohmann::json lj;
        auto rows = nlohmann::json::array();
        for (std::size_t i = 0; i < l.out_dim; ++i) {
            auto row = nlohmann::json::array();
            for (std::size_t k = 0; k < l.in_dim; ++k) row.push_back(l.weights[i * l.in_dim + k]);
            rows.push_back(std::move(row));
        }
        lj["weights"] = std::move(rows);
        lj["bias"] = l.bias;
        lj["activation"] = activation_name(l.activation);
        j["layers"].push_back(std::move(lj));
    }
    return j;
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("parse failure in " + path + ": " + e.what());
    }
    return j;
}

inline Network load_network(const std::string& path) {
    try {
        return network_from_json(load_json_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed network file " + path + ": " + e.what());
    }
}

/// Property files carry {"constraints": [{"coeffs": [...], "offset": r}, ...]}.
inline OutputProperty property_from_json(const nlohmann::json& j) {
    OutputProperty p;
    if (!j.contains("constraints"))
        throw std::runtime_error("property json: missing 'constraints'");
    for (const auto& cj : j.at("constraints")) {
        LinearConstraint c;
        c.coeffs = cj.at("coeffs").get<std::vector<double>>();
        c.offset = cj.at("offset").get<double>();
        p.constraints.push_back(std::move(c));
    }
    if (p.constraints.empty()) throw std::runtime_error("property json: no constraints");
    return p;
}

inline nlohmann::json property_to_json(const OutputProperty& p) {
    nlohmann::json j;
    j["constraints"] = nlohmann::json::array();
    for (const auto& c : p.constraints)
        j["constraints"].push_back({{"coeffs", c.coeffs}, {"offset", c.offset}});
    return j;
}

inline OutputProperty load_property(const std::string& path) {
    try {
        return property_from_json(load_json_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed property file " + path + ": " + e.what());
    }
}

} // namespace preforest
