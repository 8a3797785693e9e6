#include "ml/nn/activations.hpp"

#include <cmath>
#include <stdexcept>

#include "ml/linear.hpp"

namespace ml {

double activate(Activation kind, double x) {
    switch (kind) {
        case Activation::sigmoid:
            return sigmoid(x);
        case Activation::tanh:
            return std::tanh(x);
        case Activation::relu:
            return x < 0.0 ? 0.0 : x;
        case Activation::softplus:
            // ln(1 + e^x), stable for large |x|.
            return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
        case Activation::linear:
            return x;
    }
    throw std::logic_error("activate");
}

double activate_deriv(Activation kind, double x) {
    switch (kind) {
        case Activation::sigmoid: {
            const double s = sigmoid(x);
            return s * (1.0 - s);
        }
        case Activation::tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::relu:
            return x < 0.0 ? 0.0 : 1.0;
        case Activation::softplus:
            return sigmoid(x);
        case Activation::linear:
            return 1.0;
    }
    throw std::logic_error("activate_deriv");
}

std::string activation_name(Activation kind) {
    switch (kind) {
        case Activation::sigmoid:
            return "sigmoid";
        case Activation::tanh:
            return "tanh";
        case Activation::relu:
            return "relu";
        case Activation::softplus:
            return "softplus";
        case Activation::linear:
            return "linear";
    }
    throw std::logic_error("activation_name");
}

Activation activation_from_name(const std::string& name) {
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    if (name == "softplus") return Activation::softplus;
    if (name == "linear") return Activation::linear;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

}  // namespace ml
