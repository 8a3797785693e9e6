#pragma once

#include <string>

namespace ml {

enum class Activation { sigmoid, tanh, relu, softplus, linear };

double activate(Activation kind, double x);
/// Derivative as a function of the pre-activation x.
double activate_deriv(Activation kind, double x);

std::string activation_name(Activation kind);
Activation activation_from_name(const std::string& name);

}  // namespace ml
