#pragma once

#include <functional>
#include <string>

#include "tattnet/autodiff.hpp"

namespace tattnet {

/// Called once per parameter, in a fixed order, with a dotted name such as
/// "stacked.0.head1.query".
using ParameterVisitor = std::function<void(const std::string& name, Parameter& parameter)>;

}  // namespace tattnet
