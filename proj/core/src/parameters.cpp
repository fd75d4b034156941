#include "lstmdssm/parameters.hpp"

#include <cmath>

namespace lstmdssm {

std::string_view group_name(Group g) {
    switch (g) {
    case Group::W1: return "W1";
    case Group::W2: return "W2";
    case Group::W3: return "W3";
    case Group::W4: return "W4";
    case Group::Wrec1: return "Wrec1";
    case Group::Wrec2: return "Wrec2";
    case Group::Wrec3: return "Wrec3";
    case Group::Wrec4: return "Wrec4";
    case Group::Wp1: return "Wp1";
    case Group::Wp2: return "Wp2";
    case Group::Wp3: return "Wp3";
    case Group::b1: return "b1";
    case Group::b2: return "b2";
    case Group::b3: return "b3";
    case Group::b4: return "b4";
    }
    return "?";
}

std::pair<std::size_t, std::size_t> group_shape(Group g, const ModelDims& dims) {
    switch (g) {
    case Group::W1:
    case Group::W2:
    case Group::W3:
    case Group::W4:
        return {dims.ncell, dims.input_dim};
    case Group::Wrec1:
    case Group::Wrec2:
    case Group::Wrec3:
    case Group::Wrec4:
        return {dims.ncell, dims.ncell};
    default:
        return {dims.ncell, 1};
    }
}

bool all_finite(std::span<const double> xs) {
    for (double x : xs) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace lstmdssm
