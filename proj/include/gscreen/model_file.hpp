#pragma once

#include <string>

#include "gscreen/model.hpp"

namespace gscreen {

/// Loads a model description document (JSON syntax):
///   dimensions {m, n}
///   domains {X: [[lo,hi],...], Y: [[lo,hi],...], Z: [lo,hi]}
///   exactly one of
///     expressions {G, pi}
///     family {name, parts {b, f, a}}   (parts assembled per the family templates)
///   outside_option {y: [...], z}
///   measure {kind: "uniform" | "density", density}   (optional, default uniform)
/// Throws InputError / FamilyMismatchError / parse errors with positions.
ModelSpec load_model_file(const std::string& path);
ModelSpec parse_model_json(const std::string& text);

std::string model_to_json(const ModelSpec& spec);

}  // namespace gscreen
