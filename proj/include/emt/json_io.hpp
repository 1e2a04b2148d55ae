#pragma once

#include "emt/expr.hpp"

#include <json.hpp>

#include <string>

namespace emt {

nlohmann::json to_json(const TensorExpr& e);
/// Throws ValidationError on schema violations.
TensorExpr expr_from_json(const nlohmann::json& j);

TensorExpr read_expr_file(const std::string& path);
void write_expr_file(const std::string& path, const TensorExpr& e);

}  // namespace emt
