#pragma once

#include "autopl/error.hpp"
#include "autopl/expr.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace autopl::expr
{

// Canonical serialized form: tagged pre-order tokens plus the constants
// vector. The infix rendering rides along for people and is never read back.
inline nlohmann::json to_json(const ExpressionTree& e, const std::vector<std::string>& names = {})
{
  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& t : e.tokens) {
    nlohmann::json j;
    j["op"] = op_name(t.op);
    if (t.op == Op::Var) {
      j["var"] = t.var;
      if (static_cast<std::size_t>(t.var) < names.size())
        j["name"] = names[t.var];
    } else if (t.op == Op::Literal) {
      j["value"] = t.value;
    }
    tokens.push_back(std::move(j));
  }
  nlohmann::json out;
  out["tokens"] = std::move(tokens);
  out["constants"] = e.constants;
  out["infix"] = to_infix(e, names);
  return out;
}

inline ExpressionTree from_json(const nlohmann::json& j)
{
  ExpressionTree e;
  try {
    for (const auto& tj : j.at("tokens")) {
      auto op = op_from_name(tj.at("op").get<std::string>());
      if (!op)
        throw FormatError("unknown token op '" + tj.at("op").get<std::string>() + "'");
      Token t = Token::make(*op);
      if (*op == Op::Var)
        t.var = tj.at("var").get<int>();
      else if (*op == Op::Literal)
        t.value = tj.at("value").get<double>();
      e.tokens.push_back(t);
    }
    if (j.contains("constants"))
      e.constants = j.at("constants").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("malformed expression json: ") + ex.what());
  }
  if (!is_complete(e.tokens))
    throw FormatError("expression tokens are not arity-complete");
  if (e.constants.size() != e.placeholder_count())
    throw FormatError("constants vector does not match placeholder count");
  return e;
}

} // namespace autopl::expr
