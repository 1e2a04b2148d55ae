#pragma once

// `.lag` declaration files: fields, parameters, index macros, a Lagrangian and
// field-variation rules.

#include "emt/expr.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace emt::dsl {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& where, int line, int col, const std::string& msg);
  int line() const { return line_; }
  int column() const { return col_; }

 private:
  int line_, col_;
};

struct SourceLoc {
  std::string file;
  int line = 0;
  int col = 0;
};

enum class FieldKind { Dynamical, Metric, GaugeParameter, Constant };

struct FieldSpec {
  std::string name;
  int rank = 0;
  SymmetryKind symmetry = SymmetryKind::None;
  FieldKind kind = FieldKind::Dynamical;
};

struct Ast {
  enum class Kind { Number, Symbol, Deriv, Sum, Product };
  Kind kind = Kind::Number;
  Rational value;              // Number
  std::string name;            // Symbol
  std::vector<Index> indices;  // Symbol slots, or the Deriv index
  std::vector<Ast> children;
  std::vector<int> signs;  // Sum: +1/-1 per child
  SourceLoc loc;

  static Ast number(Rational v);
  static Ast symbol(std::string name, std::vector<Index> idx = {});
  static Ast deriv(Index i, Ast child);
  static Ast sum(std::vector<Ast> children, std::vector<int> signs);
  static Ast product(std::vector<Ast> children);
};

struct MacroDef {
  std::string name;
  std::vector<Index> params;
  Ast body;
  SourceLoc loc;
};

/// `delta FIELD[i..] = expr` (total variation δΦ including the translation
/// part) or `gauge FIELD[i..] = expr` (additive gauge shift).
struct RuleStatement {
  std::string field;
  std::vector<Index> indices;
  Ast body;
  SourceLoc loc;
};

struct Program {
  std::vector<FieldSpec> fields;
  std::vector<std::string> params;
  std::vector<MacroDef> defs;
  std::optional<Ast> lagrangian;
  std::vector<RuleStatement> variations;
  std::vector<RuleStatement> gauges;
  std::vector<std::string> included;  // canonical paths, for idempotence

  const FieldSpec* field(std::string_view name) const;
  const MacroDef* def(std::string_view name) const;
  bool has_param(std::string_view name) const;
};

/// Parses program text. `origin` names the source in error messages and
/// anchors relative `include` paths.
Program parse(std::string_view text, const std::string& origin = "<input>");
Program parse_file(const std::string& path);
/// Parses one expression against an existing program's declarations.
Ast parse_expression(std::string_view text, const Program& env);

/// Replaces every macro use by its body (dummies freshened, variance
/// mismatches bridged by eta). Throws ParseError on recursive definitions.
Ast inline_macros(const Ast& a, const Program& p);

/// Expanded (not canonicalized) tensor expression of an AST.
TensorExpr to_tensor(const Ast& a, const Program& p, Dim dim = std::nullopt);

/// Canonical Lagrangian with all macros substituted; zero if absent.
TensorExpr expand_defs(const Program& p, Dim dim = std::nullopt);
/// Canonical body of a named macro, free indices as declared.
TensorExpr expand_def(const Program& p, const std::string& name,
                      Dim dim = std::nullopt);

struct VariationRule {
  std::string field;
  std::vector<Index> placeholders;
  TensorExpr expr;
};
std::vector<VariationRule> variation_rules(const Program& p, Dim dim = std::nullopt);
std::vector<VariationRule> gauge_rules(const Program& p, Dim dim = std::nullopt);

enum class Format { Dsl, Json };
/// Text form; the empty expression renders as `0` in DSL form.
std::string render(const TensorExpr& e, Format format = Format::Dsl);
std::string render(const Ast& a);
/// Field declarations for every non-reserved head of `e`, so the DSL text of
/// `e` can be reparsed standalone.
std::string render_declarations(const TensorExpr& e);

/// Reserved built-in heads (not declarable): eta, delta, dx and the curved
/// alphabet.
bool is_builtin_head(std::string_view name);
int builtin_rank(std::string_view name);

}  // namespace emt::dsl
