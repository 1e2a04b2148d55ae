#include "emt/dsl.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace emt::dsl {

namespace fs = std::filesystem;

ParseError::ParseError(const std::string& where, int line, int col,
                       const std::string& msg)
    : std::runtime_error(where + ":" + std::to_string(line) + ":" +
                         std::to_string(col) + ": " + msg),
      line_(line),
      col_(col) {}

Ast Ast::number(Rational v) {
  Ast a;
  a.kind = Kind::Number;
  a.value = std::move(v);
  return a;
}

Ast Ast::symbol(std::string name, std::vector<Index> idx) {
  Ast a;
  a.kind = Kind::Symbol;
  a.name = std::move(name);
  a.indices = std::move(idx);
  return a;
}

Ast Ast::deriv(Index i, Ast child) {
  Ast a;
  a.kind = Kind::Deriv;
  a.indices = {std::move(i)};
  a.children.push_back(std::move(child));
  return a;
}

Ast Ast::sum(std::vector<Ast> children, std::vector<int> signs) {
  Ast a;
  a.kind = Kind::Sum;
  a.children = std::move(children);
  a.signs = std::move(signs);
  return a;
}

Ast Ast::product(std::vector<Ast> children) {
  Ast a;
  a.kind = Kind::Product;
  a.children = std::move(children);
  return a;
}

const FieldSpec* Program::field(std::string_view name) const {
  for (const auto& f : fields)
    if (f.name == name) return &f;
  return nullptr;
}

const MacroDef* Program::def(std::string_view name) const {
  for (const auto& d : defs)
    if (d.name == name) return &d;
  return nullptr;
}

bool Program::has_param(std::string_view name) const {
  return name == kDimParam ||
         std::find(params.begin(), params.end(), name) != params.end();
}

bool is_builtin_head(std::string_view name) { return builtin_rank(name) >= 0; }

int builtin_rank(std::string_view name) {
  if (name == heads::kEta || name == heads::kDelta || name == heads::kMetric ||
      name == heads::kInverseMetric)
    return 2;
  if (name == heads::kDx) return 1;
  if (name == heads::kSqrtMinusG) return 0;
  if (name == heads::kChristoffel) return 3;
  return -1;
}

namespace {

enum class Tok { Name, Int, Str, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  int line, col;
};

std::vector<Token> lex(std::string_view src, const std::string& origin) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
    } else if (c == '#' || (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
      while (i < src.size() && src[i] != '\n') advance(1);
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      out.push_back({Tok::Name, std::string(src.substr(i, j - i)), line, col});
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      out.push_back({Tok::Int, std::string(src.substr(i, j - i)), line, col});
      advance(j - i);
    } else if (c == '"') {
      std::size_t j = i + 1;
      while (j < src.size() && src[j] != '"' && src[j] != '\n') ++j;
      if (j >= src.size() || src[j] != '"')
        throw ParseError(origin, line, col, "unterminated string");
      out.push_back({Tok::Str, std::string(src.substr(i + 1, j - i - 1)), line, col});
      advance(j + 1 - i);
    } else if (std::string_view("{}[](),:=+-*/^;").find(c) != std::string_view::npos) {
      out.push_back({Tok::Punct, std::string(1, c), line, col});
      advance(1);
    } else {
      throw ParseError(origin, line, col,
                       std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::End, "", line, col});
  return out;
}

bool is_keyword(std::string_view s) {
  return s == "field" || s == "param" || s == "def" || s == "lagrangian" ||
         s == "gauge" || s == "include";
}

class Parser {
 public:
  Parser(std::string_view text, std::string origin, Program& prog)
      : origin_(std::move(origin)), toks_(lex(text, origin_)), prog_(prog) {}

  void program() {
    while (!at_end()) statement();
  }

  Ast lone_expression() {
    Ast a = expr();
    if (!at_end()) fail(peek(), "unexpected '" + peek().text + "' after expression");
    return a;
  }

 private:
  std::string origin_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Program& prog_;

  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  bool at_end() const { return peek().kind == Tok::End; }
  Token take() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ParseError(origin_, t.line, t.col, msg);
  }
  SourceLoc loc(const Token& t) const { return {origin_, t.line, t.col}; }

  bool is_punct(const char* p, std::size_t k = 0) const {
    return peek(k).kind == Tok::Punct && peek(k).text == p;
  }
  bool accept(const char* p) {
    if (!is_punct(p)) return false;
    ++pos_;
    return true;
  }
  void expect(const char* p) {
    if (!accept(p))
      fail(peek(), std::string("expected '") + p + "' but found '" +
                       (at_end() ? std::string("end of input") : peek().text) + "'");
  }
  Token expect_name(const char* what) {
    if (peek().kind != Tok::Name) fail(peek(), std::string("expected ") + what);
    return take();
  }

  void check_fresh_symbol(const Token& t) const {
    const auto& n = t.text;
    if (n == "d" || is_keyword(n) || is_builtin_head(n) || n == kDimParam)
      fail(t, "'" + n + "' is reserved");
    if (prog_.field(n) || prog_.def(n) || prog_.has_param(n))
      fail(t, "duplicate declaration of '" + n + "'");
  }

  void statement() {
    if (accept(";")) return;
    const Token& t = peek();
    if (t.kind != Tok::Name) fail(t, "expected a statement");
    if (t.text == "field") return field_stmt();
    if (t.text == "param") return param_stmt();
    if (t.text == "def") return def_stmt();
    if (t.text == "lagrangian") return lagrangian_stmt();
    if (t.text == "include") return include_stmt();
    if ((t.text == "delta" || t.text == "gauge") && peek(1).kind == Tok::Name)
      return rule_stmt();
    fail(t, "unknown statement '" + t.text + "'");
  }

  void field_stmt() {
    take();
    Token name = expect_name("field name");
    check_fresh_symbol(name);
    FieldSpec spec{name.text};
    bool have_rank = false;
    expect("{");
    do {
      Token key = expect_name("field attribute");
      expect(":");
      if (key.text == "rank") {
        if (peek().kind != Tok::Int) fail(peek(), "rank must be a non-negative integer");
        spec.rank = std::stoi(take().text);
        have_rank = true;
      } else if (key.text == "symmetry") {
        Token v = expect_name("symmetry");
        if (v.text == "none") spec.symmetry = SymmetryKind::None;
        else if (v.text == "symmetric") spec.symmetry = SymmetryKind::Symmetric;
        else if (v.text == "antisymmetric") spec.symmetry = SymmetryKind::Antisymmetric;
        else fail(v, "unknown symmetry '" + v.text + "'");
      } else if (key.text == "kind") {
        Token v = expect_name("field kind");
        std::string k = v.text;
        while (accept("-")) k += "-" + expect_name("field kind").text;
        if (k == "dynamical") spec.kind = FieldKind::Dynamical;
        else if (k == "metric") spec.kind = FieldKind::Metric;
        else if (k == "gauge-parameter" || k == "gauge") spec.kind = FieldKind::GaugeParameter;
        else if (k == "constant" || k == "coordinate-constant") spec.kind = FieldKind::Constant;
        else fail(v, "unknown field kind '" + k + "'");
      } else {
        fail(key, "unknown field attribute '" + key.text + "'");
      }
    } while (accept(","));
    expect("}");
    if (!have_rank) fail(name, "field '" + name.text + "' needs a rank");
    if (spec.rank < 2) spec.symmetry = SymmetryKind::None;
    prog_.fields.push_back(spec);
  }

  void param_stmt() {
    take();
    do {
      Token n = expect_name("parameter name");
      check_fresh_symbol(n);
      prog_.params.push_back(n.text);
    } while (accept(","));
  }

  Index index() {
    bool upper = accept("^");
    Token n = expect_name("index name");
    if (n.text == "d" || is_keyword(n.text)) fail(n, "malformed index '" + n.text + "'");
    return {n.text, upper ? Variance::Upper : Variance::Lower};
  }

  std::vector<Index> index_list() {
    std::vector<Index> out;
    expect("[");
    if (is_punct("]")) fail(peek(), "empty index list");
    do {
      out.push_back(index());
    } while (accept(","));
    expect("]");
    return out;
  }

  void check_distinct(const std::vector<Index>& idx, const Token& at) const {
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b)
        if (idx[a].name == idx[b].name)
          fail(at, "index '" + idx[a].name + "' repeated in declaration");
  }

  // Lowers once to check wiring and the declared free indices.
  void check_free(const Ast& body, const std::vector<Index>& declared,
                  const Token& at, const std::string& what) const {
    TensorExpr e;
    try {
      e = to_tensor(body, prog_);
    } catch (const ValidationError& ex) {
      fail(at, what + ": " + ex.what());
    }
    if (e.is_zero()) return;
    auto want = declared;
    std::sort(want.begin(), want.end());
    if (free_indices(e) != want) {
      std::string got;
      for (const auto& i : free_indices(e))
        got += (got.empty() ? "" : ",") + std::string(i.var == Variance::Upper ? "^" : "") + i.name;
      fail(at, what + " has free indices [" + got + "] that do not match its declaration");
    }
  }

  void def_stmt() {
    take();
    Token name = expect_name("macro name");
    check_fresh_symbol(name);
    MacroDef d{name.text, {}, {}, loc(name)};
    if (is_punct("[")) d.params = index_list();
    check_distinct(d.params, name);
    expect("=");
    d.body = expr();
    check_free(d.body, d.params, name, "definition of '" + d.name + "'");
    prog_.defs.push_back(std::move(d));
  }

  void lagrangian_stmt() {
    Token kw = take();
    if (prog_.lagrangian) fail(kw, "duplicate lagrangian statement");
    expect("=");
    Ast body = expr();
    check_free(body, {}, kw, "lagrangian");
    prog_.lagrangian = std::move(body);
  }

  void rule_stmt() {
    Token kw = take();
    Token f = expect_name("field name");
    const FieldSpec* spec = prog_.field(f.text);
    if (!spec) fail(f, "unknown field '" + f.text + "'");
    RuleStatement r{f.text, {}, {}, loc(f)};
    if (is_punct("[")) r.indices = index_list();
    if (static_cast<int>(r.indices.size()) != spec->rank)
      fail(f, "field '" + f.text + "' has rank " + std::to_string(spec->rank) +
                  " but " + std::to_string(r.indices.size()) + " indices were given");
    check_distinct(r.indices, f);
    expect("=");
    r.body = expr();
    check_free(r.body, r.indices, f, kw.text + " rule for '" + f.text + "'");
    (kw.text == "delta" ? prog_.variations : prog_.gauges).push_back(std::move(r));
  }

  void include_stmt() {
    Token kw = take();
    if (peek().kind != Tok::Str) fail(peek(), "include expects a quoted path");
    Token p = take();
    fs::path base = fs::path(origin_).parent_path();
    fs::path target = fs::path(p.text).is_absolute() ? fs::path(p.text) : base / p.text;
    std::error_code ec;
    auto canon = fs::weakly_canonical(target, ec).string();
    if (ec) canon = target.string();
    if (std::find(prog_.included.begin(), prog_.included.end(), canon) !=
        prog_.included.end())
      return;
    std::ifstream in(target);
    if (!in) fail(p, "cannot open include '" + target.string() + "'");
    prog_.included.push_back(canon);
    std::stringstream ss;
    ss << in.rdbuf();
    Parser sub(ss.str(), target.string(), prog_);
    sub.program();
    (void)kw;
  }

  // ---- expressions ----------------------------------------------------------

  Ast expr() {
    const Token start = peek();
    std::vector<Ast> terms;
    std::vector<int> signs;
    int sign = 1;
    if (accept("-")) sign = -1;
    else accept("+");
    terms.push_back(term());
    signs.push_back(sign);
    while (is_punct("+") || is_punct("-")) {
      signs.push_back(take().text == "-" ? -1 : 1);
      terms.push_back(term());
    }
    if (terms.size() == 1 && signs[0] == 1) return std::move(terms[0]);
    Ast s = Ast::sum(std::move(terms), std::move(signs));
    s.loc = loc(start);
    return s;
  }

  bool starts_factor() const {
    const Token& t = peek();
    if (t.kind == Tok::Int) return true;
    if (t.kind == Tok::Punct) return t.text == "(";
    if (t.kind != Tok::Name) return false;
    if (is_keyword(t.text)) return false;
    if (t.text == "delta") return is_punct("[", 1);
    return true;
  }

  Ast term() {
    const Token start = peek();
    std::vector<Ast> fs;
    fs.push_back(unary());
    while (true) {
      if (accept("*")) {
        fs.push_back(unary());
      } else if (starts_factor()) {
        fs.push_back(unary());
      } else {
        break;
      }
    }
    if (fs.size() == 1) return std::move(fs[0]);
    Ast p = Ast::product(std::move(fs));
    p.loc = loc(start);
    return p;
  }

  Ast unary() {
    const Token start = peek();
    if (accept("-")) {
      Ast p = Ast::product({Ast::number(-1), unary()});
      p.loc = loc(start);
      return p;
    }
    return factor();
  }

  Ast factor() {
    const Token t = peek();
    if (t.kind == Tok::Int) {
      take();
      std::string text = t.text;
      if (accept("/")) {
        if (peek().kind != Tok::Int) fail(peek(), "malformed rational literal");
        text += "/" + take().text;
      }
      try {
        Ast a = Ast::number(parse_rational(text));
        a.loc = loc(t);
        return a;
      } catch (const std::invalid_argument& ex) {
        fail(t, ex.what());
      }
    }
    if (accept("(")) {
      Ast a = expr();
      expect(")");
      return a;
    }
    if (t.kind != Tok::Name || is_keyword(t.text))
      fail(t, at_end() ? "unexpected end of input" : "unexpected '" + t.text + "'");
    take();
    if (t.text == "d") {
      if (!is_punct("[")) fail(t, "'d' must be followed by [index]");
      auto idx = index_list();
      if (idx.size() != 1) fail(t, "a derivative takes exactly one index");
      if (!starts_factor()) fail(peek(), "derivative has nothing to act on");
      Ast a = Ast::deriv(idx[0], factor());
      a.loc = loc(t);
      return a;
    }
    std::vector<Index> idx;
    if (is_punct("[")) idx = index_list();
    resolve(t, idx.size());
    Ast a = Ast::symbol(t.text, std::move(idx));
    a.loc = loc(t);
    return a;
  }

  void resolve(const Token& t, std::size_t n) const {
    const auto& name = t.text;
    auto arity = [&](std::size_t want, const char* what) {
      if (n != want)
        fail(t, std::string(what) + " '" + name + "' expects " + std::to_string(want) +
                    " indices, got " + std::to_string(n));
    };
    if (int r = builtin_rank(name); r >= 0) return arity(static_cast<std::size_t>(r), "tensor");
    if (const auto* f = prog_.field(name)) return arity(static_cast<std::size_t>(f->rank), "field");
    if (const auto* d = prog_.def(name)) return arity(d->params.size(), "macro");
    if (prog_.has_param(name)) return arity(0, "parameter");
    fail(t, "unknown symbol '" + name + "'");
  }
};

}  // namespace

Program parse(std::string_view text, const std::string& origin) {
  Program p;
  if (origin != "<input>") {
    std::error_code ec;
    auto canon = fs::weakly_canonical(origin, ec);
    p.included.push_back(ec ? origin : canon.string());
  }
  Parser(text, origin, p).program();
  return p;
}

Program parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

Ast parse_expression(std::string_view text, const Program& env) {
  Program copy = env;
  return Parser(text, "<expr>", copy).lone_expression();
}

}  // namespace emt::dsl
