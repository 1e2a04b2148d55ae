#include "emt/cli.hpp"

#include "emt/canonicalize.hpp"
#include "emt/discrepancy.hpp"
#include "emt/dsl.hpp"
#include "emt/hilbert.hpp"
#include "emt/json_io.hpp"
#include "emt/variational.hpp"
#include "emt/verify.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace emt::cli {

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string dim = "4";
  std::vector<std::string> sets;
  std::string format = "dsl";
  std::string output;
  std::string def;

  Dim dimension() const {
    if (dim == kDimParam) return std::nullopt;
    try {
      const int d = std::stoi(dim);
      if (d > 0) return d;
    } catch (const std::exception&) {
    }
    throw UsageError("--dim expects a positive integer or D");
  }

  std::vector<std::pair<std::string, Rational>> params() const {
    std::vector<std::pair<std::string, Rational>> out;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw UsageError("--set expects NAME=VALUE, got '" + s + "'");
      try {
        out.emplace_back(s.substr(0, eq), parse_rational(s.substr(eq + 1)));
      } catch (const std::invalid_argument&) {
        throw UsageError("--set: '" + s.substr(eq + 1) + "' is not a rational number");
      }
    }
    return out;
  }

  dsl::Format fmt() const { return format == "json" ? dsl::Format::Json : dsl::Format::Dsl; }
};

void add_common(CLI::App* app, Common& c, bool with_def = true) {
  app->add_option("--dim", c.dim, "spacetime dimension, or D to keep it symbolic")
      ->capture_default_str();
  app->add_option("--set", c.sets, "parameter value NAME=p/q (repeatable)");
  app->add_option("--format", c.format, "output format")
      ->check(CLI::IsMember({"dsl", "json"}))
      ->capture_default_str();
  app->add_option("-o,--output", c.output, "write the result here instead of stdout");
  if (with_def) app->add_option("--def", c.def, "use this definition instead of the lagrangian");
}

bool is_json(const std::string& path) { return fs::path(path).extension() == ".json"; }

// PATH.json, PATH.lag (lagrangian or --def), or PATH.lag#DEF.
TensorExpr load_expr(std::string path, const Common& c) {
  std::string def = c.def;
  if (const auto hash = path.find('#'); hash != std::string::npos) {
    def = path.substr(hash + 1);
    path.resize(hash);
  }
  TensorExpr e;
  if (is_json(path)) {
    e = read_expr_file(path);
  } else {
    const dsl::Program p = dsl::parse_file(path);
    if (def.empty() && !p.lagrangian)
      throw UsageError(path + " has no lagrangian statement; select a definition with PATH.lag#DEF or --def");
    e = def.empty() ? dsl::expand_defs(p, c.dimension()) : dsl::expand_def(p, def, c.dimension());
  }
  if (c.dimension() && e.dim != c.dimension()) e.dim = c.dimension();
  return canonicalize(substitute_params(e, c.params()));
}

dsl::Program load_program(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("no such file: " + path);
  return dsl::parse_file(path);
}

void emit(const std::string& text, const Common& c, std::ostream& out) {
  if (c.output.empty()) {
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    return;
  }
  std::ofstream f(c.output);
  if (!f) throw UsageError("cannot write " + c.output);
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

std::string render_expr(const TensorExpr& e, const Common& c) {
  return c.fmt() == dsl::Format::Json ? to_json(e).dump(2) : dsl::render(e);
}

// A rule file by path, or a short name looked up next to the theory file
// (`bessel_hagen` finds em_bessel_hagen.lag beside em.lag).
std::string resolve_rule_file(const std::string& name, const std::string& theory) {
  if (fs::exists(name)) return name;
  const fs::path dir = fs::path(theory).parent_path();
  const std::string stem = fs::path(theory).stem().string();
  for (const auto& cand : {name, name + ".lag", stem + "_" + name + ".lag"})
    if (fs::exists(dir / cand)) return (dir / cand).string();
  throw UsageError("no variation rule file '" + name + "'");
}

int cmd_canon(const std::string& file, const Common& c, std::ostream& out) {
  emit(render_expr(load_expr(file, c), c), c, out);
  return kOk;
}

int cmd_noether(const std::string& file, const std::string& delta, const Common& c,
                std::ostream& out) {
  const dsl::Program p = load_program(file);
  const Dim dim = c.dimension();
  TensorExpr L = c.def.empty() ? dsl::expand_defs(p, dim) : dsl::expand_def(p, c.def, dim);
  L = canonicalize(substitute_params(L, c.params()));
  auto rules = variational::rules_for(p, dim);
  if (!delta.empty()) {
    const dsl::Program rp = load_program(resolve_rule_file(delta, file));
    for (const auto& r : dsl::variation_rules(rp, dim)) {
      auto it = std::find_if(rules.begin(), rules.end(), [&](const auto& x) { return x.field == r.field; });
      if (it != rules.end()) *it = r;
      else rules.push_back(r);
    }
  }
  TensorExpr t = variational::noether_emt(L, rules);
  t = canonicalize(substitute_params(t, c.params()));
  emit(render_expr(t, c), c, out);
  return kOk;
}

struct HilbertArgs {
  std::vector<std::string> stages;
  std::string stage_dir = ".";
  int max_use = 1;
  std::string mode = "flat-target";
};

int cmd_hilbert(const std::string& file, const HilbertArgs& h, const Common& c, std::ostream& out) {
  const dsl::Program p = load_program(file);
  hilbert::HilbertOptions opt;
  opt.dim = c.dimension();
  opt.max_use = h.max_use;
  opt.mode = h.mode == "full" ? hilbert::VariationMode::Full : hilbert::VariationMode::FlatTarget;
  const std::set<std::string> wanted(h.stages.begin(), h.stages.end());
  const std::string stem = fs::path(file).stem().string();
  if (!wanted.empty()) fs::create_directories(h.stage_dir);
  opt.on_stage = [&](std::string_view stage, const TensorExpr& e) {
    if (!wanted.count(std::string(stage))) return;
    write_expr_file((fs::path(h.stage_dir) / (stem + "." + std::string(stage) + ".json")).string(), e);
  };
  TensorExpr t = hilbert::hilbert_emt(p, opt);
  t = canonicalize(substitute_params(t, c.params()));
  emit(render_expr(t, c), c, out);
  return kOk;
}

int cmd_diff(const std::string& a, const std::string& b, const Common& c, std::ostream& out) {
  const TensorExpr ea = load_expr(a, c), eb = load_expr(b, c);
  const TensorExpr d = canonicalize(ea - align_free_indices(ea, eb));
  if (c.fmt() == dsl::Format::Json) {
    emit(nlohmann::json{{"equal", d.is_zero()}, {"difference", to_json(d)}}.dump(2), c, out);
  } else {
    emit(dsl::render(d), c, out);
  }
  return d.is_zero() ? kOk : kDifferent;
}

struct OracleArgs {
  int trials = 20;
  std::uint64_t seed = 1;
  int degree = 3;
};

verify::OracleOptions oracle_options(const OracleArgs& o, const Common& c) {
  verify::OracleOptions opt;
  opt.trials = o.trials;
  opt.seed = o.seed;
  opt.degree = o.degree;
  for (const auto& [k, v] : c.params()) opt.params[k] = v;
  return opt;
}

int cmd_oracle(const std::string& a, const std::string& b, const OracleArgs& o, const Common& c,
               std::ostream& out) {
  Common fixed = c;
  if (!c.dimension()) throw UsageError("the oracle needs a fixed dimension");
  const auto rep = verify::oracle_equal(load_expr(a, fixed), load_expr(b, fixed), oracle_options(o, c));
  emit(rep.to_json().dump(2), c, out);
  return rep.equal ? kOk : kDifferent;
}

int cmd_check(const std::string& file, const std::string& emt_path,
              const std::vector<std::string>& props, const std::string& mode, const OracleArgs& o,
              const Common& c, std::ostream& out) {
  const dsl::Program p = load_program(file);
  verify::CheckContext ctx;
  ctx.dim = c.dimension();
  ctx.mode = mode == "numeric" ? verify::Mode::Numeric : verify::Mode::Symbolic;
  ctx.oracle = oracle_options(o, c);
  const auto gauges = dsl::gauge_rules(p, ctx.dim);
  if (!gauges.empty()) ctx.gauge_rule = gauges.front();
  const TensorExpr t = load_expr(emt_path, c);
  auto reports = nlohmann::json::array();
  bool all = true;
  for (const auto& name : props) {
    const auto r = verify::check_property(t, verify::parse_property(name), ctx);
    all = all && r.pass;
    reports.push_back(r.to_json());
  }
  emit(nlohmann::json{{"pass", all}, {"reports", reports}}.dump(2), c, out);
  return all ? kOk : kDifferent;
}

struct ReportArgs {
  std::string structures;
  std::string noether;
  bool slow = false;
};

int cmd_report(const std::string& file, const ReportArgs& r, const OracleArgs& o, const Common& c,
               std::ostream& out) {
  const dsl::Program theory = load_program(file);
  const dsl::Program structures = load_program(r.structures);
  hilbert::DiscrepancyInputs in;
  in.theory = &theory;
  in.structures = &structures;
  in.noether = load_expr(r.noether, Common{});
  in.couplings = c.params();
  if (in.couplings.empty())
    in.couplings = {{"A", Rational(1, 4)}, {"B", Rational(-1)}, {"C", Rational(1, 4)}};
  in.trials = o.trials;
  in.seed = o.seed;
  in.include_slow_paths = r.slow;
  const auto rep = hilbert::gauss_bonnet_discrepancy(in);
  emit(rep.to_json().dump(2), c, out);
  return rep.certified() ? kOk : kDifferent;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Symbolic energy-momentum tensors: Noether and Hilbert derivations", "emt"};
  app.require_subcommand(1);
  Common common;
  std::string file, file_b, delta, emt_path, mode = "symbolic";
  std::vector<std::string> props;
  HilbertArgs hilbert;
  OracleArgs oracle;
  ReportArgs report;

  auto* canon = app.add_subcommand("canon", "canonical form of a Lagrangian, definition or JSON expression");
  canon->add_option("file", file, "FILE.lag, FILE.lag#DEF or FILE.json")->required();
  add_common(canon, common);

  auto* derive = app.add_subcommand("derive", "derive an energy-momentum tensor");
  derive->require_subcommand(1);
  auto* noether = derive->add_subcommand("noether", "Noether tensor from translations");
  noether->add_option("file", file)->required();
  noether->add_option("--delta", delta, "file (or short name) with `delta` rules replacing the canonical ones");
  add_common(noether, common);
  auto* hil = derive->add_subcommand("hilbert", "metric (Hilbert) tensor");
  hil->add_option("file", file)->required();
  hil->add_option("--emit-stage", hilbert.stages, "write a stage as JSON (repeatable)")
      ->check(CLI::IsMember({"promoted", "pruned", "varied", "flat"}));
  hil->add_option("--stage-dir", hilbert.stage_dir, "directory for stage dumps")->capture_default_str();
  hil->add_option("--max-use", hilbert.max_use, "highest metric-derivative grade kept")
      ->check(CLI::Range(0, 2))
      ->capture_default_str();
  hil->add_option("--mode", hilbert.mode, "variation mode")
      ->check(CLI::IsMember({"flat-target", "full"}))
      ->capture_default_str();
  add_common(hil, common, false);

  auto* diff = app.add_subcommand("diff", "canonical difference A - B; exit 1 when nonzero");
  diff->add_option("a", file)->required();
  diff->add_option("b", file_b)->required();
  add_common(diff, common);

  auto add_oracle = [&](CLI::App* a) {
    a->add_option("--trials", oracle.trials)->capture_default_str();
    a->add_option("--seed", oracle.seed)->capture_default_str();
    a->add_option("--degree", oracle.degree)->capture_default_str();
  };

  auto* check = app.add_subcommand("check", "property checks on a tensor");
  check->add_option("file", file, "theory file (gauge rule, declarations)")->required();
  check->add_option("--emt", emt_path, "tensor: FILE.json or FILE.lag#DEF")->required();
  check->add_option("--properties", props, "symmetric,traceless,gauge_invariant,conserved")
      ->required()
      ->delimiter(',');
  check->add_option("--mode", mode)->check(CLI::IsMember({"symbolic", "numeric"}))->capture_default_str();
  add_oracle(check);
  add_common(check, common, false);

  auto* cmp = app.add_subcommand("oracle-compare", "exact numeric comparison of two expressions");
  cmp->add_option("a", file)->required();
  cmp->add_option("b", file_b)->required();
  add_oracle(cmp);
  add_common(cmp, common);

  auto* rep = app.add_subcommand("report", "eta-part comparison of a quadratic-curvature Hilbert tensor");
  rep->add_option("file", file)->required();
  rep->add_option("--structures", report.structures, "structure definitions (.lag)")->required();
  rep->add_option("--noether", report.noether, "Noether tensor: FILE.json or FILE.lag#DEF")->required();
  rep->add_flag("--slow-paths", report.slow, "also certify the unpruned full variation");
  add_oracle(rep);
  add_common(rep, common, false);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*canon) return cmd_canon(file, common, out);
    if (*noether) return cmd_noether(file, delta, common, out);
    if (*hil) return cmd_hilbert(file, hilbert, common, out);
    if (*diff) return cmd_diff(file, file_b, common, out);
    if (*check) return cmd_check(file, emt_path, props, mode, oracle, common, out);
    if (*cmp) return cmd_oracle(file, file_b, oracle, common, out);
    if (*rep) return cmd_report(file, report, oracle, common, out);
  } catch (const dsl::ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace emt::cli
