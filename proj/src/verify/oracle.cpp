#include "emt/canonicalize.hpp"
#include "emt/json_io.hpp"
#include "emt/verify.hpp"

#include <algorithm>
#include <random>
#include <unordered_map>

namespace emt::verify {

namespace {

using i128 = __int128;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

std::int64_t small_int(std::mt19937_64& rng) {
  return static_cast<std::int64_t>(rng() % 7) - 3;
}

std::vector<std::array<std::uint8_t, kDim>> exponents_up_to(int degree) {
  std::vector<std::array<std::uint8_t, kDim>> out;
  for (int total = 0; total <= degree; ++total)
    for (int a = total; a >= 0; --a)
      for (int b = total - a; b >= 0; --b)
        for (int c = total - a - b; c >= 0; --c) {
          int d = total - a - b - c;
          out.push_back({static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b),
                         static_cast<std::uint8_t>(c), static_cast<std::uint8_t>(d)});
        }
  return out;
}

Polynomial random_polynomial(std::mt19937_64& rng, int degree) {
  Polynomial p;
  for (const auto& e : exponents_up_to(degree)) {
    auto c = small_int(rng);
    if (c != 0) p.push_back({e, c});
  }
  return p;
}

Polynomial scaled(const Polynomial& p, std::int64_t s) {
  Polynomial out;
  if (s == 0) return out;
  for (auto m : p) {
    m.coeff *= s;
    out.push_back(m);
  }
  return out;
}

std::vector<int> digits(std::size_t flat, int rank) {
  std::vector<int> d(rank);
  for (int i = 0; i < rank; ++i) {
    d[i] = static_cast<int>(flat % kDim);
    flat /= kDim;
  }
  return d;
}

std::size_t flatten(const std::vector<int>& d) {
  std::size_t f = 0;
  for (int i = static_cast<int>(d.size()) - 1; i >= 0; --i) f = f * kDim + d[i];
  return f;
}

// Sorts the index tuple, returning the permutation parity.
int sort_parity(std::vector<int>& d) {
  int sign = 1;
  for (std::size_t i = 1; i < d.size(); ++i)
    for (std::size_t j = i; j > 0 && d[j - 1] > d[j]; --j) {
      std::swap(d[j - 1], d[j]);
      sign = -sign;
    }
  return sign;
}

FieldData random_field(std::mt19937_64& rng, int rank, SymmetryKind sym, int degree) {
  FieldData f;
  f.rank = rank;
  f.symmetry = rank >= 2 ? sym : SymmetryKind::None;
  std::size_t n = 1;
  for (int i = 0; i < rank; ++i) n *= kDim;
  f.components.resize(n);
  std::vector<bool> done(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    if (f.symmetry == SymmetryKind::None) {
      f.components[k] = random_polynomial(rng, degree);
      continue;
    }
    auto d = digits(k, rank);
    auto sorted = d;
    int parity = sort_parity(sorted);
    std::size_t rep = flatten(sorted);
    bool repeated = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
    if (f.symmetry == SymmetryKind::Antisymmetric && repeated) continue;
    if (!done[rep]) {
      f.components[rep] = random_polynomial(rng, degree);
      done[rep] = true;
    }
    f.components[k] = f.symmetry == SymmetryKind::Antisymmetric
                          ? scaled(f.components[rep], parity)
                          : f.components[rep];
  }
  return f;
}

std::int64_t falling(int e, int d) {
  std::int64_t r = 1;
  for (int i = 0; i < d; ++i) r *= e - i;
  return r;
}

[[noreturn]] void overflow() { throw std::overflow_error("int128 overflow"); }

i128 mul(i128 a, i128 b) {
  i128 r;
  if (__builtin_mul_overflow(a, b, &r)) overflow();
  return r;
}

i128 add(i128 a, i128 b) {
  i128 r;
  if (__builtin_add_overflow(a, b, &r)) overflow();
  return r;
}

mpz_class to_mpz(i128 v) {
  bool neg = v < 0;
  unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : v;
  mpz_class hi(static_cast<unsigned long>(u >> 64));
  mpz_class lo(static_cast<unsigned long>(u & 0xffffffffffffffffULL));
  mpz_class r = (hi << 64) + lo;
  return neg ? mpz_class(-r) : r;
}

// Per (config, point) evaluation state with cached jets and factor tables.
class Evaluator {
 public:
  Evaluator(const FieldConfig& cfg, const Point& x) : cfg_(cfg), x_(x) {}

  Rational term_value(const Term& t, const std::map<std::string, int>& bound) {
    Rational c = t.coeff;
    for (const auto& p : t.params) {
      if (p == kDimParam) throw UsageError("expression has symbolic dimension D; fix the dimension first");
      auto it = cfg_.params.find(p);
      if (it == cfg_.params.end()) throw UsageError("no value for parameter '" + p + "'");
      c *= it->second;
    }
    try {
      return c * Rational(to_mpz(contract<i128>(t, bound)));
    } catch (const std::overflow_error&) {
      return c * Rational(contract<mpz_class>(t, bound));
    }
  }

 private:
  struct Table {
    std::vector<std::int64_t> v;  // 4^positions entries
    std::size_t positions;
  };

  const FieldConfig& cfg_;
  Point x_;
  std::unordered_map<std::string, std::int64_t> jets_;
  std::unordered_map<std::string, Table> tables_;

  std::int64_t jet(const std::string& head, const FieldData& f, std::size_t comp,
                   const std::array<int, kDim>& dcount) {
    std::string key = head;
    key += '#';
    key += std::to_string(comp);
    for (int c : dcount) {
      key += ',';
      key += std::to_string(c);
    }
    if (auto it = jets_.find(key); it != jets_.end()) return it->second;
    mpz_class acc = 0;
    for (const auto& m : f.components[comp]) {
      mpz_class term = m.coeff;
      for (int i = 0; i < kDim; ++i) {
        if (m.exps[i] < dcount[i]) {
          term = 0;
          break;
        }
        term *= falling(m.exps[i], dcount[i]);
        mpz_class p;
        mpz_pow_ui(p.get_mpz_t(), mpz_class(x_[i]).get_mpz_t(), m.exps[i] - dcount[i]);
        term *= p;
      }
      acc += term;
    }
    if (!acc.fits_slong_p()) throw std::overflow_error("jet value exceeds 64 bits");
    return jets_[key] = acc.get_si();
  }

  const Table& table(const Factor& f) {
    std::string key = f.head + "/" + std::to_string(f.derivs.size()) + "/";
    for (const auto* list : {&f.derivs, &f.slots})
      for (const auto& i : *list) key += i.var == Variance::Upper ? 'u' : 'l';
    if (auto it = tables_.find(key); it != tables_.end()) return it->second;

    const std::size_t nd = f.derivs.size(), ns = f.slots.size(), np = nd + ns;
    Table tb{std::vector<std::int64_t>(std::size_t{1} << (2 * np), 0), np};
    const FieldData* data = nullptr;
    const bool is_eta = f.head == heads::kEta, is_delta = f.head == heads::kDelta;
    if (!is_eta && !is_delta) {
      auto it = cfg_.fields.find(f.head);
      if (it == cfg_.fields.end()) throw UsageError("oracle has no configuration for '" + f.head + "'");
      data = &it->second;
      if (data->rank != static_cast<int>(ns))
        throw UsageError("rank mismatch for '" + f.head + "' in oracle configuration");
    }
    for (std::size_t flat = 0; flat < tb.v.size(); ++flat) {
      auto d = digits(flat, static_cast<int>(np));
      std::int64_t sign = 1;
      for (std::size_t p = 0; p < np; ++p) {
        const Index& i = p < nd ? f.derivs[p] : f.slots[p - nd];
        if (i.var == Variance::Upper) sign *= kSignature[d[p]];
      }
      std::int64_t value = 0;
      if (is_eta || is_delta) {
        // diagonal in every variance; mixed components are the identity
        sign = 1;
        if (nd == 0 && d[0] == d[1])
          value = is_delta || f.slots[0].var != f.slots[1].var ? 1 : kSignature[d[0]];
      } else {
        std::array<int, kDim> dcount{};
        for (std::size_t p = 0; p < nd; ++p) ++dcount[d[p]];
        std::vector<int> comp(d.begin() + static_cast<std::ptrdiff_t>(nd), d.end());
        value = jet(f.head, *data, flatten(comp), dcount);
      }
      tb.v[flat] = sign * value;
    }
    return tables_.emplace(key, std::move(tb)).first->second;
  }

  template <class Num>
  Num contract(const Term& t, const std::map<std::string, int>& bound) {
    // dummy ids and per-factor position bindings
    std::map<std::string, int> dummy;
    for (const auto& n : dummy_names(t)) dummy.emplace(n, static_cast<int>(dummy.size()));
    struct Bind {
      const Table* tb;
      std::vector<int> dummy_at;  // -1 when bound to a fixed value
      std::size_t fixed_offset = 0;
    };
    std::vector<Bind> binds;
    for (const auto& f : t.factors) {
      Bind b{&table(f), {}, 0};
      std::size_t stride = 1, p = 0;
      for (const auto* list : {&f.derivs, &f.slots})
        for (const auto& i : *list) {
          if (auto it = dummy.find(i.name); it != dummy.end()) {
            b.dummy_at.push_back(it->second);
          } else {
            auto v = bound.find(i.name);
            if (v == bound.end()) throw UsageError("free index '" + i.name + "' is not bound");
            b.dummy_at.push_back(-1);
            b.fixed_offset += stride * static_cast<std::size_t>(v->second);
          }
          stride *= kDim;
          ++p;
        }
      binds.push_back(std::move(b));
    }
    const std::size_t k = dummy.size();
    std::vector<int> val(k, 0);
    Num total = 0;
    while (true) {
      Num prod = 1;
      for (const auto& b : binds) {
        std::size_t off = b.fixed_offset, stride = 1;
        for (int d : b.dummy_at) {
          if (d >= 0) off += stride * static_cast<std::size_t>(val[d]);
          stride *= kDim;
        }
        const std::int64_t v = b.tb->v[off];
        if (v == 0) {
          prod = 0;
          break;
        }
        if constexpr (std::is_same_v<Num, i128>) {
          prod = mul(prod, v);
        } else {
          prod *= static_cast<long>(v);
        }
      }
      if constexpr (std::is_same_v<Num, i128>) {
        total = add(total, prod);
      } else {
        total += prod;
      }
      std::size_t i = 0;
      while (i < k && ++val[i] == kDim) val[i++] = 0;
      if (i == k) break;
    }
    return total;
  }
};

int max_jet_order(const std::vector<const TensorExpr*>& es) {
  int m = 0;
  for (const auto* e : es)
    for (const auto& t : e->terms)
      for (const auto& f : t.factors)
        if (!is_constant_head(f.head)) m = std::max(m, static_cast<int>(f.derivs.size()));
  return m;
}

}  // namespace

std::vector<dsl::FieldSpec> infer_fields(const std::vector<const TensorExpr*>& es) {
  std::map<std::string, dsl::FieldSpec> out;
  for (const auto* e : es)
    for (const auto& t : e->terms)
      for (const auto& f : t.factors) {
        if (f.head == heads::kEta || f.head == heads::kDelta) continue;
        dsl::FieldSpec s{f.head, static_cast<int>(f.slots.size())};
        if (f.sym.kind != SymmetryKind::None && f.sym.begin == 0 && f.sym.end == f.slots.size())
          s.symmetry = f.sym.kind;
        if (f.head == heads::kDx) s.kind = dsl::FieldKind::Constant;
        auto [it, fresh] = out.emplace(f.head, s);
        if (!fresh && it->second.rank != s.rank)
          throw UsageError("head '" + f.head + "' used with different ranks");
      }
  std::vector<dsl::FieldSpec> v;
  for (auto& [k, s] : out) v.push_back(s);
  return v;
}

std::vector<std::string> infer_params(const std::vector<const TensorExpr*>& es) {
  std::set<std::string> ps;
  for (const auto* e : es)
    for (const auto& t : e->terms)
      for (const auto& p : t.params) ps.insert(p);
  return {ps.begin(), ps.end()};
}

FieldConfig sample_config(std::uint64_t seed, int degree,
                          const std::vector<dsl::FieldSpec>& fields,
                          const std::vector<std::string>& params, int max_order) {
  if (degree < 2 && max_order >= 2)
    throw UsageError("configuration degree " + std::to_string(degree) +
                     " is too low for second-order jets (need >= 2)");
  if (degree < 0) throw UsageError("configuration degree must be non-negative");
  FieldConfig cfg;
  cfg.seed = seed;
  cfg.degree = degree;
  auto sorted = fields;
  if (std::none_of(sorted.begin(), sorted.end(),
                   [](const auto& f) { return f.name == heads::kDx; }))
    sorted.push_back({std::string(heads::kDx), 1, SymmetryKind::None, dsl::FieldKind::Constant});
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  for (const auto& f : sorted) {
    // Each field gets its own stream so adding a field leaves others intact.
    std::mt19937_64 rng(splitmix(seed ^ fnv1a(f.name)));
    const int deg = f.kind == dsl::FieldKind::Constant ? 0 : degree;
    cfg.fields[f.name] = random_field(rng, f.rank, f.symmetry, deg);
  }
  std::mt19937_64 prng(splitmix(seed + 0x5bd1e995));
  for (const auto& p : params) {
    if (p == kDimParam) continue;
    std::int64_t num = 0;
    while (num == 0) num = static_cast<std::int64_t>(prng() % 11) - 5;
    std::int64_t den = static_cast<std::int64_t>(prng() % 4) + 1;
    cfg.params[p] = Rational(num, den);
    cfg.params[p].canonicalize();
  }
  return cfg;
}

FieldConfig pure_gauge_config(std::uint64_t seed, int degree, const std::string& vector_field,
                              const std::vector<dsl::FieldSpec>& fields) {
  FieldConfig cfg = sample_config(seed, degree, fields, {}, 0);
  std::mt19937_64 rng(splitmix(seed ^ 0xc2b2ae3d27d4eb4fULL));
  Polynomial chi = random_polynomial(rng, degree + 1);
  FieldData a;
  a.rank = 1;
  a.components.resize(kDim);
  for (int mu = 0; mu < kDim; ++mu)
    for (const auto& m : chi) {
      if (m.exps[mu] == 0) continue;
      Monomial d = m;
      d.coeff *= m.exps[mu];
      --d.exps[mu];
      a.components[mu].push_back(d);
    }
  cfg.fields[vector_field] = std::move(a);
  return cfg;
}

Point sample_point(std::uint64_t seed) {
  std::mt19937_64 rng(splitmix(seed ^ 0x27d4eb2f165667c5ULL));
  Point p;
  for (auto& c : p) c = small_int(rng);
  return p;
}

Rational evaluate(const TensorExpr& e, const FieldConfig& cfg, const Point& x,
                  const std::vector<int>& free_values) {
  if (e.dim && *e.dim != kDim)
    throw UsageError("the oracle evaluates in dimension 4 only");
  if (e.is_zero()) return 0;
  const auto free = free_indices(e);
  if (free.size() != free_values.size())
    throw UsageError("expected " + std::to_string(free.size()) + " free index values");
  std::map<std::string, int> bound;
  for (std::size_t i = 0; i < free.size(); ++i) {
    if (free_values[i] < 0 || free_values[i] >= kDim) throw UsageError("index value out of range");
    bound[free[i].name] = free_values[i];
  }
  Evaluator ev(cfg, x);
  Rational total = 0;
  for (const auto& t : e.terms) total += ev.term_value(t, bound);
  return total;
}

nlohmann::json OracleReport::to_json() const {
  nlohmann::json j{{"verdict", equal ? "equal" : "unequal"}, {"trials", trials}, {"seed", seed}};
  if (witness) {
    j["witness"] = {{"config_seed", witness->config_seed},
                    {"point", witness->point},
                    {"indices", witness->indices},
                    {"value", to_string(witness->value)}};
  }
  return j;
}

OracleReport oracle_zero(const TensorExpr& e, const OracleOptions& opt) {
  OracleReport rep;
  rep.trials = opt.trials;
  rep.seed = opt.seed;
  TensorExpr x = substitute_params(e, {{std::string(kDimParam), Rational(kDim)}});
  x.dim = kDim;
  const std::vector<const TensorExpr*> es{&x};
  auto fields = opt.fields.empty() ? infer_fields(es) : opt.fields;
  if (!opt.fields.empty()) {
    // heads absent from the declared list (e.g. dx) are still configured
    for (auto& f : infer_fields(es))
      if (std::none_of(fields.begin(), fields.end(), [&](const auto& g) { return g.name == f.name; }))
        fields.push_back(f);
  }
  const auto params = infer_params(es);
  const int order = max_jet_order(es);
  const std::size_t nfree = free_indices(x).size();
  std::size_t combos = 1;
  for (std::size_t i = 0; i < nfree; ++i) combos *= kDim;

  for (int trial = 0; trial < opt.trials; ++trial) {
    const std::uint64_t cs = splitmix(opt.seed * 0x100000001b3ULL + static_cast<std::uint64_t>(trial));
    FieldConfig cfg = opt.pure_gauge_field
                          ? pure_gauge_config(cs, opt.degree, *opt.pure_gauge_field, fields)
                          : sample_config(cs, opt.degree, fields, params, order);
    if (opt.pure_gauge_field) {
      FieldConfig p = sample_config(cs, std::max(opt.degree, 2), {}, params, 0);
      cfg.params = p.params;
    }
    for (const auto& [k, v] : opt.params) cfg.params[k] = v;
    const Point pt = sample_point(cs);
    Evaluator ev(cfg, pt);
    for (std::size_t c = 0; c < combos; ++c) {
      auto vals = digits(c, static_cast<int>(nfree));
      std::map<std::string, int> bound;
      const auto free = free_indices(x);
      for (std::size_t i = 0; i < nfree; ++i) bound[free[i].name] = vals[i];
      Rational total = 0;
      for (const auto& t : x.terms) total += ev.term_value(t, bound);
      if (total != 0) {
        rep.equal = false;
        rep.witness = Witness{cs, pt, vals, total};
        return rep;
      }
    }
  }
  return rep;
}

OracleReport oracle_equal(const TensorExpr& a, const TensorExpr& b, const OracleOptions& opt) {
  TensorExpr d = a - align_free_indices(a, b);
  return oracle_zero(d, opt);
}

}  // namespace emt::verify
