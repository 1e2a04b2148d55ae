#include "emt/canonicalize.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <numeric>
#include <thread>
#include <unordered_map>

namespace emt {

namespace {

// ---- contraction ------------------------------------------------------------

struct Occurrence {
  std::size_t factor;
  bool deriv;
  std::size_t pos;
};

Index& occ_ref(Term& t, const Occurrence& o) {
  auto& f = t.factors[o.factor];
  return o.deriv ? f.derivs[o.pos] : f.slots[o.pos];
}

std::optional<Occurrence> find_partner(const Term& t, const std::string& name,
                                       std::size_t skip_factor) {
  for (std::size_t i = 0; i < t.factors.size(); ++i) {
    if (i == skip_factor) continue;
    const auto& f = t.factors[i];
    for (std::size_t p = 0; p < f.derivs.size(); ++p) {
      if (f.derivs[p].name == name) return Occurrence{i, true, p};
    }
    for (std::size_t p = 0; p < f.slots.size(); ++p) {
      if (f.slots[p].name == name) return Occurrence{i, false, p};
    }
  }
  return std::nullopt;
}

void add_param(Term& t, std::string p) {
  t.params.insert(std::upper_bound(t.params.begin(), t.params.end(), p),
                  std::move(p));
}

void erase_factor(Term& t, std::size_t i) {
  t.factors.erase(t.factors.begin() + static_cast<std::ptrdiff_t>(i));
}

// One rewrite step; false once the term is contraction-free.
bool contract_once(Term& t, bool curved) {
  for (std::size_t i = 0; i < t.factors.size(); ++i) {
    const Factor& f = t.factors[i];
    if (!f.derivs.empty() || f.slots.size() != 2) continue;
    const bool is_delta = f.head == heads::kDelta;
    const bool is_eta = f.head == heads::kEta;
    if (!is_delta && !is_eta) continue;
    const bool mixed = f.slots[0].var != f.slots[1].var;
    // Same-variance deltas carry the metric; treat them like eta.
    if (!mixed && curved) continue;
    const Index s0 = f.slots[0], s1 = f.slots[1];
    if (s0.name == s1.name) {
      erase_factor(t, i);
      add_param(t, std::string(kDimParam));
      return true;
    }
    for (int k = 0; k < 2; ++k) {
      const Index& mine = k == 0 ? s0 : s1;
      const Index& other = k == 0 ? s1 : s0;
      auto o = find_partner(t, mine.name, i);
      if (!o) continue;
      Index& target = occ_ref(t, *o);
      target.name = other.name;
      if (!mixed) {
        target.var = other.var;
        // absorbing a metric into eta/delta can change which of the two it is
        Factor& tf = t.factors[o->factor];
        if ((tf.head == heads::kEta || tf.head == heads::kDelta) &&
            tf.derivs.empty() && tf.slots.size() == 2) {
          if (tf.slots[0].var == tf.slots[1].var) {
            tf = eta_factor(tf.slots[0], tf.slots[1]);
          } else {
            const bool up0 = tf.slots[0].var == Variance::Upper;
            tf = delta_factor(up0 ? tf.slots[0] : tf.slots[1], up0 ? tf.slots[1] : tf.slots[0]);
          }
        }
      }
      erase_factor(t, i);
      return true;
    }
  }
  if (!curved) return false;
  // g_{ab} ginv^{bc} -> delta^c_a
  for (std::size_t i = 0; i < t.factors.size(); ++i) {
    const Factor& g = t.factors[i];
    if (g.head != heads::kMetric || !g.derivs.empty() || g.slots.size() != 2)
      continue;
    for (std::size_t j = 0; j < t.factors.size(); ++j) {
      const Factor& gi = t.factors[j];
      if (gi.head != heads::kInverseMetric || !gi.derivs.empty() ||
          gi.slots.size() != 2)
        continue;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          if (g.slots[a].name != gi.slots[b].name ||
              g.slots[a].var == gi.slots[b].var)
            continue;
          Factor d = delta_factor(gi.slots[1 - b], g.slots[1 - a]);
          erase_factor(t, std::max(i, j));
          erase_factor(t, std::min(i, j));
          t.factors.push_back(std::move(d));
          return true;
        }
      }
    }
  }
  return false;
}

// Surviving Kronecker factors (both slots free) in their stored form: mixed
// ones as delta upper-first, same-variance ones in flat terms as eta.
void normalize_kronecker(Term& t, bool curved) {
  for (auto& f : t.factors) {
    if ((f.head != heads::kEta && f.head != heads::kDelta) || !f.derivs.empty() ||
        f.slots.size() != 2)
      continue;
    const Index a = f.slots[0], b = f.slots[1];
    if (a.var != b.var) {
      if (curved && f.head == heads::kEta) continue;
      f = a.var == Variance::Upper ? delta_factor(a, b) : delta_factor(b, a);
    } else if (!curved) {
      f = eta_factor(a, b);
    }
  }
}

bool is_curved(const Term& t) {
  return std::any_of(t.factors.begin(), t.factors.end(),
                     [](const Factor& f) { return is_metric_head(f.head); });
}

// ---- canonical labeling -----------------------------------------------------

using Code = std::vector<std::int64_t>;

constexpr std::int64_t kFreeBase = std::int64_t{1} << 20;

int position_class(const Factor& f, bool deriv, std::size_t pos) {
  if (deriv) return -1;
  if (f.sym.kind != SymmetryKind::None && pos >= f.sym.begin &&
      pos < f.sym.end)
    return -2 - static_cast<int>(f.sym.begin);
  return static_cast<int>(pos);
}

struct Slot {
  int pclass;
  bool deriv;
  std::size_t pos;
  int dummy;  // -1 for free
  std::int64_t free_token;
  Variance var;
};

struct Skeleton {
  bool curved = false;
  std::vector<std::int64_t> head_rank;
  std::vector<std::vector<Slot>> slots;  // per factor, derivs then slots
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> occ;  // per dummy
  std::vector<std::string> dummy_name;
};

Skeleton build_skeleton(const Term& t, bool curved) {
  Skeleton s;
  s.curved = curved;
  std::vector<std::string> heads_sorted;
  for (const auto& f : t.factors) heads_sorted.push_back(f.head);
  std::sort(heads_sorted.begin(), heads_sorted.end());
  heads_sorted.erase(std::unique(heads_sorted.begin(), heads_sorted.end()),
                     heads_sorted.end());
  const auto free = free_indices(t);
  std::map<std::string, std::int64_t> free_rank;
  for (std::size_t k = 0; k < free.size(); ++k)
    free_rank[free[k].name] = static_cast<std::int64_t>(k);
  std::map<std::string, int> dummy_id;
  for (const auto& d : dummy_names(t)) {
    dummy_id.emplace(d, static_cast<int>(s.dummy_name.size()));
    s.dummy_name.push_back(d);
  }
  s.occ.resize(s.dummy_name.size());
  for (std::size_t fi = 0; fi < t.factors.size(); ++fi) {
    const Factor& f = t.factors[fi];
    s.head_rank.push_back(
        std::lower_bound(heads_sorted.begin(), heads_sorted.end(), f.head) -
        heads_sorted.begin());
    std::vector<Slot> row;
    auto add = [&](const Index& i, bool deriv, std::size_t pos) {
      Slot sl{position_class(f, deriv, pos), deriv, pos, -1, 0, i.var};
      if (auto it = dummy_id.find(i.name); it != dummy_id.end()) {
        sl.dummy = it->second;
        s.occ[it->second].emplace_back(fi, row.size());
      } else {
        sl.free_token = kFreeBase + free_rank.at(i.name) * 2 +
                        static_cast<std::int64_t>(i.var);
      }
      row.push_back(sl);
    };
    for (std::size_t p = 0; p < f.derivs.size(); ++p) add(f.derivs[p], true, p);
    for (std::size_t p = 0; p < f.slots.size(); ++p) add(f.slots[p], false, p);
    s.slots.push_back(std::move(row));
  }
  return s;
}

std::int64_t token(const Skeleton& s, const Slot& sl,
                   const std::vector<int>& colour) {
  if (sl.dummy < 0) return sl.free_token;
  std::int64_t v = std::int64_t{colour[sl.dummy]} * 2;
  if (s.curved) v += static_cast<std::int64_t>(sl.var);
  return v;
}

// Replaces keys by their rank among the sorted distinct keys.
template <class K>
std::vector<int> rank_keys(const std::vector<K>& keys) {
  std::vector<K> sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<int> out(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i)
    out[i] = static_cast<int>(
        std::lower_bound(sorted.begin(), sorted.end(), keys[i]) -
        sorted.begin());
  return out;
}

int count_distinct(const std::vector<int>& c) {
  return c.empty() ? 0 : *std::max_element(c.begin(), c.end()) + 1;
}

std::vector<int> initial_colours(const Term& t, const Skeleton& s) {
  std::vector<Code> keys(s.occ.size());
  for (std::size_t d = 0; d < s.occ.size(); ++d) {
    std::vector<Code> parts;
    for (auto [fi, k] : s.occ[d]) {
      const Factor& f = t.factors[fi];
      const Slot& sl = s.slots[fi][k];
      parts.push_back({s.head_rank[fi],
                       static_cast<std::int64_t>(f.derivs.size()),
                       static_cast<std::int64_t>(f.slots.size()),
                       static_cast<std::int64_t>(f.sym.kind), f.sym.begin,
                       f.sym.end, sl.pclass,
                       s.curved ? static_cast<std::int64_t>(sl.var) : 0});
    }
    std::sort(parts.begin(), parts.end());
    for (auto& p : parts) keys[d].insert(keys[d].end(), p.begin(), p.end());
  }
  return rank_keys(keys);
}

std::vector<int> refine(const Term& t, const Skeleton& s,
                        std::vector<int> colour) {
  const std::size_t n = colour.size();
  int distinct = count_distinct(colour);
  while (true) {
    std::vector<Code> context(s.slots.size());
    for (std::size_t fi = 0; fi < s.slots.size(); ++fi) {
      std::vector<std::pair<int, std::int64_t>> items;
      for (const auto& sl : s.slots[fi])
        items.emplace_back(sl.pclass, token(s, sl, colour));
      std::sort(items.begin(), items.end());
      for (auto [p, v] : items) {
        context[fi].push_back(p);
        context[fi].push_back(v);
      }
    }
    std::vector<Code> keys(n);
    for (std::size_t d = 0; d < n; ++d) {
      std::vector<Code> parts;
      for (auto [fi, k] : s.occ[d]) {
        Code p{s.head_rank[fi], s.slots[fi][k].pclass};
        p.insert(p.end(), context[fi].begin(), context[fi].end());
        parts.push_back(std::move(p));
      }
      std::sort(parts.begin(), parts.end());
      keys[d].push_back(colour[d]);
      for (auto& p : parts) {
        keys[d].push_back(static_cast<std::int64_t>(p.size()));
        keys[d].insert(keys[d].end(), p.begin(), p.end());
      }
    }
    (void)t;
    auto next = rank_keys(keys);
    int nd = count_distinct(next);
    colour = std::move(next);
    if (nd == distinct) return colour;
    distinct = nd;
  }
}

struct Leaf {
  std::vector<Code> code;  // sorted factor codes
  int sign = 1;
};

// Factor code at a discrete labeling; also reports the slot permutation sign.
Code factor_code(const Term& t, const Skeleton& s, std::size_t fi,
                 const std::vector<int>& label, int& sign) {
  const Factor& f = t.factors[fi];
  const auto& row = s.slots[fi];
  Code c{s.head_rank[fi], static_cast<std::int64_t>(f.derivs.size()),
         static_cast<std::int64_t>(f.slots.size()),
         static_cast<std::int64_t>(f.sym.kind), f.sym.begin, f.sym.end};
  std::vector<std::int64_t> d;
  for (std::size_t k = 0; k < f.derivs.size(); ++k)
    d.push_back(token(s, row[k], label));
  std::sort(d.begin(), d.end());
  c.insert(c.end(), d.begin(), d.end());
  std::vector<std::int64_t> sl;
  for (std::size_t k = 0; k < f.slots.size(); ++k)
    sl.push_back(token(s, row[f.derivs.size() + k], label));
  if (f.sym.kind != SymmetryKind::None) {
    auto b = sl.begin() + f.sym.begin, e = sl.begin() + f.sym.end;
    if (f.sym.kind == SymmetryKind::Antisymmetric) {
      // insertion sort counting transpositions
      for (auto i = b + 1; i < e; ++i)
        for (auto j = i; j > b && *(j - 1) > *j; --j) {
          std::iter_swap(j - 1, j);
          sign = -sign;
        }
    } else {
      std::sort(b, e);
    }
  }
  c.insert(c.end(), sl.begin(), sl.end());
  return c;
}

Leaf evaluate_leaf(const Term& t, const Skeleton& s,
                   const std::vector<int>& label) {
  Leaf leaf;
  for (std::size_t fi = 0; fi < t.factors.size(); ++fi)
    leaf.code.push_back(factor_code(t, s, fi, label, leaf.sign));
  std::sort(leaf.code.begin(), leaf.code.end());
  return leaf;
}

struct SearchState {
  const Term& t;
  const Skeleton& s;
  std::optional<Leaf> best;
  std::vector<int> best_label;
  bool odd_automorphism = false;
};

void search(SearchState& st, std::vector<int> colour) {
  colour = refine(st.t, st.s, std::move(colour));
  const int distinct = count_distinct(colour);
  if (distinct == static_cast<int>(colour.size())) {
    Leaf leaf = evaluate_leaf(st.t, st.s, colour);
    if (!st.best || leaf.code < st.best->code) {
      st.best = std::move(leaf);
      st.best_label = colour;
      st.odd_automorphism = false;
    } else if (leaf.code == st.best->code && leaf.sign != st.best->sign) {
      st.odd_automorphism = true;
    }
    return;
  }
  std::vector<int> size(distinct, 0);
  for (int c : colour) ++size[c];
  int target = 0;
  while (size[target] < 2) ++target;
  for (std::size_t v = 0; v < colour.size(); ++v) {
    if (colour[v] != target) continue;
    std::vector<std::pair<int, int>> keys(colour.size());
    for (std::size_t x = 0; x < colour.size(); ++x)
      keys[x] = {colour[x], x == v ? 0 : 1};
    search(st, rank_keys(keys));
    if (st.odd_automorphism) return;
  }
}

std::string dummy_label_name(std::size_t k) {
  static constexpr std::string_view base = "abcefijklmnpqrstuvwxyz";
  std::string n(1, base[k % base.size()]);
  if (k >= base.size()) n += std::to_string(k / base.size());
  return n;
}

// Rebuilds the term under the chosen labeling: sorted jets and symmetric
// ranges, canonical dummy names, factor order by code.
Term relabel(const Term& t, const Skeleton& s, const std::vector<int>& label,
             int& sign) {
  std::set<std::string> taken;
  for (const auto& i : free_indices(t)) taken.insert(i.name);
  std::vector<std::string> names;
  for (std::size_t k = 0; names.size() < label.size(); ++k) {
    auto n = dummy_label_name(k);
    if (!taken.contains(n)) names.push_back(std::move(n));
  }

  std::vector<std::pair<Code, Factor>> out;
  for (std::size_t fi = 0; fi < t.factors.size(); ++fi) {
    const Factor& f = t.factors[fi];
    const auto& row = s.slots[fi];
    auto renamed = [&](const Index& i, const Slot& sl) {
      if (sl.dummy < 0) return i;
      return Index{names[label[sl.dummy]], i.var};
    };
    std::vector<std::pair<std::int64_t, Index>> d, sl;
    for (std::size_t k = 0; k < f.derivs.size(); ++k)
      d.emplace_back(token(s, row[k], label), renamed(f.derivs[k], row[k]));
    for (std::size_t k = 0; k < f.slots.size(); ++k) {
      const Slot& x = row[f.derivs.size() + k];
      sl.emplace_back(token(s, x, label), renamed(f.slots[k], x));
    }
    auto by_token = [](const auto& a, const auto& b) {
      return a.first < b.first;
    };
    std::stable_sort(d.begin(), d.end(), by_token);
    if (f.sym.kind != SymmetryKind::None) {
      auto b = sl.begin() + f.sym.begin, e = sl.begin() + f.sym.end;
      if (f.sym.kind == SymmetryKind::Antisymmetric) {
        for (auto i = b + 1; i < e; ++i)
          for (auto j = i; j > b && (j - 1)->first > j->first; --j) {
            std::iter_swap(j - 1, j);
            sign = -sign;
          }
      } else {
        std::stable_sort(b, e, by_token);
      }
    }
    int dummy_sign = 1;
    Code code = factor_code(t, s, fi, label, dummy_sign);
    Factor g{f.head, {}, {}, f.sym};
    for (auto& [k, i] : d) g.derivs.push_back(std::move(i));
    for (auto& [k, i] : sl) g.slots.push_back(std::move(i));
    out.emplace_back(std::move(code), std::move(g));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.first < b.first;
  });
  Term r;
  r.coeff = t.coeff;
  r.params = t.params;
  for (auto& [c, f] : out) r.factors.push_back(std::move(f));

  if (!s.curved) {
    // First occurrence of each dummy lower, second upper.
    std::set<std::string> seen;
    for (auto& f : r.factors)
      for (auto* list : {&f.derivs, &f.slots})
        for (auto& i : *list) {
          if (taken.contains(i.name)) continue;
          i.var = seen.insert(i.name).second ? Variance::Lower : Variance::Upper;
        }
  }
  return r;
}

}  // namespace

std::optional<Term> canonicalize_term(const Term& input, Dim dim) {
  if (input.coeff == 0) return std::nullopt;
  Term t = input;
  std::sort(t.params.begin(), t.params.end());
  for (const auto& f : t.factors) {
    if (is_constant_head(f.head) && !f.derivs.empty()) return std::nullopt;
  }
  const bool curved = is_curved(t);
  while (contract_once(t, curved)) {
  }
  normalize_kronecker(t, curved);
  if (dim) {
    auto it = std::remove(t.params.begin(), t.params.end(), kDimParam);
    const auto n = t.params.end() - it;
    t.params.erase(it, t.params.end());
    for (std::ptrdiff_t k = 0; k < n; ++k) t.coeff *= *dim;
    if (t.coeff == 0) return std::nullopt;
  }
  for (const auto& f : t.factors) {
    if (f.sym.kind != SymmetryKind::Antisymmetric) continue;
    for (std::size_t a = f.sym.begin; a < f.sym.end; ++a)
      for (std::size_t b = a + 1; b < f.sym.end; ++b)
        if (f.slots[a].name == f.slots[b].name) return std::nullopt;
  }

  Skeleton s = build_skeleton(t, curved);
  SearchState st{t, s, std::nullopt, {}, false};
  search(st, initial_colours(t, s));
  if (st.odd_automorphism) return std::nullopt;
  int sign = 1;
  Term r = relabel(t, s, st.best_label, sign);
  if (sign < 0) r.coeff = -r.coeff;
  return r;
}

std::string term_key(const Term& t) {
  std::string k;
  for (const auto& p : t.params) {
    k += p;
    k += '*';
  }
  k += '|';
  auto idx = [&](const Index& i) {
    k += i.var == Variance::Lower ? '_' : '^';
    k += i.name;
    k += ',';
  };
  for (const auto& f : t.factors) {
    k += f.head;
    if (f.sym.kind != SymmetryKind::None) {
      k += f.sym.kind == SymmetryKind::Symmetric ? 's' : 'a';
      k += std::to_string(f.sym.begin);
      k += std::to_string(f.sym.end);
    }
    k += '{';
    for (const auto& i : f.derivs) idx(i);
    k += "}[";
    for (const auto& i : f.slots) idx(i);
    k += "];";
  }
  return k;
}

namespace {

unsigned thread_budget() {
  if (const char* env = std::getenv("EMT_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

TensorExpr canonicalize(const TensorExpr& e) {
  validate(e);
  // Exact duplicates are common after expansion; merge them up front.
  std::vector<Term> unique;
  {
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& t : e.terms) {
      Term u = t;
      std::sort(u.params.begin(), u.params.end());
      auto [it, fresh] = seen.emplace(term_key(u), unique.size());
      if (fresh) {
        unique.push_back(std::move(u));
      } else {
        unique[it->second].coeff += u.coeff;
      }
    }
  }

  std::vector<std::optional<Term>> done(unique.size());
  const unsigned threads =
      unique.size() < 256 ? 1u
                          : std::min<unsigned>(thread_budget(),
                                               static_cast<unsigned>(unique.size() / 64));
  if (threads <= 1) {
    for (std::size_t i = 0; i < unique.size(); ++i)
      done[i] = canonicalize_term(unique[i], e.dim);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < unique.size(); i += threads)
          done[i] = canonicalize_term(unique[i], e.dim);
      });
    for (auto& th : pool) th.join();
  }

  std::map<std::string, Term> merged;
  for (auto& t : done) {
    if (!t) continue;
    auto key = term_key(*t);
    auto [it, fresh] = merged.emplace(std::move(key), *t);
    if (!fresh) it->second.coeff += t->coeff;
  }
  TensorExpr r{{}, e.dim};
  for (auto& [k, t] : merged)
    if (t.coeff != 0) r.terms.push_back(std::move(t));
  return r;
}

TensorExpr expand(std::span<const TensorExpr> factors) {
  if (factors.empty()) return scalar(1);
  TensorExpr r = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) r = r * factors[i];
  return expand(r);
}

TensorExpr expand(const TensorExpr& e) {
  TensorExpr r{{}, e.dim};
  for (const auto& t : e.terms)
    if (t.coeff != 0) r.terms.push_back(t);
  validate(r);
  return r;
}

TensorExpr align_free_indices(const TensorExpr& a, const TensorExpr& b) {
  if (a.is_zero() || b.is_zero()) return b;
  const auto fa = free_indices(a), fb = free_indices(b);
  if (fa.size() != fb.size()) {
    throw UsageError("free index count differs: " + std::to_string(fa.size()) +
                     " vs " + std::to_string(fb.size()));
  }
  for (std::size_t k = 0; k < fa.size(); ++k) {
    if (fa[k].var != fb[k].var) {
      throw UsageError("free index variance differs at position " +
                       std::to_string(k) + " ('" + fa[k].name + "' vs '" +
                       fb[k].name + "')");
    }
  }
  TensorExpr r = b;
  std::vector<std::string> tmp;
  for (const auto& i : fb) {
    tmp.push_back(fresh_name());
    r = rename_free(r, i.name, tmp.back());
  }
  for (std::size_t k = 0; k < fa.size(); ++k)
    r = rename_free(r, tmp[k], fa[k].name);
  return r;
}

bool equal(const TensorExpr& a, const TensorExpr& b) {
  return canonicalize(a - align_free_indices(a, b)).is_zero();
}

TensorExpr substitute(const TensorExpr& e, const std::string& field,
                      const TensorExpr& rule,
                      std::span<const Index> placeholders) {
  TensorExpr r{{}, e.dim};
  for (const auto& t : e.terms) {
    TensorExpr acc = from_term(Term{t.coeff, t.params, {}});
    acc.dim = e.dim;
    for (const auto& f : t.factors) {
      if (f.head != field) {
        acc = acc * monomial({f});
        continue;
      }
      if (f.slots.size() != placeholders.size()) {
        throw UsageError("substitution for '" + field + "' has " +
                         std::to_string(placeholders.size()) +
                         " placeholders but the field has rank " +
                         std::to_string(f.slots.size()));
      }
      TensorExpr rep = freshen_dummies(rule);
      std::vector<std::string> tmp;
      for (const auto& p : placeholders) {
        tmp.push_back(fresh_name());
        rep = rename_free(rep, p.name, tmp.back());
      }
      for (std::size_t k = 0; k < placeholders.size(); ++k) {
        const Index& slot = f.slots[k];
        if (placeholders[k].var == slot.var) {
          rep = rename_free(rep, tmp[k], slot.name);
        } else {
          rep = rep * monomial({eta_factor({tmp[k], flip(placeholders[k].var)},
                                           slot)});
        }
      }
      for (auto it = f.derivs.rbegin(); it != f.derivs.rend(); ++it)
        rep = differentiate(rep, *it);
      acc = acc * rep;
    }
    r += acc;
  }
  return expand(r);
}

}  // namespace emt
