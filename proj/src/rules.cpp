#include "treecert/rules.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "json_util.hpp"
#include "treecert/text.hpp"

namespace treecert {

bool Predicate::matches(double v) const {
  if (is_codeset())
    return std::binary_search(codes.begin(), codes.end(),
                              static_cast<long long>(v)) &&
           v == std::floor(v);
  return lo < v && v <= hi;
}

bool Rule::matches(const Example& x) const {
  for (const Predicate& p : antecedent)
    if (!p.matches(x.value(p.feature))) return false;
  return true;
}

namespace {

void collect_paths(const Tree& tree, int node_id, int target,
                   std::vector<Predicate>& path, std::vector<Rule>& out) {
  const Node& n = tree.node(node_id);
  if (n.is_leaf()) {
    if (n.label == target) {
      Rule rule;
      rule.antecedent = path;
      rule.consequent = target;
      rule.leaf_id = node_id;
      out.push_back(std::move(rule));
    }
    return;
  }
  Predicate left;
  left.feature = n.feature;
  left.hi = n.threshold;
  path.push_back(left);
  collect_paths(tree, n.left, target, path, out);
  path.pop_back();

  Predicate right;
  right.feature = n.feature;
  right.lo = n.threshold;
  path.push_back(right);
  collect_paths(tree, n.right, target, path, out);
  path.pop_back();
}

}  // namespace

std::vector<Rule> extract_rules(const Tree& tree, int target) {
  if (tree.mode != TreeMode::classifier)
    throw ModeError("rules require classifier mode");
  std::vector<Rule> rules;
  std::vector<Predicate> path;
  collect_paths(tree, tree.root, target, path, rules);
  return rules;
}

void annotate_support(std::vector<Rule>& rules, const Dataset& data) {
  for (Rule& rule : rules) {
    long long support = 0, hits = 0;
    for (const Example& ex : data.examples) {
      if (!rule.matches(ex)) continue;
      ++support;
      if (ex.label == rule.consequent) ++hits;
    }
    rule.support = support;
    rule.confidence =
        support > 0 ? static_cast<double>(hits) / static_cast<double>(support)
                    : 0.0;
  }
}

std::optional<Rule> simplify(const Rule& rule, const DatasetSchema* schema) {
  // Intersect all intervals per feature, keeping first-occurrence order.
  std::vector<int> order;
  std::map<int, Predicate> merged;
  for (const Predicate& p : rule.antecedent) {
    auto [it, inserted] = merged.emplace(p.feature, p);
    if (inserted) {
      order.push_back(p.feature);
      continue;
    }
    it->second.lo = std::max(it->second.lo, p.lo);
    it->second.hi = std::min(it->second.hi, p.hi);
  }

  Rule out;
  out.consequent = rule.consequent;
  out.leaf_id = rule.leaf_id;
  out.support = rule.support;
  out.confidence = rule.confidence;
  for (int feature : order) {
    Predicate p = merged[feature];
    if (!(p.lo < p.hi)) return std::nullopt;  // contradictory path
    const SchemaFeature* info =
        schema != nullptr &&
                feature < static_cast<int>(schema->features.size())
            ? &schema->features[static_cast<size_t>(feature)]
            : nullptr;
    if (info != nullptr && info->integer_valued && info->codes.empty()) {
      // Integer-valued feature without a codebook: drop paths whose
      // interval holds no integer at all.
      if (!(std::floor(p.hi) > p.lo)) return std::nullopt;
    }
    if (info != nullptr && !info->codes.empty()) {
      Predicate codeset;
      codeset.feature = feature;
      for (const auto& [code, name] : info->codes) {
        const double v = static_cast<double>(code);
        if (p.lo < v && v <= p.hi) codeset.codes.push_back(code);
      }
      if (codeset.codes.empty()) return std::nullopt;
      // A predicate spanning the whole codebook constrains nothing.
      if (codeset.codes.size() == info->codes.size()) continue;
      out.antecedent.push_back(std::move(codeset));
      continue;
    }
    out.antecedent.push_back(p);
  }
  return out;
}

namespace {

std::string feature_symbol(int feature, const DatasetSchema* schema,
                           std::vector<std::string>* warnings) {
  if (schema != nullptr && feature >= 0 &&
      feature < static_cast<int>(schema->features.size()) &&
      !schema->features[static_cast<size_t>(feature)].name.empty())
    return schema->features[static_cast<size_t>(feature)].name;
  if (warnings != nullptr)
    warnings->push_back("feature " + std::to_string(feature) +
                        " missing from schema; rendered by index");
  return "f" + std::to_string(feature);
}

bool is_integer_feature(int feature, const DatasetSchema* schema) {
  return schema != nullptr && feature >= 0 &&
         feature < static_cast<int>(schema->features.size()) &&
         schema->features[static_cast<size_t>(feature)].integer_valued;
}

std::string render_predicate(const Predicate& p, const DatasetSchema* schema,
                             std::vector<std::string>* warnings) {
  const std::string name = feature_symbol(p.feature, schema, warnings);
  if (p.is_codeset()) {
    std::vector<std::string> atoms;
    for (long long code : p.codes)
      atoms.push_back("(" + name + "⇒" + name + "_" +
                      std::to_string(code) + ")");
    if (atoms.size() == 1) return atoms.front();
    std::string joined = atoms.front();
    for (size_t i = 1; i < atoms.size(); ++i) joined += " ∨ " + atoms[i];
    return "(" + joined + ")";
  }

  const bool integral = is_integer_feature(p.feature, schema);
  const bool has_lo = p.lo != -kInf;
  const bool has_hi = p.hi != kInf;
  if (has_lo && has_hi) {
    if (integral) {
      const long long a = static_cast<long long>(std::floor(p.lo)) + 1;
      const long long b = static_cast<long long>(std::floor(p.hi));
      if (a == b) return "(" + name + " = " + std::to_string(a) + ")";
      return "(" + std::to_string(a) + " ≤ " + name + " ≤ " +
             std::to_string(b) + ")";
    }
    return "(" + format_double(p.lo) + " < " + name + " ≤ " +
           format_double(p.hi) + ")";
  }
  if (has_hi) {
    if (integral)
      return "(" + name + " ≤ " +
             std::to_string(static_cast<long long>(std::floor(p.hi))) + ")";
    return "(" + name + " ≤ " + format_double(p.hi) + ")";
  }
  if (has_lo) {
    if (integral)
      return "(" + name + " ≥ " +
             std::to_string(static_cast<long long>(std::floor(p.lo)) + 1) +
             ")";
    return "(" + name + " > " + format_double(p.lo) + ")";
  }
  return "true";
}

}  // namespace

std::string render(const Rule& rule, const DatasetSchema* schema,
                   std::vector<std::string>* warnings) {
  std::string antecedent;
  if (rule.antecedent.empty()) {
    antecedent = "true";
  } else {
    for (size_t i = 0; i < rule.antecedent.size(); ++i) {
      if (i > 0) antecedent += " ∧ ";
      antecedent += render_predicate(rule.antecedent[i], schema, warnings);
    }
  }
  const std::string consequent =
      rule.consequent == 1 ? "(label⇒label_yes)" : "(label⇒label_no)";
  return antecedent + " ⇒ " + consequent;
}

std::string export_rules(const std::vector<Rule>& rules,
                         const DatasetSchema* schema) {
  using json = nlohmann::json;
  json doc = json::array();
  for (const Rule& rule : rules) {
    json jr;
    jr["consequent"] = rule.consequent;
    jr["leaf"] = rule.leaf_id;
    jr["support"] = rule.support;
    jr["confidence"] = rule.confidence;
    jr["rendered"] = render(rule, schema);
    json atoms = json::array();
    for (const Predicate& p : rule.antecedent) {
      json ja;
      ja["feature"] = p.feature;
      if (p.is_codeset()) {
        ja["codes"] = p.codes;
      } else {
        if (p.lo != -kInf) ja["gt"] = p.lo;
        if (p.hi != kInf) ja["le"] = p.hi;
      }
      atoms.push_back(std::move(ja));
    }
    jr["antecedent"] = std::move(atoms);
    doc.push_back(std::move(jr));
  }
  return doc.dump(2) + "\n";
}

}  // namespace treecert
