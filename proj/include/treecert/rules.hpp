#pragma once

#include <optional>
#include <string>
#include <vector>

#include "treecert/data_io.hpp"
#include "treecert/model.hpp"

namespace treecert {

/// One conjunct of a rule antecedent. Interval predicates constrain a
/// feature to (lo, hi]; codeset predicates restrict an integer-coded
/// feature to an explicit set of codes.
struct Predicate {
  int feature = -1;
  double lo = -kInf;
  double hi = kInf;
  std::vector<long long> codes;  // sorted; nonempty selects the codeset form

  bool is_codeset() const { return !codes.empty(); }
  bool matches(double v) const;

  bool operator==(const Predicate&) const = default;
};

/// Conjunction of predicates implying a class label, one per matching leaf.
struct Rule {
  std::vector<Predicate> antecedent;
  int consequent = 0;
  int leaf_id = -1;
  long long support = 0;     // training examples satisfying the antecedent
  double confidence = 0.0;   // fraction of support carrying the consequent

  bool matches(const Example& x) const;
};

/// One rule per leaf labeled `target`: the conjunction of branch conditions
/// along the root-to-leaf path (left edges contribute feature <= threshold,
/// right edges feature > threshold). Returns an empty list when no leaf
/// carries the target label.
std::vector<Rule> extract_rules(const Tree& tree, int target);

/// Fill in support and confidence from a training set.
void annotate_support(std::vector<Rule>& rules, const Dataset& data);

/// Merge per-feature predicates into single intervals; rewrite intervals
/// over features with a schema codebook as codeset predicates. Returns
/// nullopt when the path is contradictory (empty interval or codeset).
std::optional<Rule> simplify(const Rule& rule,
                             const DatasetSchema* schema = nullptr);

/// Implication-logic text, e.g.
///   ((pba⇒pba_0) ∨ (pba⇒pba_1)) ∧ (vno ≥ 2) ⇒ (label⇒label_yes)
/// Features absent from the schema render by index ("f3") and add a
/// warning.
std::string render(const Rule& rule, const DatasetSchema* schema = nullptr,
                   std::vector<std::string>* warnings = nullptr);

/// Rules plus rendered strings as a deterministic JSON document.
std::string export_rules(const std::vector<Rule>& rules,
                         const DatasetSchema* schema = nullptr);

}  // namespace treecert
