#include "mipll/transition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mipll {

std::string partial_label_to_string(const PartialLabel& s) {
    if (std::holds_alternative<std::int64_t>(s)) return std::to_string(std::get<std::int64_t>(s));
    return std::get<std::string>(s);
}

int HierarchyTree::lowest_common_ancestor(int a, int b) const {
    auto depth = [&](int n) {
        int d = 0;
        while (parent[n] >= 0) {
            n = parent[n];
            ++d;
        }
        return d;
    };
    int da = depth(a), db = depth(b);
    while (da > db) {
        a = parent[a];
        --da;
    }
    while (db > da) {
        b = parent[b];
        --db;
    }
    while (a != b) {
        a = parent[a];
        b = parent[b];
    }
    return a;
}

HierarchyTree HierarchyTree::from_edges(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& edges) {
    HierarchyTree t;
    std::map<std::string, int> id_of;
    auto intern = [&](const std::string& name) {
        auto it = id_of.find(name);
        if (it != id_of.end()) return it->second;
        int id = static_cast<int>(t.names.size());
        id_of.emplace(name, id);
        t.names.push_back(name);
        t.parent.push_back(-1);
        t.children.emplace_back();
        return id;
    };
    for (const auto& [parent_name, child_names] : edges) {
        int p = intern(parent_name);
        for (const auto& child : child_names) {
            int ch = intern(child);
            require(t.parent[ch] == -1, ErrorCode::InvalidArgument,
                    "hierarchy node '" + child + "' has two parents");
            t.parent[ch] = p;
            t.children[p].push_back(ch);
        }
    }
    int roots = 0;
    for (std::size_t i = 0; i < t.names.size(); ++i)
        if (t.parent[i] < 0) ++roots;
    require(roots == 1, ErrorCode::InvalidArgument, "hierarchy must have exactly one root");

    std::vector<std::string> leaf_names;
    for (std::size_t i = 0; i < t.names.size(); ++i)
        if (t.children[i].empty()) leaf_names.push_back(t.names[i]);
    std::sort(leaf_names.begin(), leaf_names.end());
    for (const auto& name : leaf_names) t.leaf_nodes.push_back(id_of.at(name));
    return t;
}

void TransitionSpec::check_labels(const std::vector<int>& labels) const {
    require(static_cast<int>(labels.size()) == arity_, ErrorCode::InvalidLabel,
            "label vector has wrong arity");
    for (int y : labels)
        require(y >= 0 && y < num_classes_, ErrorCode::InvalidLabel,
                "label " + std::to_string(y) + " out of range [0," + std::to_string(num_classes_) + ")");
}

void TransitionSpec::build_space() {
    std::sort(space_.begin(), space_.end());
    space_.erase(std::unique(space_.begin(), space_.end()), space_.end());
    space_index_.clear();
    for (std::size_t i = 0; i < space_.size(); ++i) space_index_.emplace(space_[i], static_cast<int>(i));
}

TransitionSpec TransitionSpec::max_of(int arity, int num_classes) {
    require(arity >= 1 && num_classes >= 1, ErrorCode::InvalidArgument, "max transition needs M >= 1, c >= 1");
    TransitionSpec s;
    s.kind_ = TransitionKind::Max;
    s.arity_ = arity;
    s.num_classes_ = num_classes;
    for (int v = 0; v < num_classes; ++v) s.space_.emplace_back(static_cast<std::int64_t>(v));
    s.build_space();
    return s;
}

TransitionSpec TransitionSpec::sum_of(int arity, int num_classes) {
    require(arity >= 1 && num_classes >= 1, ErrorCode::InvalidArgument, "sum transition needs M >= 1, c >= 1");
    TransitionSpec s;
    s.kind_ = TransitionKind::Sum;
    s.arity_ = arity;
    s.num_classes_ = num_classes;
    for (int v = 0; v <= arity * (num_classes - 1); ++v) s.space_.emplace_back(static_cast<std::int64_t>(v));
    s.build_space();
    return s;
}

TransitionSpec TransitionSpec::hierarchy(HierarchyTree tree) {
    require(!tree.leaf_nodes.empty(), ErrorCode::InvalidArgument, "hierarchy has no leaves");
    TransitionSpec s;
    s.kind_ = TransitionKind::Hierarchy;
    s.arity_ = 2;
    s.num_classes_ = static_cast<int>(tree.leaf_nodes.size());
    s.tree_ = std::move(tree);
    for (int leaf : s.tree_.leaf_nodes) s.class_names_.push_back(s.tree_.names[leaf]);
    // The reachable partial labels are the LCAs of all leaf pairs.
    for (int a = 0; a < s.num_classes_; ++a)
        for (int b = 0; b < s.num_classes_; ++b) {
            int lca = s.tree_.lowest_common_ancestor(s.tree_.leaf_nodes[a], s.tree_.leaf_nodes[b]);
            s.space_.emplace_back(s.tree_.names[lca]);
        }
    s.build_space();
    return s;
}

TransitionSpec TransitionSpec::table(int arity, int num_classes,
                                     const std::vector<std::pair<std::vector<int>, PartialLabel>>& entries) {
    require(arity >= 1 && num_classes >= 1, ErrorCode::InvalidArgument, "table transition needs M >= 1, c >= 1");
    double total = std::pow(static_cast<double>(num_classes), arity);
    require(total <= 1e6, ErrorCode::InvalidArgument, "table transition admitted only for c^M <= 10^6");
    std::int64_t n = 1;
    for (int i = 0; i < arity; ++i) n *= num_classes;

    TransitionSpec s;
    s.kind_ = TransitionKind::Table;
    s.arity_ = arity;
    s.num_classes_ = num_classes;
    s.table_.assign(static_cast<std::size_t>(n), PartialLabel{});
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (const auto& [labels, out] : entries) {
        s.check_labels(labels);
        std::int64_t idx = 0;
        for (int y : labels) idx = idx * num_classes + y;
        require(!seen[idx], ErrorCode::InvalidArgument, "duplicate table entry");
        seen[idx] = true;
        s.table_[idx] = out;
    }
    for (std::int64_t i = 0; i < n; ++i)
        require(seen[i], ErrorCode::InvalidArgument, "table transition must be total over [c]^M");
    for (const auto& out : s.table_) s.space_.push_back(out);
    s.build_space();
    return s;
}

int TransitionSpec::partial_index(const PartialLabel& s) const {
    auto it = space_index_.find(s);
    require(it != space_index_.end(), ErrorCode::InvalidPartialLabel,
            "unknown partial label '" + partial_label_to_string(s) + "'");
    return it->second;
}

int TransitionSpec::class_index(const std::string& name) const {
    for (std::size_t i = 0; i < class_names_.size(); ++i)
        if (class_names_[i] == name) return static_cast<int>(i);
    fail(ErrorCode::InvalidLabel, "unknown class name '" + name + "'");
}

PartialLabel TransitionSpec::eval(const std::vector<int>& labels) const {
    check_labels(labels);
    switch (kind_) {
        case TransitionKind::Max: {
            int m = *std::max_element(labels.begin(), labels.end());
            return static_cast<std::int64_t>(m);
        }
        case TransitionKind::Sum: {
            std::int64_t s = std::accumulate(labels.begin(), labels.end(), std::int64_t{0});
            return s;
        }
        case TransitionKind::Hierarchy: {
            int lca = tree_.lowest_common_ancestor(tree_.leaf_nodes[labels[0]], tree_.leaf_nodes[labels[1]]);
            return tree_.names[lca];
        }
        case TransitionKind::Table: {
            std::int64_t idx = 0;
            for (int y : labels) idx = idx * num_classes_ + y;
            return table_[idx];
        }
    }
    fail(ErrorCode::InvalidArgument, "unreachable transition kind");
}

namespace {

std::int64_t ipow(std::int64_t base, int exp) {
    std::int64_t v = 1;
    for (int i = 0; i < exp; ++i) v *= base;
    return v;
}

// Number of vectors in [0,c)^M with a given sum, for every sum value.
std::vector<std::int64_t> sum_counts(int arity, int c) {
    std::vector<std::int64_t> counts{1};
    for (int i = 0; i < arity; ++i) {
        std::vector<std::int64_t> next(counts.size() + c - 1, 0);
        for (std::size_t s = 0; s < counts.size(); ++s)
            for (int y = 0; y < c; ++y) next[s + y] += counts[s];
        counts = std::move(next);
    }
    return counts;
}

// Lexicographic enumeration of {y : max(y) == target}.
void enum_max(int arity, int target, std::vector<int>& prefix, bool hit,
              const std::function<void(const std::vector<int>&)>& fn) {
    if (static_cast<int>(prefix.size()) == arity) {
        if (hit) fn(prefix);
        return;
    }
    int remaining = arity - static_cast<int>(prefix.size());
    for (int y = 0; y <= target; ++y) {
        if (!hit && y < target && remaining == 1) continue;  // cannot reach the target any more
        prefix.push_back(y);
        enum_max(arity, target, prefix, hit || y == target, fn);
        prefix.pop_back();
    }
}

// Lexicographic enumeration of {y : sum(y) == target}.
void enum_sum(int arity, int c, int target, std::vector<int>& prefix, int acc,
              const std::function<void(const std::vector<int>&)>& fn) {
    int remaining = arity - static_cast<int>(prefix.size());
    if (remaining == 0) {
        if (acc == target) fn(prefix);
        return;
    }
    for (int y = 0; y < c; ++y) {
        int lo = acc + y;                        // all later slots at 0
        int hi = acc + y + (remaining - 1) * (c - 1);  // all later slots maxed
        if (lo > target || hi < target) continue;
        prefix.push_back(y);
        enum_sum(arity, c, target, prefix, acc + y, fn);
        prefix.pop_back();
    }
}

}  // namespace

PreimageIndex::PreimageIndex(const TransitionSpec& spec, std::int64_t materialize_cap)
    : spec_(spec), cap_(materialize_cap) {
    const int cs = spec_.num_partial_labels();
    counts_.assign(cs, 0);
    switch (spec_.kind()) {
        case TransitionKind::Max:
            for (int s = 0; s < cs; ++s)
                counts_[s] = ipow(s + 1, spec_.arity()) - ipow(s, spec_.arity());
            break;
        case TransitionKind::Sum: {
            auto counts = sum_counts(spec_.arity(), spec_.num_classes());
            for (int s = 0; s < cs; ++s) counts_[s] = counts[s];
            break;
        }
        case TransitionKind::Hierarchy: {
            // Ordered leaf pairs whose LCA is the node: pairs under the node
            // minus pairs falling inside a single child subtree.
            const auto& tree = spec_.tree();
            std::vector<std::int64_t> leaves_below(tree.names.size(), 0);
            for (int leaf : tree.leaf_nodes) {
                int n = leaf;
                while (n >= 0) {
                    ++leaves_below[n];
                    n = tree.parent[n];
                }
            }
            for (std::size_t n = 0; n < tree.names.size(); ++n) {
                std::int64_t pairs = leaves_below[n] * leaves_below[n];
                for (int ch : tree.children[n]) pairs -= leaves_below[ch] * leaves_below[ch];
                if (tree.children[n].empty()) pairs = 1;  // the (leaf, leaf) pair
                auto it = std::find(spec_.partial_space().begin(), spec_.partial_space().end(),
                                    PartialLabel{tree.names[n]});
                if (it != spec_.partial_space().end())
                    counts_[it - spec_.partial_space().begin()] = pairs;
            }
            break;
        }
        case TransitionKind::Table:
            for (const auto& out : spec_.table_entries()) ++counts_[spec_.partial_index(out)];
            break;
    }
}

std::int64_t PreimageIndex::count(const PartialLabel& s) const {
    return counts_[spec_.partial_index(s)];
}

void PreimageIndex::for_each(const PartialLabel& s,
                             const std::function<void(const std::vector<int>&)>& fn) const {
    const int idx = spec_.partial_index(s);
    std::vector<int> prefix;
    prefix.reserve(spec_.arity());
    switch (spec_.kind()) {
        case TransitionKind::Max:
            enum_max(spec_.arity(), static_cast<int>(std::get<std::int64_t>(spec_.partial_space()[idx])),
                     prefix, false, fn);
            return;
        case TransitionKind::Sum:
            enum_sum(spec_.arity(), spec_.num_classes(),
                     static_cast<int>(std::get<std::int64_t>(spec_.partial_space()[idx])), prefix, 0, fn);
            return;
        case TransitionKind::Hierarchy: {
            const int c = spec_.num_classes();
            std::vector<int> pair(2);
            for (int a = 0; a < c; ++a)
                for (int b = 0; b < c; ++b) {
                    pair[0] = a;
                    pair[1] = b;
                    if (spec_.eval(pair) == s) fn(pair);
                }
            return;
        }
        case TransitionKind::Table: {
            const int c = spec_.num_classes();
            const int m = spec_.arity();
            std::vector<int> y(m, 0);
            const auto& tab = spec_.table_entries();
            for (std::size_t flat = 0; flat < tab.size(); ++flat) {
                if (tab[flat] == s) {
                    std::size_t rem = flat;
                    for (int i = m - 1; i >= 0; --i) {
                        y[i] = static_cast<int>(rem % c);
                        rem /= c;
                    }
                    fn(y);
                }
            }
            return;
        }
    }
}

std::vector<std::vector<int>> PreimageIndex::enumerate(const PartialLabel& s) const {
    std::int64_t n = count(s);
    require(n <= cap_, ErrorCode::PreimageTooLarge,
            "pre-image of '" + partial_label_to_string(s) + "' has " + std::to_string(n) +
                " vectors, above the cap of " + std::to_string(cap_));
    std::vector<std::vector<int>> out;
    out.reserve(static_cast<std::size_t>(n));
    for_each(s, [&](const std::vector<int>& y) { out.push_back(y); });
    return out;
}

DnfFormula build_dnf(const TransitionSpec& spec, const PartialLabel& s, int sample_index,
                     std::int64_t materialize_cap) {
    PreimageIndex index(spec, materialize_cap);
    DnfFormula formula;
    formula.sample_index = sample_index;
    formula.arity = spec.arity();
    formula.num_classes = spec.num_classes();
    for (const auto& y : index.enumerate(s)) {
        std::vector<DnfAtom> conj;
        conj.reserve(y.size());
        for (std::size_t i = 0; i < y.size(); ++i)
            conj.push_back(DnfAtom{static_cast<int>(i), y[i]});
        formula.conjunctions.push_back(std::move(conj));
    }
    return formula;
}

}  // namespace mipll
