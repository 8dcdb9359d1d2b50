#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "mipll/errors.hpp"

namespace mipll {

// A partial label is whatever the transition natively outputs: an integer
// for max/sum style transitions, a node name for hierarchies.
using PartialLabel = std::variant<std::int64_t, std::string>;

std::string partial_label_to_string(const PartialLabel& s);

enum class TransitionKind { Max, Sum, Hierarchy, Table };

// Rooted tree whose leaves are the hidden classes. Class j is the j-th leaf
// in lexicographic name order.
struct HierarchyTree {
    std::vector<std::string> names;            // node id -> name
    std::vector<int> parent;                   // node id -> parent id, -1 at root
    std::vector<std::vector<int>> children;    // node id -> child ids
    std::vector<int> leaf_nodes;               // class j -> node id

    int lowest_common_ancestor(int a, int b) const;

    // Build from parent -> children adjacency, e.g. parsed from JSON.
    static HierarchyTree from_edges(const std::vector<std::pair<std::string, std::vector<std::string>>>& edges);
};

// The transition function sigma: [c]^M -> S together with its partial-label
// space. The space is canonicalized as the sorted list of native outputs;
// histogram index j always refers to that order. Immutable after
// construction and safe to share across threads.
class TransitionSpec {
public:
    TransitionSpec() = default;  // placeholder; build real specs via the factories

    static TransitionSpec max_of(int arity, int num_classes);
    static TransitionSpec sum_of(int arity, int num_classes);
    static TransitionSpec hierarchy(HierarchyTree tree);  // arity fixed to 2
    static TransitionSpec table(int arity, int num_classes,
                                const std::vector<std::pair<std::vector<int>, PartialLabel>>& entries);

    TransitionKind kind() const { return kind_; }
    int arity() const { return arity_; }
    int num_classes() const { return num_classes_; }

    const std::vector<PartialLabel>& partial_space() const { return space_; }
    int num_partial_labels() const { return static_cast<int>(space_.size()); }

    // Canonical index of s in the partial-label space.
    int partial_index(const PartialLabel& s) const;

    PartialLabel eval(const std::vector<int>& labels) const;

    // Hierarchy only: class index <-> leaf name.
    const std::vector<std::string>& class_names() const { return class_names_; }
    int class_index(const std::string& name) const;

    const HierarchyTree& tree() const { return tree_; }

    // Table only: entries in lexicographic label-vector order.
    const std::vector<PartialLabel>& table_entries() const { return table_; }

private:
    void build_space();
    void check_labels(const std::vector<int>& labels) const;

    TransitionKind kind_ = TransitionKind::Max;
    int arity_ = 1;
    int num_classes_ = 1;
    std::vector<PartialLabel> space_;
    std::map<PartialLabel, int> space_index_;

    HierarchyTree tree_;                   // Hierarchy
    std::vector<std::string> class_names_; // Hierarchy
    std::vector<PartialLabel> table_;      // Table, indexed by mixed-radix label vector
};

// Pre-image machinery for sigma. Counts are always available in closed
// form; materialization is gated by a vector cap.
class PreimageIndex {
public:
    static constexpr std::int64_t kDefaultCap = 1'000'000;

    explicit PreimageIndex(const TransitionSpec& spec, std::int64_t materialize_cap = kDefaultCap);

    std::int64_t count(const PartialLabel& s) const;
    std::int64_t count_by_index(int partial_index) const { return counts_[partial_index]; }

    // All label vectors mapping to s, in lexicographic order.
    std::vector<std::vector<int>> enumerate(const PartialLabel& s) const;

    // Visit the pre-image lexicographically without materializing it.
    void for_each(const PartialLabel& s, const std::function<void(const std::vector<int>&)>& fn) const;

    std::int64_t materialize_cap() const { return cap_; }
    const TransitionSpec& spec() const { return spec_; }

private:
    TransitionSpec spec_;
    std::int64_t cap_;
    std::vector<std::int64_t> counts_;
};

struct DnfAtom {
    int slot;   // instance position i in [0, M)
    int label;  // class j in [0, c)
};

// DNF formula Phi_l attached to one partial sample: one conjunction per
// pre-image vector, one atom per instance slot.
struct DnfFormula {
    int sample_index = 0;
    int arity = 0;
    int num_classes = 0;
    std::vector<std::vector<DnfAtom>> conjunctions;
};

DnfFormula build_dnf(const TransitionSpec& spec, const PartialLabel& s, int sample_index,
                     std::int64_t materialize_cap = PreimageIndex::kDefaultCap);

}  // namespace mipll
