// Training-data ordering strategies: uniform shuffling vs a curriculum that
// presents cases in order of increasing motion severity. Both visit every
// case exactly once per epoch.
#pragma once

#include <string>
#include <vector>

#include "mrseg/errors.hpp"
#include "mrseg/rng.hpp"
#include "mrseg/tensor.hpp"

namespace mrseg {

enum class OrderingStrategy { Shuffled, Curriculum };

inline const char* to_string(OrderingStrategy s) {
    return s == OrderingStrategy::Shuffled ? "shuffled" : "curriculum";
}

inline OrderingStrategy strategy_from_string(const std::string& s) {
    if (s == "shuffled") return OrderingStrategy::Shuffled;
    if (s == "curriculum") return OrderingStrategy::Curriculum;
    throw ValidationError("unknown ordering strategy: " + s);
}

// Returns the epoch's presentation order as indices into `cases`.
// Shuffled: one uniform permutation. Curriculum: minimal, mild, moderate,
// severe blocks, each block independently shuffled per epoch. The category
// ordering is re-applied every epoch, so epoch semantics match shuffled
// training exactly.
template <typename Case>
std::vector<int> order_epoch(const std::vector<Case>& cases, OrderingStrategy strategy, int epoch,
                             std::uint64_t seed) {
    Pcg32 rng = Pcg32::derive(seed, 0x0e70c000ULL + static_cast<std::uint64_t>(epoch));
    std::vector<int> idx(cases.size());
    for (std::size_t i = 0; i < cases.size(); ++i) idx[i] = static_cast<int>(i);

    for (const auto& c : cases) {
        if (!c.severity) throw ValidationError("order_epoch: case without severity");
    }

    if (strategy == OrderingStrategy::Shuffled) {
        rng.shuffle(idx.data(), idx.size());
        return idx;
    }
    std::vector<int> out;
    out.reserve(cases.size());
    for (int cat = 0; cat < 4; ++cat) {
        std::vector<int> group;
        for (int i : idx) {
            if (static_cast<int>(*cases[i].severity) == cat) group.push_back(i);
        }
        rng.shuffle(group.data(), group.size());
        out.insert(out.end(), group.begin(), group.end());
    }
    return out;
}

}  // namespace mrseg
