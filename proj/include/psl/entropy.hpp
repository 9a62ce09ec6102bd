#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "psl/error.hpp"

namespace psl {

/// Shannon entropy of a Bernoulli(q) distribution in bits; H(0) = H(1) = 0.
inline double binary_entropy(double q) {
    if (q <= 0.0 || q >= 1.0) return 0.0;
    return -q * std::log2(q) - (1.0 - q) * std::log2(1.0 - q);
}

/// A group of `count` examples sharing the probability estimate `q`.
struct EntropyGroup {
    double count = 0.0;
    double q = 0.0;
};

/// Count-weighted mean entropy of the groups' estimates.
inline double expected_entropy(std::span<const EntropyGroup> groups, double total) {
    if (!(total > 0.0)) throw InvalidArgument("expected entropy needs a positive total count");
    double sum = 0.0;
    for (const auto& g : groups) {
        if (g.count == 0.0) continue;
        if (!(g.q >= 0.0 && g.q <= 1.0)) throw InvalidArgument("group probability outside [0, 1]");
        sum += g.count / total * binary_entropy(g.q);
    }
    return sum;
}

inline double expected_entropy(std::span<const EntropyGroup> groups) {
    double total = 0.0;
    for (const auto& g : groups) total += g.count;
    return expected_entropy(groups, total);
}

}  // namespace psl
