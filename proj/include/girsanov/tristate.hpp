#pragma once

#include <string>

namespace girsanov {

// ============================================================================
// Three-valued verdict logic
//
// Every analytic decision in this library is one of Yes / No / Inconclusive.
// Numeric evidence may be too weak to decide either way; in that case the
// verdict must say so instead of guessing.  Combinators follow strong Kleene
// logic: a conjunction is No as soon as one input is No, Yes only when all
// inputs are Yes.
// ============================================================================

enum class TriState { Yes, No, Inconclusive };

constexpr TriState tri_not(TriState a) {
    switch (a) {
        case TriState::Yes: return TriState::No;
        case TriState::No: return TriState::Yes;
        default: return TriState::Inconclusive;
    }
}

constexpr TriState tri_and(TriState a, TriState b) {
    if (a == TriState::No || b == TriState::No) return TriState::No;
    if (a == TriState::Yes && b == TriState::Yes) return TriState::Yes;
    return TriState::Inconclusive;
}

constexpr TriState tri_or(TriState a, TriState b) {
    if (a == TriState::Yes || b == TriState::Yes) return TriState::Yes;
    if (a == TriState::No && b == TriState::No) return TriState::No;
    return TriState::Inconclusive;
}

constexpr TriState tri_or(TriState a, TriState b, TriState c) {
    return tri_or(tri_or(a, b), c);
}

constexpr TriState tri_and(TriState a, TriState b, TriState c) {
    return tri_and(tri_and(a, b), c);
}

constexpr bool is_decisive(TriState a) { return a != TriState::Inconclusive; }

inline std::string to_string(TriState a) {
    switch (a) {
        case TriState::Yes: return "Yes";
        case TriState::No: return "No";
        default: return "Inconclusive";
    }
}

}  // namespace girsanov
