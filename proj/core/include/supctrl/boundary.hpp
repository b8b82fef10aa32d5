#pragma once

#include <string>

#include "supctrl/diffusion.hpp"
#include "supctrl/quadrature.hpp"

namespace supctrl {

enum class BoundaryType { natural, exit, entrance, regular };

std::string to_string(BoundaryType t);

/// Feller integral outcomes for one endpoint: Sigma = int S'(t) M(t, c] and
/// N = int m'(t) S(t, c] (Fubini forms of the classical tests).
struct FellerTests {
    TailBehavior sigma = TailBehavior::ambiguous;
    TailBehavior n = TailBehavior::ambiguous;
};

struct BoundaryClassification {
    BoundaryType lower = BoundaryType::natural;
    BoundaryType upper = BoundaryType::natural;
    FellerTests lower_tests;
    FellerTests upper_tests;

    /// 0 is reached in finite time with positive probability.
    bool lower_attainable() const noexcept {
        return lower == BoundaryType::regular || lower == BoundaryType::exit;
    }
};

struct ClassificationSettings {
    int decades = 10;
    int nodes_per_decade = 200;
};

/// Classifies 0 and b by evaluating the Feller integrals decade by decade
/// toward each endpoint. Throws UnsupportedModelError when b is not natural
/// and NumericError when a test is inconclusive.
BoundaryClassification classify_boundaries(const DiffusionSpec& spec, const ClassificationSettings& s = {});

/// Classification without the natural-upper requirement (diagnostics).
BoundaryClassification feller_classification(const DiffusionSpec& spec, const ClassificationSettings& s = {});

}  // namespace supctrl
