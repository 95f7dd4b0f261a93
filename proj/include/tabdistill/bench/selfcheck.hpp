#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace tabdistill::bench {

struct SelfCheckResult {
    std::string name;
    std::size_t checked = 0;  // parameter entries perturbed
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

// Finite-difference checks of the four training objectives on small
// instances (at most 20 checked entries each): autoencoder reconstruction,
// supervised fine-tuning, KIP through the ridge solve (tolerance 1e-3) and
// gradient matching (tolerance 1e-4 for the others).
std::vector<SelfCheckResult> gradient_self_check(std::uint64_t seed);

}  // namespace tabdistill::bench
