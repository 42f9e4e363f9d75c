#pragma once

#include <cstddef>
#include <vector>

#include "linimed/ridge.hpp"

namespace linimed {

struct Arm {
    int id = 0;
    Vector x;
};

// The decision set offered at one round. Ids are distinct within a round.
struct ArmSet {
    std::size_t round = 0;
    std::vector<Arm> arms;

    std::size_t size() const { return arms.size(); }
    bool empty() const { return arms.empty(); }
    std::size_t dim() const { return arms.empty() ? 0 : static_cast<std::size_t>(arms.front().x.size()); }
};

}  // namespace linimed
