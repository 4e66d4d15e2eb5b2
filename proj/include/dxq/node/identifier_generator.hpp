#pragma once

#include "dxq/protocol/identity.hpp"

#include <cstdint>
#include <optional>

namespace dxq::node {

/// Client identifiers of the form `http://` + 8 lower-case hex digits.
/// Backed by a full-period 32-bit LCG, so no value repeats before 2^32
/// draws. The first identifier is the seed itself.
class IdentifierGenerator {
public:
    /// Unseeded generators start from a random state.
    explicit IdentifierGenerator(std::optional<std::uint32_t> seed = std::nullopt);

    protocol::NodeIdentifier next();

private:
    std::uint32_t state_;
};

} // namespace dxq::node
