#include "dxq/node/identifier_generator.hpp"

#include <cstdio>
#include <random>

namespace dxq::node {

IdentifierGenerator::IdentifierGenerator(std::optional<std::uint32_t> seed)
    : state_(seed ? *seed : std::random_device{}())
{
}

protocol::NodeIdentifier IdentifierGenerator::next()
{
    char text[32];
    std::snprintf(text, sizeof text, "http://%08x", static_cast<unsigned>(state_));
    state_ = state_ * 1664525u + 1013904223u;
    return protocol::NodeIdentifier::parse(text);
}

} // namespace dxq::node
