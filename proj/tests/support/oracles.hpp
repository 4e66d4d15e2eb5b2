#pragma once

#include "dxq/xml/node.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace dxq::testing {

inline std::string start_tag(const xml::Node& e)
{
    std::string out = "<" + e.name();
    for (const auto& a : e.attributes())
        out += " " + a.name + "=\"" + xml::escape_attribute(a.value) + "\"";
    return out + ">";
}

/// Ordered set union of strings: first occurrence wins.
inline void add_unique(std::vector<std::string>& into, const std::string& item)
{
    if (std::find(into.begin(), into.end(), item) == into.end())
        into.push_back(item);
}

/// Brute-force remove-duplicates for Depth 1 and 2 over documents with a
/// common root, working only on serialized strings.
inline std::string dedup_oracle(const std::vector<xml::Node>& roots, int depth)
{
    const auto& root = roots.front();
    // Each slot is either a grouping start tag (depth 2) or a leaf.
    struct Slot {
        bool group;
        std::string key;
        std::vector<std::string> leaves;
    };
    std::vector<Slot> slots;
    for (const auto& r : roots) {
        for (const auto& child : r.children()) {
            if (depth == 2 && child.is_element()) {
                auto key = start_tag(child);
                auto it = std::find_if(slots.begin(), slots.end(), [&](const Slot& s) { return s.group && s.key == key; });
                if (it == slots.end()) {
                    slots.push_back({true, key, {}});
                    it = slots.end() - 1;
                }
                for (const auto& g : child.children())
                    add_unique(it->leaves, xml::serialize(g));
                continue;
            }
            auto leaf = xml::serialize(child);
            auto seen = std::find_if(slots.begin(), slots.end(), [&](const Slot& s) { return !s.group && s.key == leaf; });
            if (seen == slots.end())
                slots.push_back({false, leaf, {}});
        }
    }

    std::string body;
    for (const auto& s : slots) {
        if (!s.group) {
            body += s.key;
            continue;
        }
        std::string inner;
        for (const auto& l : s.leaves)
            inner += l;
        auto tag = s.key;
        const auto name = tag.substr(1, tag.find_first_of(" >") - 1);
        if (inner.empty())
            body += tag.substr(0, tag.size() - 1) + "/>";
        else
            body += tag + inner + "</" + name + ">";
    }
    auto tag = start_tag(root);
    if (body.empty())
        return tag.substr(0, tag.size() - 1) + "/>";
    return tag + body + "</" + root.name() + ">";
}

inline const char* solarsystem_a = R"(<solarsystem>
  <planets>
    <planet>Mercury</planet>
    <planet>Venus</planet>
    <planet>Earth</planet>
  </planets>
</solarsystem>)";

inline const char* solarsystem_b = R"(<solarsystem>
  <planets>
    <planet>Venus</planet>
    <planet>Earth</planet>
    <planet>Mars</planet>
  </planets>
</solarsystem>)";

} // namespace dxq::testing
