#include "dxq/merge/merge.hpp"

#include <algorithm>
#include <unordered_set>
#include <variant>

namespace dxq::merge {

namespace {

using protocol::error_code::internal;
using protocol::error_code::query_processor;

// Mutable tree used while unifying the upper levels.
struct MergedElement {
    std::string name;
    std::vector<xml::Attribute> attributes;
    std::vector<std::variant<MergedElement, xml::Node>> children;
    std::unordered_set<std::string> pooled;

    MergedElement* find_unifiable(const xml::Node& element)
    {
        for (auto& child : children) {
            auto* merged = std::get_if<MergedElement>(&child);
            if (merged && merged->name == element.name() && merged->attributes == element.attributes())
                return merged;
        }
        return nullptr;
    }

    xml::Node build() const
    {
        auto node = xml::Node::element(name, attributes);
        for (const auto& child : children) {
            if (const auto* merged = std::get_if<MergedElement>(&child))
                node.append(merged->build());
            else
                node.append(std::get<xml::Node>(child));
        }
        return node;
    }
};

void merge_into(MergedElement& target, const xml::Node& source, int level, int depth)
{
    const int child_level = level + 1;
    for (const auto& child : source.children()) {
        if (child.is_element() && child_level < depth) {
            auto* match = target.find_unifiable(child);
            if (!match) {
                target.children.emplace_back(MergedElement{child.name(), child.attributes(), {}, {}});
                match = &std::get<MergedElement>(target.children.back());
            }
            merge_into(*match, child, child_level, depth);
            continue;
        }
        if (target.pooled.insert(xml::serialize(child)).second)
            target.children.emplace_back(child);
    }
}

const xml::Node& single_root(const XdpResult& result)
{
    if (result.body.size() != 1 || !result.body.front().is_element())
        throw MergeError(internal, "remove-duplicates: result of '" + result.source_name.str() +
                                       "' is not a single element");
    return result.body.front();
}

} // namespace

std::vector<std::string> list_algorithms()
{
    return {std::string(concatenate), std::string(remove_duplicates), std::string(user_defined)};
}

bool is_supported(std::string_view algorithm)
{
    return algorithm == concatenate || algorithm == remove_duplicates || algorithm == user_defined;
}

xml::Node merge_concatenate(std::span<const XdpResult> results)
{
    auto root = xml::Node::element("result");
    for (const auto& result : results) {
        for (const auto& node : result.body)
            root.append(node);
    }
    return root;
}

xml::Node merge_remove_duplicates(std::span<const XdpResult> results, int depth)
{
    if (depth < 1)
        throw MergeError(internal, "remove-duplicates: Depth must be at least 1");
    if (results.empty())
        throw MergeError(internal, "remove-duplicates: no results to merge");

    const auto& first = single_root(results.front());
    MergedElement merged{first.name(), first.attributes(), {}, {}};
    for (const auto& result : results) {
        const auto& root = single_root(result);
        if (root.name() != first.name() || root.attributes() != first.attributes())
            throw MergeError(internal, "remove-duplicates: root element <" + root.name() + "> of '" +
                                           result.source_name.str() + "' does not match <" + first.name() + ">");
        merge_into(merged, root, 0, depth);
    }
    return merged.build();
}

xml::Node build_context_item(std::span<const XdpResult> results)
{
    auto context = xml::Node::element("context-item");
    for (const auto& result : results) {
        auto name = xml::Node::element("name", {}, {xml::Node::text(result.source_name.str())});
        auto xqres = xml::Node::element("xqres", {}, result.body);
        context.append(xml::Node::element(
            "result", {}, {xml::Node::element("xdp", {}, {std::move(name)}), std::move(xqres)}));
    }
    return context;
}

std::string merge_user_defined(std::span<const XdpResult> results, std::string_view merge_query,
                               const query::QueryProcessor& processor)
{
    const auto context = build_context_item(results);
    try {
        return processor.execute(merge_query, context);
    } catch (const query::QueryError& e) {
        throw MergeError(query_processor, e.what());
    } catch (const xml::XmlError& e) {
        throw MergeError(query_processor, e.what());
    }
}

std::string run(const MergeRequest& request, std::span<const XdpResult> results,
                const query::QueryProcessor& processor)
{
    if (request.algorithm == concatenate)
        return xml::serialize(merge_concatenate(results));
    if (request.algorithm == remove_duplicates) {
        if (!request.depth)
            throw MergeError(protocol::error_code::missing_header, "Depth");
        return xml::serialize(merge_remove_duplicates(results, *request.depth));
    }
    if (request.algorithm == user_defined) {
        if (!request.merge_query)
            throw MergeError(protocol::error_code::missing_content, "merge query missing");
        return merge_user_defined(results, *request.merge_query, processor);
    }
    throw MergeError(protocol::error_code::unsupported_merge_algorithm,
                     "unsupported merge algorithm '" + request.algorithm + "'");
}

} // namespace dxq::merge
