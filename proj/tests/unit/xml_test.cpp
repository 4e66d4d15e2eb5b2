#include "gen.hpp"

#include "dxq/xml/node.hpp"

#include <gtest/gtest.h>

using namespace dxq::xml;

namespace {

// Trees whose text survives a parse unchanged: never whitespace-only.
Node stable_tree(dxq::testing::Gen& gen, int depth)
{
    static const std::vector<std::string> names = {"a", "b", "planet", "x-y", "n.1", "_z", "ä"};
    std::vector<Attribute> attrs;
    if (gen.chance(0.3))
        attrs.push_back({"id", gen.text(0, 6)});
    if (gen.chance(0.2))
        attrs.push_back({"lang", gen.text(0, 4) + "\t\n"});
    auto node = Node::element(gen.pick(names), attrs);
    const int children = depth > 0 ? gen.between(0, 3) : 0;
    for (int i = 0; i < children; ++i) {
        if (gen.chance(0.3))
            node.append(Node::text(gen.text(0, 4) + "x&<>\"'" + gen.text(0, 4)));
        else
            node.append(stable_tree(gen, depth - 1));
    }
    return node;
}

} // namespace

TEST(XmlParseTest, ParsesElementsAttributesAndText)
{
    auto doc = parse("<?xml version=\"1.0\"?>\n<document id='7'>\n  <a>5</a>\n  <b/>\n</document>");
    EXPECT_EQ(doc.name(), "document");
    ASSERT_EQ(doc.attributes().size(), 1u);
    EXPECT_EQ(doc.attributes()[0], (Attribute{"id", "7"}));
    ASSERT_EQ(doc.children().size(), 2u);
    EXPECT_EQ(doc.children()[0].string_value(), "5");
    EXPECT_TRUE(doc.children()[1].children().empty());
}

TEST(XmlParseTest, DecodesReferences)
{
    auto doc = parse("<t a=\"&quot;&#x41;\">&lt;&amp;&gt;&apos;&#65;&#x20AC;</t>");
    EXPECT_EQ(doc.attributes()[0].value, "\"A");
    EXPECT_EQ(doc.string_value(), "<&>'A€");
}

TEST(XmlParseTest, RejectsOutsideSubset)
{
    for (auto bad : {"", "<a>", "<a></b>", "<a/><b/>", "text", "<!DOCTYPE a><a/>", "<a><!-- c --></a>",
                     "<a><![CDATA[x]]></a>", "<a><?pi x?></a>", "<ns:a/>", "<a x='1' x='2'/>", "<a>&nope;</a>",
                     "<a>&#0;</a>", "<a>\xff</a>", "<a b=c/>", "<1a/>"}) {
        EXPECT_THROW(parse(bad), XmlError) << bad;
    }
}

TEST(XmlParseTest, FragmentsKeepSequence)
{
    auto nodes = parse_fragment("<a>5</a><a>6</a>");
    ASSERT_EQ(nodes.size(), 2u);
    EXPECT_EQ(nodes[1].string_value(), "6");

    auto mixed = parse_fragment("10 <b/>");
    ASSERT_EQ(mixed.size(), 2u);
    EXPECT_TRUE(mixed[0].is_text());
    EXPECT_TRUE(parse_fragment("").empty());
    EXPECT_THROW(parse_fragment("<a>"), XmlError);
}

TEST(XmlSerializeTest, CanonicalForm)
{
    auto n = Node::element("r", {{"k", "a\"b<"}}, {Node::text("1 < 2 & 3"), Node::element("e")});
    EXPECT_EQ(serialize(n), "<r k=\"a&quot;b&lt;\">1 &lt; 2 &amp; 3<e/></r>");
    std::vector<Node> seq{Node::element("a", {}, {Node::text("5")}), Node::element("a", {}, {Node::text("5")})};
    EXPECT_EQ(serialize(seq), "<a>5</a><a>5</a>");
}

TEST(XmlSerializeTest, AppendFoldsText)
{
    auto n = Node::element("r");
    n.append(Node::text("ab"));
    n.append(Node::text(""));
    n.append(Node::text("cd"));
    ASSERT_EQ(n.children().size(), 1u);
    EXPECT_EQ(n.children()[0].text(), "abcd");
}

TEST(XmlPropertyTest, SerializeParseRoundTrip)
{
    dxq::testing::Gen gen(17);
    for (int i = 0; i < 2000; ++i) {
        auto tree = stable_tree(gen, 4);
        auto text = serialize(tree);
        auto back = parse(text);
        ASSERT_EQ(back, tree) << text;
        ASSERT_EQ(serialize(back), text);
    }
}

TEST(XmlPropertyTest, ReparseIsIdempotent)
{
    dxq::testing::Gen gen(23);
    for (int i = 0; i < 1000; ++i) {
        auto once = serialize(parse(serialize(gen.tree(4))));
        ASSERT_EQ(serialize(parse(once)), once);
    }
}
