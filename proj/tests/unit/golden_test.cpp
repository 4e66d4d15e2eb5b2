#include "example_exchange.hpp"
#include "network.hpp"

#include <gtest/gtest.h>

using namespace dxq::protocol;
namespace example = dxq::testing::example;

TEST(GoldenTranscriptTest, ReplaysByteExact)
{
    const auto expected = example::transcript();
    const auto actual = dxq::testing::play_example_exchange();
    ASSERT_EQ(actual.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
        EXPECT_EQ(actual[i], expected[i]) << "frame " << i;
}

TEST(GoldenTranscriptTest, ContentLengths)
{
    std::vector<std::string> lengths;
    for (const auto& f : example::transcript()) {
        auto m = parse_message(f);
        if (auto cl = m.get(header::content_length))
            lengths.push_back(*cl);
    }
    // Client query, two fan-outs, two results, merge query, merged result.
    EXPECT_EQ(lengths, (std::vector<std::string>{"23", "23", "8", "23", "8", "51", "9"}));
}

TEST(GoldenTranscriptTest, AssignedIdentifierIsHex)
{
    const auto frames = dxq::testing::play_example_exchange();
    auto ok = parse_message(frames[13]);
    EXPECT_EQ(ok.type, MessageType::ok);
    const auto& to = ok.to().str();
    ASSERT_EQ(to.rfind("http://", 0), 0u);
    EXPECT_EQ(to.substr(7).find_first_not_of("0123456789abcdef"), std::string::npos);
    EXPECT_EQ(ok.get(header::transaction_id), "0");
}
